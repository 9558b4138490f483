#include "synthpanel/config.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "synthpanel/errors.hpp"

namespace synthpanel {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing required field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

PredictorSpec parse_predictors(const json& j) {
    PredictorSpec spec;
    if (!j.contains("predictors")) return spec;
    const json& p = j.at("predictors");
    if (p.is_string()) {
        if (p.get<std::string>() != "all_pre_lags")
            throw ConfigError("field 'predictors': unknown preset '" + p.get<std::string>() + "'");
        return spec;
    }
    if (!p.is_array()) throw ConfigError("field 'predictors' must be a preset name or a list");
    for (const auto& e : p) {
        PredictorEntry entry;
        entry.outcome = get_or<std::string>(e, "outcome", "");
        entry.periods = get_or<std::vector<int>>(e, "periods", {});
        std::string agg = get_or<std::string>(e, "agg", "each_lag");
        if (agg == "each_lag")
            entry.agg = PredictorAgg::each_lag;
        else if (agg == "mean")
            entry.agg = PredictorAgg::mean;
        else
            throw ConfigError("field 'predictors.agg': unknown aggregation '" + agg + "'");
        spec.entries.push_back(std::move(entry));
    }
    return spec;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }

    RunConfig c;
    c.data_path = require<std::string>(j, "data");
    if (j.contains("schema")) {
        const json& s = j.at("schema");
        c.schema.unit = get_or<std::string>(s, "unit", "unit");
        c.schema.period = get_or<std::string>(s, "period", "period");
        c.schema.outcome = get_or<std::string>(s, "outcome", "outcome");
        c.schema.value = get_or<std::string>(s, "value", "value");
    }
    c.treated_unit = require<std::string>(j, "treated_unit");
    c.t0 = require<int>(j, "t0");
    c.donors = get_or<std::vector<std::string>>(j, "donors", {});

    if (!j.contains("outcomes")) throw ConfigError("missing required field 'outcomes'");
    for (const auto& o : j.at("outcomes")) {
        OutcomeConfig oc;
        if (o.is_string()) {
            oc.id = o.get<std::string>();
        } else {
            oc.id = require<std::string>(o, "id");
            oc.transform.kind = transform_kind_from_string(get_or<std::string>(o, "transform",
                                                                               "identity"));
            oc.transform.offset = get_or<double>(o, "offset", 0.0);
        }
        c.outcomes.push_back(std::move(oc));
    }

    c.predictors = parse_predictors(j);

    if (j.contains("placebo")) {
        const json& p = j.at("placebo");
        c.placebo.enabled = get_or<bool>(p, "enabled", true);
        c.placebo.level = get_or<double>(p, "level", 0.95);
        if (p.contains("in_time_pseudo_t0"))
            c.placebo.in_time_pseudo_t0 = p.at("in_time_pseudo_t0").get<int>();
    }
    if (j.contains("gsc")) {
        const json& g = j.at("gsc");
        c.gsc.enabled = get_or<bool>(g, "enabled", true);
        if (g.contains("r") && !g.at("r").is_string())
            c.gsc.r = g.at("r").get<int>();
        c.gsc.r_max = get_or<int>(g, "r_max", 5);
        if (g.contains("bootstrap")) {
            const json& b = g.at("bootstrap");
            c.gsc.bootstrap.replications = get_or<int>(b, "replications", 500);
            c.gsc.bootstrap.level = get_or<double>(b, "level", 0.95);
        }
        if (g.contains("in_time_backdate"))
            c.gsc.in_time_backdate = g.at("in_time_backdate").get<int>();
    }

    c.out_dir = get_or<std::string>(j, "out", "results");
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.v_restarts = get_or<int>(j, "v_restarts", 20);
    c.jobs = get_or<int>(j, "jobs", 1);

    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    if (c.outcomes.empty()) throw ConfigError("field 'outcomes' must not be empty");
    if (!c.donors.empty()) {
        if (std::find(c.donors.begin(), c.donors.end(), c.treated_unit) != c.donors.end())
            throw ConfigError("field 'donors' must not contain the treated unit '" +
                              c.treated_unit + "'");
        if (c.donors.size() < 2)
            throw ConfigError("field 'donors' must list at least 2 donors");
    }
    if (c.placebo.level <= 0.0 || c.placebo.level >= 1.0)
        throw ConfigError("field 'placebo.level' must be in (0,1)");
    if (c.gsc.bootstrap.level <= 0.0 || c.gsc.bootstrap.level >= 1.0)
        throw ConfigError("field 'gsc.bootstrap.level' must be in (0,1)");
    if (c.gsc.bootstrap.replications < 100)
        throw ConfigError("field 'gsc.bootstrap.replications' must be >= 100");
    if (c.placebo.in_time_pseudo_t0 && *c.placebo.in_time_pseudo_t0 >= c.t0)
        throw ConfigError("field 'placebo.in_time_pseudo_t0' must predate t0");
}

}  // namespace synthpanel
