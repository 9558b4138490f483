#include "synthpanel/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthpanel/errors.hpp"
#include "synthpanel/placebo.hpp"
#include "synthpanel/rng.hpp"
#include "synthpanel/serialize.hpp"
#include "synthpanel/util.hpp"

namespace synthpanel {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
}

BalancedPanel load_panel(const RunConfig& config) {
    std::ifstream in(config.data_path);
    if (!in) throw DataError("cannot open data file '" + config.data_path + "'");
    LoadResult loaded = load_long_csv(in, config.schema);

    std::vector<PanelObservation> obs;
    for (auto& o : loaded.observations) {
        bool unit_ok = o.unit == config.treated_unit ||
                       config.donors.empty() ||
                       std::find(config.donors.begin(), config.donors.end(), o.unit) !=
                           config.donors.end();
        bool outcome_ok = std::any_of(config.outcomes.begin(), config.outcomes.end(),
                                      [&](const OutcomeConfig& oc) { return oc.id == o.outcome; });
        if (unit_ok && outcome_ok) obs.push_back(std::move(o));
    }
    BalancedPanel panel = BalancedPanel::build(obs, {config.treated_unit, config.t0});

    for (const auto& oc : config.outcomes) {
        auto available = panel.outcomes();
        if (std::find(available.begin(), available.end(), oc.id) == available.end())
            throw ConfigError("configured outcome '" + oc.id + "' is not present in the data");
    }
    if (!config.donors.empty() && panel.n_donors() != config.donors.size())
        throw ConfigError("donor list references units missing from the data");
    return panel;
}

BalancedPanel apply_outcome_transform(const BalancedPanel& panel, const OutcomeConfig& oc) {
    if (oc.transform.kind == TransformKind::identity) return panel;
    const Eigen::MatrixXd& grid = panel.values(oc.id);
    Eigen::MatrixXd transformed(grid.rows(), grid.cols());
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(grid.cols()));
        for (Eigen::Index t = 0; t < grid.cols(); ++t) row[static_cast<std::size_t>(t)] = grid(i, t);
        auto out = apply_transform(row, oc.transform, panel.periods());
        for (Eigen::Index t = 0; t < grid.cols(); ++t) transformed(i, t) = out[static_cast<std::size_t>(t)];
    }
    return panel.with_outcome_values(oc.id, transformed);
}

}  // namespace

ordered_json run(const RunConfig& config, const StageSelection& stages) {
    BalancedPanel panel = load_panel(config);
    fs::create_directories(config.out_dir);

    FitOptions options;
    options.seed = config.seed;
    options.v_restarts = config.v_restarts;

    ordered_json summary;
    summary["seed"] = config.seed;
    summary["treated_unit"] = config.treated_unit;
    summary["t0"] = config.t0;
    ordered_json rows = ordered_json::array();
    ordered_json failures = ordered_json::array();

    std::vector<ordered_json> outcome_rows(config.outcomes.size());
    std::vector<std::string> outcome_errors(config.outcomes.size());

    parallel_for(config.outcomes.size(), config.jobs, [&](std::size_t oi) {
        const OutcomeConfig& oc = config.outcomes[oi];
        try {
            BalancedPanel work = apply_outcome_transform(panel, oc);
            fs::path dir = fs::path(config.out_dir) / oc.id;
            fs::create_directories(dir);

            ordered_json row;
            row["outcome"] = oc.id;

            ScmFit scm_fit = fit(work, oc.id, config.predictors, options);
            EffectSummary effect = effect_summary(scm_fit);

            if (stages.placebo && config.placebo.enabled) {
                PlaceboDistribution dist = in_space(work, oc.id, config.predictors, options, 1);
                double p_two = p_value_two_sided(dist);
                double p_t0p1 = p_value_left(dist, Horizon::t0_plus_1);
                double p_end = p_value_left(dist, Horizon::end_of_sample);
                RatioTest ratio = rmspe_ratio_p(dist);
                PlaceboCi ci = placebo_ci(dist, effect.average_effect, config.placebo.level);
                Verdict verdict = classify_persistence(p_t0p1, p_end, effect.average_effect);

                effect.ci_low = ci.low;
                effect.ci_high = ci.high;
                effect.p_value = p_two;
                effect.verdict = verdict;

                ordered_json pj;
                pj["p_two_sided"] = p_two;
                pj["p_left_t0_plus_1"] = p_t0p1;
                pj["p_left_end_of_sample"] = p_end;
                pj["rmspe_ratio"] = ratio.treated_ratio;
                pj["rmspe_ratio_p"] = ratio.p;
                pj["rmspe_ratio_excluded_units"] = ratio.n_excluded;
                pj["ci_centered"] = {ci.low, ci.high};
                pj["ci_gaussian"] = {ci.gauss_low, ci.gauss_high};
                pj["placebo_effect_quantiles"] = {ci.raw_q_low, ci.raw_q_high};
                pj["verdict"] = to_string(verdict);
                if (config.placebo.in_time_pseudo_t0) {
                    InTimeResult it = in_time(work, oc.id, *config.placebo.in_time_pseudo_t0,
                                              config.predictors, options, 1);
                    pj["in_time_pseudo_t0"] = *config.placebo.in_time_pseudo_t0;
                    pj["in_time_average_effect"] = it.pseudo_effect.average_effect;
                    pj["in_time_p"] = it.p_value;
                }
                write_file(dir / "placebo.csv", placebo_csv(dist));
                write_file(dir / "placebo_gaps.csv", placebo_gaps_csv(dist));
                write_file(dir / "placebo_summary.json", dump_json(pj));

                row["p_two_sided"] = p_two;
                row["p_left_t0_plus_1"] = p_t0p1;
                row["p_left_end_of_sample"] = p_end;
                row["rmspe_ratio_p"] = ratio.p;
                row["verdict"] = to_string(verdict);
            }

            write_file(dir / "scm_fit.json", dump_json(to_json(scm_fit)));
            write_file(dir / "gaps.csv", gap_series_csv(scm_fit));
            write_file(dir / "effect.json", dump_json(to_json(effect)));

            row["average_effect"] = effect.average_effect;
            row["gap_sd"] = effect.gap_sd;
            row["end_of_sample_effect"] = effect.end_of_sample_effect;
            if (effect.ci_low) row["ci_low"] = *effect.ci_low;
            if (effect.ci_high) row["ci_high"] = *effect.ci_high;
            row["rmspe_pre"] = scm_fit.diagnostics.rmspe_pre;
            row["r2_pre"] = scm_fit.diagnostics.r2_pre;

            if (stages.gsc && config.gsc.enabled) {
                BootstrapConfig boot = config.gsc.bootstrap;
                boot.seed = Rng::derive(config.seed, "gsc/" + oc.id);
                GscFit g = gsc_fit(work, oc.id, config.gsc.r, boot, 1);
                ordered_json gj = to_json(g);
                if (config.gsc.in_time_backdate) {
                    double p = gsc_in_time_placebo(work, oc.id, *config.gsc.in_time_backdate,
                                                   config.gsc.r, boot, 1);
                    gj["in_time_backdate"] = *config.gsc.in_time_backdate;
                    gj["in_time_p"] = p;
                    row["gsc_in_time_p"] = p;
                }
                write_file(dir / "gsc.json", dump_json(gj));
                write_file(dir / "gsc_path.csv", gsc_path_csv(g));
                row["gsc_r"] = g.r;
                row["gsc_average_att"] = g.average_att;
                row["gsc_ci_low"] = g.att_ci_low;
                row["gsc_ci_high"] = g.att_ci_high;
                row["gsc_p"] = g.p_value;
            }

            outcome_rows[oi] = std::move(row);
        } catch (const std::exception& ex) {
            outcome_errors[oi] = ex.what();
        }
    });

    for (std::size_t oi = 0; oi < config.outcomes.size(); ++oi) {
        if (!outcome_errors[oi].empty()) {
            failures.push_back({{"outcome", config.outcomes[oi].id},
                                {"error", outcome_errors[oi]}});
        } else {
            rows.push_back(outcome_rows[oi]);
        }
    }
    summary["outcomes"] = rows;
    summary["failures"] = failures;

    // combined table mirroring the effect/placebo report layout
    std::ostringstream csv;
    csv << "outcome,average_effect,gap_sd,ci_low,ci_high,end_of_sample_effect,p_two_sided,"
           "rmspe_ratio_p,p_left_t0_plus_1,p_left_end_of_sample,verdict,gsc_r,gsc_average_att,"
           "gsc_p\n";
    auto cell = [](const ordered_json& row, const char* key) {
        if (!row.contains(key)) return std::string{};
        const auto& v = row.at(key);
        if (v.is_number_float()) return fmt_double(v.get<double>());
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        return v.get<std::string>();
    };
    for (const auto& row : rows) {
        csv << cell(row, "outcome") << ',' << cell(row, "average_effect") << ','
            << cell(row, "gap_sd") << ',' << cell(row, "ci_low") << ',' << cell(row, "ci_high")
            << ',' << cell(row, "end_of_sample_effect") << ',' << cell(row, "p_two_sided") << ','
            << cell(row, "rmspe_ratio_p") << ',' << cell(row, "p_left_t0_plus_1") << ','
            << cell(row, "p_left_end_of_sample") << ',' << cell(row, "verdict") << ','
            << cell(row, "gsc_r") << ',' << cell(row, "gsc_average_att") << ','
            << cell(row, "gsc_p") << '\n';
    }
    write_file(fs::path(config.out_dir) / "summary.csv", csv.str());
    write_file(fs::path(config.out_dir) / "summary.json", dump_json(summary));
    return summary;
}

}  // namespace synthpanel
