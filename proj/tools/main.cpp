#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synthpanel/config.hpp"
#include "synthpanel/dgp.hpp"
#include "synthpanel/errors.hpp"
#include "synthpanel/fetch.hpp"
#include "synthpanel/magnitude.hpp"
#include "synthpanel/run.hpp"
#include "synthpanel/serialize.hpp"
#include "synthpanel/util.hpp"

namespace fs = std::filesystem;
using namespace synthpanel;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> jobs;
};

RunConfig load_with_overrides(const GlobalArgs& args) {
    if (args.config_path.empty()) throw ConfigError("--config is required for this subcommand");
    RunConfig config = load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out) config.out_dir = *args.out;
    if (args.jobs) config.jobs = *args.jobs;
    return config;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
}

int run_stages(const GlobalArgs& args, const StageSelection& stages) {
    RunConfig config = load_with_overrides(args);
    nlohmann::ordered_json summary = run(config, stages);
    std::cout << dump_json(summary);
    if (!summary["failures"].empty()) {
        std::cerr << summary["failures"].size() << " outcome(s) failed\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic control toolkit for single-treated-unit panel studies"};
    app.require_subcommand(1);

    GlobalArgs globals;
    app.add_option("--config", globals.config_path, "run configuration file (JSON)");
    std::uint64_t seed_arg = 0;
    std::string out_arg;
    int jobs_arg = 0;
    auto* seed_opt = app.add_option("--seed", seed_arg, "override the configured seed");
    auto* out_opt = app.add_option("--out", out_arg, "override the output directory");
    auto* jobs_opt = app.add_option("--jobs", jobs_arg, "worker threads (0 = hardware)");

    auto* ingest = app.add_subcommand("ingest", "validate data and report panel shape");
    auto* fit_cmd = app.add_subcommand("fit", "synthetic control fits only");
    auto* placebo_cmd = app.add_subcommand("placebo", "fits plus permutation inference");
    auto* gsc_cmd = app.add_subcommand("gsc", "generalized synthetic control only");
    auto* report = app.add_subcommand("report", "full pipeline: fit, placebo, gsc");

    auto* simulate = app.add_subcommand("simulate", "emit a synthetic panel as long CSV");
    std::string sim_mode = "factor", sim_out = "panel.csv";
    int sim_donors = 12, sim_periods = 29, sim_pre = 11, sim_r = 0;
    double sim_sigma = 0.1, sim_delta = 0.0;
    std::uint64_t sim_seed = 0;
    simulate->add_option("--mode", sim_mode, "factor | convex | two_way")->capture_default_str();
    simulate->add_option("--donors", sim_donors)->capture_default_str();
    simulate->add_option("--periods", sim_periods)->capture_default_str();
    simulate->add_option("--pre", sim_pre, "number of pre-treatment periods")->capture_default_str();
    simulate->add_option("--factors", sim_r)->capture_default_str();
    simulate->add_option("--sigma", sim_sigma)->capture_default_str();
    simulate->add_option("--delta", sim_delta, "constant post-period effect")->capture_default_str();
    simulate->add_option("--sim-seed", sim_seed)->capture_default_str();
    simulate->add_option("--sim-out", sim_out)->capture_default_str();

    auto* fetch_cmd = app.add_subcommand("fetch", "merge external series into a long CSV");
    std::string fetch_source, fetch_out = "panel.csv", fetch_cache;
    std::vector<std::string> fetch_series;
    fetch_cmd->add_option("--source", fetch_source, "file path or http URL")->required();
    fetch_cmd->add_option("--series", fetch_series, "code=outcome mappings")->required();
    fetch_cmd->add_option("--fetch-out", fetch_out)->capture_default_str();
    fetch_cmd->add_option("--cache", fetch_cache, "cache dir (default $SYNTHPANEL_CACHE)");

    auto* magnitude = app.add_subcommand("magnitude", "translate a log gap into level losses");
    double mag_gap = 0.0, mag_baseline = 0.0;
    int mag_years = 0;
    magnitude->add_option("--gap", mag_gap, "average log gap")->required();
    magnitude->add_option("--baseline", mag_baseline, "counterfactual level per year")->required();
    magnitude->add_option("--years", mag_years, "horizon in years")->required();

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) globals.seed = seed_arg;
    if (*out_opt) globals.out = out_arg;
    if (*jobs_opt) globals.jobs = jobs_arg;

    try {
        if (*ingest) {
            RunConfig config = load_with_overrides(globals);
            std::ifstream in(config.data_path);
            if (!in) throw DataError("cannot open data file '" + config.data_path + "'");
            LoadResult loaded = load_long_csv(in, config.schema);
            for (auto row : loaded.empty_value_rows)
                std::cerr << "warning: empty value cell at data row " << row << "\n";
            BalancedPanel panel =
                BalancedPanel::build(loaded.observations, {config.treated_unit, config.t0});
            nlohmann::ordered_json j;
            j["units"] = panel.units();
            j["periods"] = {panel.periods().front(), panel.periods().back()};
            j["outcomes"] = panel.outcomes();
            j["t0"] = panel.t0();
            j["n_pre"] = panel.n_pre();
            j["n_post"] = panel.n_post();
            j["empty_value_rows"] = loaded.empty_value_rows;
            std::cout << dump_json(j);
            return 0;
        }
        if (*fit_cmd) return run_stages(globals, {true, false, false});
        if (*placebo_cmd) return run_stages(globals, {true, true, false});
        if (*gsc_cmd) return run_stages(globals, {true, false, true});
        if (*report) return run_stages(globals, {true, true, true});

        if (*simulate) {
            DgpSpec spec;
            spec.n_donors = sim_donors;
            spec.n_periods = sim_periods;
            spec.n_pre = sim_pre;
            spec.n_factors = sim_r;
            spec.noise_sd = sim_sigma;
            if (sim_delta != 0.0) spec.delta = {sim_delta};
            spec.seed = sim_seed;
            SimulatedPanel sim = [&] {
                if (sim_mode == "convex") {
                    spec.mode = DgpMode::convex_combination;
                    return simulate_convex_panel(spec);
                }
                if (sim_mode == "two_way") {
                    spec.mode = DgpMode::two_way_fe;
                    return simulate_factor_panel(spec);
                }
                if (sim_mode == "factor") {
                    spec.mode = DgpMode::factor_model;
                    return simulate_factor_panel(spec);
                }
                throw ConfigError("unknown simulate mode '" + sim_mode + "'");
            }();
            write_file(sim_out, sim.panel.to_long_csv());
            nlohmann::ordered_json truth;
            truth["att_path"] = sim.att_path;
            if (sim.true_weights.size() > 0) {
                nlohmann::ordered_json w = nlohmann::ordered_json::array();
                for (Eigen::Index i = 0; i < sim.true_weights.size(); ++i)
                    w.push_back(sim.true_weights(i));
                truth["true_weights"] = w;
            }
            write_file(fs::path(sim_out).replace_extension(".truth.json"), dump_json(truth));
            std::cout << "wrote " << sim_out << "\n";
            return 0;
        }

        if (*fetch_cmd) {
            std::vector<SeriesSpec> series;
            for (const auto& s : fetch_series) {
                auto eq = s.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("--series entries must be code=outcome, got '" + s + "'");
                series.push_back({s.substr(0, eq), s.substr(eq + 1)});
            }
            FetchResult result = fetch_panel(fetch_source, series, fetch_cache);
            write_file(fetch_out, result.long_csv);
            write_file(fs::path(fetch_out).concat(".provenance.json"),
                       dump_json(result.provenance));
            std::cout << "wrote " << fetch_out << "\n";
            return 0;
        }

        if (*magnitude) {
            MagnitudeResult r = translate_magnitude({mag_gap, mag_baseline, mag_years});
            nlohmann::ordered_json j;
            j["pct_loss"] = r.pct_loss;
            j["annual_loss"] = r.annual_loss;
            j["cumulative_loss"] = r.cumulative_loss;
            std::cout << dump_json(j);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
