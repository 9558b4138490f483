#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthpanel/gsc.hpp"
#include "synthpanel/panel.hpp"
#include "synthpanel/scm.hpp"
#include "synthpanel/transform.hpp"

namespace synthpanel {

struct OutcomeConfig {
    std::string id;
    TransformSpec transform;
};

struct PlaceboConfig {
    bool enabled = true;
    double level = 0.95;
    std::optional<int> in_time_pseudo_t0;
};

struct GscConfig {
    bool enabled = true;
    std::optional<int> r;  // unset = auto
    int r_max = 5;
    BootstrapConfig bootstrap;
    std::optional<int> in_time_backdate;
};

struct RunConfig {
    std::string data_path;
    CsvSchema schema;
    std::string treated_unit;
    int t0 = 0;
    std::vector<std::string> donors;
    std::vector<OutcomeConfig> outcomes;
    PredictorSpec predictors;
    PlaceboConfig placebo;
    GscConfig gsc;
    std::string out_dir = "results";
    std::uint64_t seed = 0;
    int v_restarts = 20;
    int jobs = 1;
};

RunConfig load_config(const std::string& path);
void validate(const RunConfig& config);

}  // namespace synthpanel
