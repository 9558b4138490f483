#pragma once

#include <string>

#include "json.hpp"
#include "synthpanel/config.hpp"

namespace synthpanel {

struct StageSelection {
    bool fit = true;
    bool placebo = true;
    bool gsc = true;
};

// Executes the configured pipeline, writing one subdirectory per outcome plus
// a combined summary table. Per-outcome failures are isolated: remaining
// outcomes still run and failures are listed in the summary.
nlohmann::ordered_json run(const RunConfig& config, const StageSelection& stages = {});

}  // namespace synthpanel
