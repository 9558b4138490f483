#pragma once

#include <string>

#include "json.hpp"
#include "synthpanel/gsc.hpp"
#include "synthpanel/placebo.hpp"
#include "synthpanel/scm.hpp"

namespace synthpanel {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const ScmFit& fit);
ordered_json to_json(const EffectSummary& s);
ordered_json to_json(const GscFit& fit);

std::string gap_series_csv(const ScmFit& fit);
std::string gsc_path_csv(const GscFit& fit);

// two-space-indented dump with a trailing newline; doubles are emitted as
// shortest round-trip strings so identical results are byte-identical
std::string dump_json(const ordered_json& j);

}  // namespace synthpanel
