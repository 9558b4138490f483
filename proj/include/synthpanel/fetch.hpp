#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace synthpanel {

struct SeriesSpec {
    std::string code;     // external series code in the source
    std::string outcome;  // outcome id in the emitted panel
};

struct FetchResult {
    std::string long_csv;               // standard unit,period,outcome,value
    nlohmann::ordered_json provenance;  // source, codes, retrieval timestamp
};

// Source is either a local file path or an http URL. The source body is a CSV
// with header code,unit,period,value. HTTP responses are cached under
// cache_dir (default from SYNTHPANEL_CACHE); a cached body is replayed
// without touching the network.
FetchResult fetch_panel(const std::string& source, const std::vector<SeriesSpec>& series,
                        const std::string& cache_dir = {});

}  // namespace synthpanel
