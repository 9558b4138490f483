#include "synthpanel/fetch.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "synthpanel/errors.hpp"
#include "synthpanel/panel.hpp"
#include "synthpanel/util.hpp"

// after Eigen: httplib pulls in system headers whose macros clash with it
#include "httplib.h"

namespace synthpanel {

namespace fs = std::filesystem;

namespace {

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::string cache_key(const std::string& url) {
    std::string key;
    for (char c : url)
        key += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return key + ".csv";
}

std::string http_get(const std::string& url) {
    if (url.rfind("https://", 0) == 0)
        throw SourceUnreachable("https sources are not supported; mirror the file locally: " + url);
    std::string rest = url.substr(7);
    auto slash = rest.find('/');
    std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
    int port = 80;
    auto colon = host.find(':');
    if (colon != std::string::npos) {
        port = std::stoi(host.substr(colon + 1));
        host = host.substr(0, colon);
    }
    httplib::Client client(host, port);
    client.set_connection_timeout(10);
    auto res = client.Get(path);
    if (!res || res->status != 200)
        throw SourceUnreachable("GET " + url + " failed" +
                                (res ? " with status " + std::to_string(res->status) : ""));
    return res->body;
}

std::string read_source(const std::string& source, const std::string& cache_dir,
                        std::string& resolved_from) {
    if (!is_url(source)) {
        std::ifstream in(source, std::ios::binary);
        if (!in) throw SourceUnreachable("cannot open source file '" + source + "'");
        std::ostringstream body;
        body << in.rdbuf();
        resolved_from = "file";
        return body.str();
    }
    std::string dir = cache_dir;
    if (dir.empty())
        if (const char* env = std::getenv("SYNTHPANEL_CACHE")) dir = env;
    if (!dir.empty()) {
        fs::path cached = fs::path(dir) / cache_key(source);
        if (fs::exists(cached)) {
            std::ifstream in(cached, std::ios::binary);
            std::ostringstream body;
            body << in.rdbuf();
            resolved_from = "cache";
            return body.str();
        }
        std::string body = http_get(source);
        fs::create_directories(dir);
        std::ofstream out(cached, std::ios::binary);
        out << body;
        resolved_from = "http";
        return body;
    }
    resolved_from = "http";
    return http_get(source);
}

}  // namespace

FetchResult fetch_panel(const std::string& source, const std::vector<SeriesSpec>& series,
                        const std::string& cache_dir) {
    std::string resolved_from;
    std::string body = read_source(source, cache_dir, resolved_from);

    // source format: code,unit,period,value; reuse the long-csv parser with
    // code in the unit slot and unit in the outcome slot
    CsvSchema schema;
    schema.unit = "code";
    schema.outcome = "unit";
    std::istringstream in(body);
    LoadResult loaded = load_long_csv(in, schema);

    std::map<std::string, std::string> code_to_outcome;
    for (const auto& s : series) code_to_outcome[s.code] = s.outcome;

    std::map<std::string, bool> seen_code;
    std::ostringstream out;
    out << "unit,period,outcome,value\n";
    for (const auto& o : loaded.observations) {
        auto it = code_to_outcome.find(o.unit);  // o.unit holds the series code
        if (it == code_to_outcome.end()) continue;
        seen_code[o.unit] = true;
        out << o.outcome << ',' << o.period << ',' << it->second << ',' << fmt_double(o.value)
            << '\n';
    }
    for (const auto& s : series)
        if (!seen_code.count(s.code))
            throw UnknownSeriesCode("series code '" + s.code + "' not found in source '" +
                                    source + "'");

    FetchResult result;
    result.long_csv = out.str();
    result.provenance["source"] = source;
    result.provenance["resolved_from"] = resolved_from;
    nlohmann::ordered_json codes = nlohmann::ordered_json::array();
    for (const auto& s : series) codes.push_back({{"code", s.code}, {"outcome", s.outcome}});
    result.provenance["series"] = codes;
    auto now = std::chrono::system_clock::now();
    result.provenance["retrieved_at_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    return result;
}

}  // namespace synthpanel
