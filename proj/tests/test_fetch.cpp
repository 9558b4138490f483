#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "synthpanel/errors.hpp"
#include "synthpanel/fetch.hpp"
#include "synthpanel/panel.hpp"

using namespace synthpanel;
namespace fs = std::filesystem;

namespace {

fs::path make_tmp(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("synthpanel_fetch_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string two_series_source() {
    std::ostringstream csv;
    csv << "code,unit,period,value\n";
    for (const char* u : {"IRN", "EGY", "TUR"})
        for (int y = 2000; y <= 2003; ++y) {
            csv << "NY.GDP," << u << ',' << y << ',' << (y - 1990) << '\n';
            csv << "SP.POP," << u << ',' << y << ',' << (y - 1980) << '\n';
        }
    return csv.str();
}

}  // namespace

TEST_CASE("a local file source with two series merges into one long csv") {
    fs::path dir = make_tmp("local");
    {
        std::ofstream out(dir / "src.csv");
        out << two_series_source();
    }
    FetchResult r = fetch_panel((dir / "src.csv").string(),
                                {{"NY.GDP", "gdp"}, {"SP.POP", "pop"}});
    CHECK(r.long_csv.rfind("unit,period,outcome,value\n", 0) == 0);
    CHECK(r.long_csv.find("IRN,2000,gdp,10") != std::string::npos);
    CHECK(r.long_csv.find("TUR,2003,pop,23") != std::string::npos);
    CHECK(r.provenance["resolved_from"] == "file");

    std::istringstream in(r.long_csv);
    auto loaded = load_long_csv(in);
    CHECK(loaded.observations.size() == 24);
    BalancedPanel p = BalancedPanel::build(loaded.observations, {"IRN", 2001});
    CHECK(p.outcomes() == std::vector<std::string>{"gdp", "pop"});
}

TEST_CASE("unknown series codes are named") {
    fs::path dir = make_tmp("unknown");
    {
        std::ofstream out(dir / "src.csv");
        out << two_series_source();
    }
    CHECK_THROWS_WITH_AS(
        fetch_panel((dir / "src.csv").string(), {{"XX.NOPE", "ghost"}}),
        doctest::Contains("XX.NOPE"), UnknownSeriesCode);
}

TEST_CASE("unreachable sources raise the transport error") {
    CHECK_THROWS_AS(fetch_panel("/no/such/file.csv", {{"A", "a"}}), SourceUnreachable);
    CHECK_THROWS_AS(fetch_panel("https://example.invalid/x.csv", {{"A", "a"}}),
                    SourceUnreachable);
}

TEST_CASE("cached http fixtures replay without touching the network") {
    fs::path cache = make_tmp("cache");
    // fixture recorded once: 13 countries x 1 series, keyed by the sanitized URL
    std::ostringstream csv;
    csv << "code,unit,period,value\n";
    for (int u = 0; u < 13; ++u)
        for (int y = 1996; y <= 2000; ++y)
            csv << "NY.GDP,C" << u << ',' << y << ',' << (u + y * 0.001) << '\n';
    {
        std::ofstream out(cache / "http___wdi_example_test_series_csv.csv");
        out << csv.str();
    }

    FetchResult r = fetch_panel("http://wdi.example.test/series.csv", {{"NY.GDP", "gdp"}},
                                cache.string());
    CHECK(r.provenance["resolved_from"] == "cache");
    std::istringstream in(r.long_csv);
    auto loaded = load_long_csv(in);
    CHECK(loaded.observations.size() == 65);
    BalancedPanel p = BalancedPanel::build(loaded.observations, {"C0", 1997});
    CHECK(p.n_units() == 13);
}
