#include "synthpanel/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "synthpanel/errors.hpp"
#include "synthpanel/util.hpp"

namespace synthpanel {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw NonNumericValue("cannot parse '" + s + "' as a number (" + context + ")");
    return v;
}

int parse_int(const std::string& s, const std::string& context) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw NonNumericValue("cannot parse '" + s + "' as an integer period (" + context + ")");
    return v;
}

}  // namespace

LoadResult load_long_csv(std::istream& source, const CsvSchema& schema) {
    std::string header_line;
    if (!std::getline(source, header_line)) throw MalformedRow("empty input, no header row");
    auto header = split_csv_line(header_line);

    auto col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw MalformedRow("header is missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t c_unit = col(schema.unit);
    std::size_t c_period = col(schema.period);
    std::size_t c_outcome = col(schema.outcome);
    std::size_t c_value = col(schema.value);

    LoadResult result;
    std::set<std::tuple<std::string, int, std::string>> seen;
    std::string line;
    std::size_t row = 0;
    while (std::getline(source, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw MalformedRow("row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " columns, expected " +
                               std::to_string(header.size()));
        std::string ctx = "row " + std::to_string(row);
        if (fields[c_value].empty()) {
            result.empty_value_rows.push_back(row);
            continue;
        }
        PanelObservation obs;
        obs.unit = fields[c_unit];
        obs.period = parse_int(fields[c_period], ctx);
        obs.outcome = fields[c_outcome];
        obs.value = parse_double(fields[c_value], ctx);
        if (!std::isfinite(obs.value))
            throw NonNumericValue("non-finite value at " + ctx);
        auto key = std::make_tuple(obs.unit, obs.period, obs.outcome);
        if (!seen.insert(key).second)
            throw DuplicateKey("(" + obs.unit + "," + std::to_string(obs.period) + "," +
                               obs.outcome + ") appears more than once (row " +
                               std::to_string(row) + ")");
        result.observations.push_back(std::move(obs));
    }
    return result;
}

BalancedPanel BalancedPanel::build(const std::vector<PanelObservation>& obs,
                                   const TreatmentAssignment& assignment) {
    BalancedPanel p;
    p.t0_ = assignment.t0;

    std::set<int> period_set;
    std::vector<std::string> units_in_order;
    std::set<std::string> unit_set;
    std::set<std::string> outcome_set;
    for (const auto& o : obs) {
        period_set.insert(o.period);
        if (unit_set.insert(o.unit).second) units_in_order.push_back(o.unit);
        outcome_set.insert(o.outcome);
    }
    if (!unit_set.count(assignment.treated_unit))
        throw TreatedUnitMissing("treated unit '" + assignment.treated_unit +
                                 "' not present in observations");

    p.units_.push_back(assignment.treated_unit);
    for (const auto& u : units_in_order)
        if (u != assignment.treated_unit) p.units_.push_back(u);

    p.periods_.assign(period_set.begin(), period_set.end());

    std::map<std::string, std::size_t> unit_index;
    for (std::size_t i = 0; i < p.units_.size(); ++i) unit_index[p.units_[i]] = i;
    std::map<int, std::size_t> period_pos;
    for (std::size_t t = 0; t < p.periods_.size(); ++t) period_pos[p.periods_[t]] = t;

    const double sentinel = std::numeric_limits<double>::quiet_NaN();
    for (const auto& oc : outcome_set)
        p.values_[oc] = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.units_.size()),
                                                  static_cast<Eigen::Index>(p.periods_.size()),
                                                  sentinel);
    for (const auto& o : obs) {
        if (!std::isfinite(o.value))
            throw NonNumericValue("non-finite value for (" + o.unit + "," +
                                  std::to_string(o.period) + "," + o.outcome + ")");
        p.values_[o.outcome](static_cast<Eigen::Index>(unit_index[o.unit]),
                             static_cast<Eigen::Index>(period_pos[o.period])) = o.value;
    }

    std::string missing;
    int n_missing = 0;
    for (const auto& [oc, grid] : p.values_) {
        for (std::size_t i = 0; i < p.units_.size(); ++i)
            for (std::size_t t = 0; t < p.periods_.size(); ++t)
                if (std::isnan(grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)))) {
                    ++n_missing;
                    if (!missing.empty()) missing += "; ";
                    missing += "(" + p.units_[i] + "," + std::to_string(p.periods_[t]) + "," + oc + ")";
                }
    }
    if (n_missing > 0)
        throw UnbalancedPanel(std::to_string(n_missing) + " missing cell(s): " + missing);

    p.validate();
    return p;
}

BalancedPanel BalancedPanel::from_grid(std::vector<std::string> units, std::vector<int> periods,
                                       std::map<std::string, Eigen::MatrixXd> values,
                                       const std::string& treated_unit, int t0) {
    BalancedPanel p;
    auto it = std::find(units.begin(), units.end(), treated_unit);
    if (it == units.end())
        throw TreatedUnitMissing("treated unit '" + treated_unit + "' not in unit list");
    std::size_t ti = static_cast<std::size_t>(it - units.begin());
    if (ti != 0) {
        std::rotate(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(ti),
                    units.begin() + static_cast<std::ptrdiff_t>(ti) + 1);
        for (auto& [oc, grid] : values) {
            Eigen::MatrixXd reordered = grid;
            reordered.row(0) = grid.row(static_cast<Eigen::Index>(ti));
            for (std::size_t i = 0; i < ti; ++i)
                reordered.row(static_cast<Eigen::Index>(i + 1)) = grid.row(static_cast<Eigen::Index>(i));
            grid = reordered;
        }
    }
    p.units_ = std::move(units);
    p.periods_ = std::move(periods);
    p.values_ = std::move(values);
    p.t0_ = t0;
    for (const auto& [oc, grid] : p.values_) {
        if (grid.rows() != static_cast<Eigen::Index>(p.units_.size()) ||
            grid.cols() != static_cast<Eigen::Index>(p.periods_.size()))
            throw UnbalancedPanel("grid for '" + oc + "' does not match units x periods");
        if (!grid.allFinite()) throw NonNumericValue("non-finite entry in grid for '" + oc + "'");
    }
    p.validate();
    return p;
}

void BalancedPanel::validate() const {
    if (units_.size() < 3)
        throw UnbalancedPanel("need a treated unit plus at least 2 donors, have " +
                              std::to_string(units_.size()) + " unit(s)");
    if (values_.empty()) throw UnbalancedPanel("no outcomes present");
    for (std::size_t t = 1; t < periods_.size(); ++t)
        if (periods_[t] != periods_[t - 1] + 1)
            throw UnbalancedPanel("periods are not contiguous between " +
                                  std::to_string(periods_[t - 1]) + " and " +
                                  std::to_string(periods_[t]));
    if (t0_ < periods_.front() + 1)
        throw InsufficientPrePeriods("t0=" + std::to_string(t0_) +
                                     " leaves fewer than 2 pre-treatment periods");
    if (t0_ >= periods_.back())
        throw NoPostPeriods("t0=" + std::to_string(t0_) + " is at or after the last period " +
                            std::to_string(periods_.back()));
}

std::vector<std::string> BalancedPanel::outcomes() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [oc, grid] : values_) out.push_back(oc);
    return out;
}

const Eigen::MatrixXd& BalancedPanel::values(const std::string& outcome) const {
    auto it = values_.find(outcome);
    if (it == values_.end()) throw DataError("unknown outcome '" + outcome + "'");
    return it->second;
}

std::size_t BalancedPanel::period_index(int year) const {
    if (year < periods_.front() || year > periods_.back())
        throw DataError("period " + std::to_string(year) + " outside panel range");
    return static_cast<std::size_t>(year - periods_.front());
}

std::vector<int> BalancedPanel::pre_period() const {
    return {periods_.begin(), periods_.begin() + static_cast<std::ptrdiff_t>(n_pre())};
}

std::vector<int> BalancedPanel::post_period() const {
    return {periods_.begin() + static_cast<std::ptrdiff_t>(n_pre()), periods_.end()};
}

BalancedPanel BalancedPanel::relabel_treated(const std::string& new_treated,
                                             const std::vector<std::string>& exclude) const {
    std::vector<std::string> kept;
    std::vector<std::size_t> kept_idx;
    for (std::size_t i = 0; i < units_.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), units_[i]) != exclude.end()) continue;
        kept.push_back(units_[i]);
        kept_idx.push_back(i);
    }
    std::map<std::string, Eigen::MatrixXd> grids;
    for (const auto& [oc, grid] : values_) {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(kept.size()), grid.cols());
        for (std::size_t i = 0; i < kept_idx.size(); ++i)
            g.row(static_cast<Eigen::Index>(i)) = grid.row(static_cast<Eigen::Index>(kept_idx[i]));
        grids[oc] = std::move(g);
    }
    return from_grid(std::move(kept), periods_, std::move(grids), new_treated, t0_);
}

BalancedPanel BalancedPanel::truncated(int last_period, int new_t0) const {
    std::size_t keep = period_index(last_period) + 1;
    std::vector<int> periods(periods_.begin(), periods_.begin() + static_cast<std::ptrdiff_t>(keep));
    std::map<std::string, Eigen::MatrixXd> grids;
    for (const auto& [oc, grid] : values_)
        grids[oc] = grid.leftCols(static_cast<Eigen::Index>(keep));
    return from_grid(units_, std::move(periods), std::move(grids), treated_unit(), new_t0);
}

BalancedPanel BalancedPanel::with_outcome_values(const std::string& outcome,
                                                 const Eigen::MatrixXd& v) const {
    BalancedPanel p = *this;
    if (!p.values_.count(outcome)) throw DataError("unknown outcome '" + outcome + "'");
    if (v.rows() != static_cast<Eigen::Index>(n_units()) ||
        v.cols() != static_cast<Eigen::Index>(n_periods()))
        throw DataError("replacement grid shape mismatch for '" + outcome + "'");
    p.values_[outcome] = v;
    return p;
}

std::string BalancedPanel::to_long_csv() const {
    std::ostringstream out;
    out << "unit,period,outcome,value\n";
    for (const auto& [oc, grid] : values_)
        for (std::size_t i = 0; i < units_.size(); ++i)
            for (std::size_t t = 0; t < periods_.size(); ++t)
                out << units_[i] << ',' << periods_[t] << ',' << oc << ','
                    << fmt_double(grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)))
                    << '\n';
    return out.str();
}

}  // namespace synthpanel
