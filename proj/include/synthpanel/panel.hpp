#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace synthpanel {

struct PanelObservation {
    std::string unit;
    int period = 0;
    std::string outcome;
    double value = 0.0;
};

struct TreatmentAssignment {
    std::string treated_unit;
    int t0 = 0;  // last pre-treatment period
};

struct CsvSchema {
    std::string unit = "unit";
    std::string period = "period";
    std::string outcome = "outcome";
    std::string value = "value";
};

struct LoadResult {
    std::vector<PanelObservation> observations;
    std::vector<std::size_t> empty_value_rows;  // 1-based data row numbers, reported upstream
};

LoadResult load_long_csv(std::istream& source, const CsvSchema& schema = {});

// Dense units x periods grid per outcome. Treated unit first, donors in input
// order, periods contiguous ascending. Immutable after construction.
class BalancedPanel {
public:
    static BalancedPanel build(const std::vector<PanelObservation>& obs,
                               const TreatmentAssignment& assignment);

    static BalancedPanel from_grid(std::vector<std::string> units, std::vector<int> periods,
                                   std::map<std::string, Eigen::MatrixXd> values,
                                   const std::string& treated_unit, int t0);

    const std::vector<std::string>& units() const { return units_; }
    const std::vector<int>& periods() const { return periods_; }
    std::vector<std::string> outcomes() const;
    const Eigen::MatrixXd& values(const std::string& outcome) const;

    const std::string& treated_unit() const { return units_.front(); }
    int t0() const { return t0_; }

    std::size_t n_units() const { return units_.size(); }
    std::size_t n_donors() const { return units_.size() - 1; }
    std::size_t n_periods() const { return periods_.size(); }

    std::size_t period_index(int year) const;
    // count of pre-treatment periods (first..t0); periods_[n_pre()-1] == t0
    std::size_t n_pre() const { return period_index(t0_) + 1; }
    std::size_t n_post() const { return n_periods() - n_pre(); }

    std::vector<int> pre_period() const;
    std::vector<int> post_period() const;

    // Same grid with a different unit designated as treated; `exclude` units
    // are removed from the donor pool (used by in-space placebos).
    BalancedPanel relabel_treated(const std::string& new_treated,
                                  const std::vector<std::string>& exclude = {}) const;

    // Periods truncated to <= last_period, with a new (earlier) t0. Used by
    // in-time placebos so no genuinely-treated period enters the refit.
    BalancedPanel truncated(int last_period, int new_t0) const;

    BalancedPanel with_outcome_values(const std::string& outcome, const Eigen::MatrixXd& v) const;

    std::string to_long_csv() const;

private:
    BalancedPanel() = default;
    void validate() const;

    std::vector<std::string> units_;
    std::vector<int> periods_;
    std::map<std::string, Eigen::MatrixXd> values_;  // units x periods
    int t0_ = 0;
};

}  // namespace synthpanel
