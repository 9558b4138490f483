#pragma once

#include <optional>
#include <string>
#include <vector>

#include "synthpanel/panel.hpp"
#include "synthpanel/scm.hpp"

namespace synthpanel {

struct PlaceboEntry {
    std::string unit;
    bool is_treated = false;
    bool failed = false;
    std::string failure_reason;
    std::optional<ScmFit> fit;
    double rmspe_pre = 0.0;
    double rmspe_post = 0.0;
    double rmspe_ratio = 0.0;
    bool ratio_valid = false;  // false when rmspe_pre is below the degeneracy floor
    double gap_t0_plus_1 = 0.0;
    double gap_at_end = 0.0;
    double average_post_gap = 0.0;
};

struct PlaceboDistribution {
    std::vector<PlaceboEntry> entries;  // sorted by unit id; exactly one flagged treated

    const PlaceboEntry& treated() const;
    std::size_t n_valid() const;  // entries with a successful fit
};

enum class Horizon { t0_plus_1, end_of_sample };
enum class PlaceboStat { average_post_gap, gap_at_end, gap_t0_plus_1 };

// One refit per unit; each placebo's donor pool excludes the genuinely
// treated unit. Units whose refit throws are recorded with a failure marker.
PlaceboDistribution in_space(const BalancedPanel& panel, const std::string& outcome,
                             const PredictorSpec& spec = {}, const FitOptions& options = {},
                             int jobs = 1);

// p = #{u : |stat_u| >= |stat_treated|} / (#units), treated included
double p_value_two_sided(const PlaceboDistribution& dist,
                         PlaceboStat stat = PlaceboStat::average_post_gap);

// p = #{u : gap_u <= gap_treated} / (#units) at the chosen horizon
double p_value_left(const PlaceboDistribution& dist, Horizon horizon);

struct RatioTest {
    double p = 1.0;
    double treated_ratio = 0.0;
    int n_included = 0;
    int n_excluded = 0;  // degenerate pre-fit units left out
};

RatioTest rmspe_ratio_p(const PlaceboDistribution& dist);

struct PlaceboCi {
    // centered quantile interval: treated +/- q_{(1+level)/2}(|centered placebo effects|)
    double low = 0.0;
    double high = 0.0;
    // Gaussian variant from the placebo sd, emitted alongside
    double gauss_low = 0.0;
    double gauss_high = 0.0;
    // raw placebo-effect quantiles at (1-level)/2 and (1+level)/2
    double raw_q_low = 0.0;
    double raw_q_high = 0.0;
};

PlaceboCi placebo_ci(const PlaceboDistribution& dist, double treated_effect, double level = 0.95);

struct InTimeResult {
    ScmFit fit;
    EffectSummary pseudo_effect;
    double p_value = 1.0;
};

// Refit with a fictitious earlier treatment date on data truncated at the true
// t0; p-value against the in-space distribution refit at the pseudo date.
InTimeResult in_time(const BalancedPanel& panel, const std::string& outcome, int pseudo_t0,
                     const PredictorSpec& spec = {}, const FitOptions& options = {},
                     int jobs = 1);

Verdict classify_persistence(double p_t0_plus_1, double p_end, double average_effect,
                             double alpha = 0.1);

std::string placebo_csv(const PlaceboDistribution& dist);
std::string placebo_gaps_csv(const PlaceboDistribution& dist);

}  // namespace synthpanel
