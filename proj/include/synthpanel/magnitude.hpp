#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "synthpanel/errors.hpp"

namespace synthpanel {

struct MagnitudeInput {
    double average_log_gap = 0.0;
    double baseline = 0.0;  // counterfactual level per year, currency units
    int horizon_years = 0;
};

struct MagnitudeResult {
    double pct_loss = 0.0;        // 1 - exp(gap)
    double annual_loss = 0.0;     // baseline * pct_loss
    double cumulative_loss = 0.0; // annual_loss summed over the horizon
};

inline MagnitudeResult translate_magnitude(const MagnitudeInput& m) {
    if (m.baseline <= 0.0)
        throw NonPositiveBaseline("baseline must be positive, got " + std::to_string(m.baseline));
    MagnitudeResult r;
    r.pct_loss = 1.0 - std::exp(m.average_log_gap);
    r.annual_loss = m.baseline * r.pct_loss;
    r.cumulative_loss = r.annual_loss * static_cast<double>(m.horizon_years);
    return r;
}

// per-period variant over a log-gap series; cumulative sums the annual losses
inline MagnitudeResult translate_magnitude_series(std::span<const double> log_gaps,
                                                  double baseline) {
    if (baseline <= 0.0)
        throw NonPositiveBaseline("baseline must be positive, got " + std::to_string(baseline));
    MagnitudeResult r;
    double acc_pct = 0.0;
    for (double g : log_gaps) {
        double pct = 1.0 - std::exp(g);
        acc_pct += pct;
        r.cumulative_loss += baseline * pct;
    }
    if (!log_gaps.empty()) {
        r.pct_loss = acc_pct / static_cast<double>(log_gaps.size());
        r.annual_loss = baseline * r.pct_loss;
    }
    return r;
}

}  // namespace synthpanel
