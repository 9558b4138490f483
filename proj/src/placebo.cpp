#include "synthpanel/placebo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "synthpanel/errors.hpp"
#include "synthpanel/util.hpp"

namespace synthpanel {

namespace {

constexpr double kRmspeFloor = 1e-8;

double quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    if (xs.empty()) return 0.0;
    if (xs.size() == 1) return xs.front();
    double h = p * (static_cast<double>(xs.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, xs.size() - 1);
    double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

}  // namespace

const PlaceboEntry& PlaceboDistribution::treated() const {
    for (const auto& e : entries)
        if (e.is_treated) return e;
    throw DegenerateDistribution("no treated entry in placebo distribution");
}

std::size_t PlaceboDistribution::n_valid() const {
    std::size_t n = 0;
    for (const auto& e : entries)
        if (!e.failed) ++n;
    return n;
}

PlaceboDistribution in_space(const BalancedPanel& panel, const std::string& outcome,
                             const PredictorSpec& spec, const FitOptions& options, int jobs) {
    const auto& units = panel.units();
    std::vector<PlaceboEntry> entries(units.size());

    parallel_for(units.size(), jobs, [&](std::size_t i) {
        PlaceboEntry& e = entries[i];
        e.unit = units[i];
        e.is_treated = units[i] == panel.treated_unit();
        try {
            BalancedPanel refit_panel =
                e.is_treated ? panel
                             : panel.relabel_treated(units[i], {panel.treated_unit()});
            ScmFit f = fit(refit_panel, outcome, spec, options);
            std::size_t n_pre = refit_panel.n_pre();
            std::vector<double> pre(f.gap_series.data(), f.gap_series.data() + n_pre);
            std::vector<double> post(f.gap_series.data() + n_pre,
                                     f.gap_series.data() + f.gap_series.size());
            e.rmspe_pre = rmspe(pre);
            e.rmspe_post = rmspe(post);
            e.ratio_valid = e.rmspe_pre > kRmspeFloor;
            e.rmspe_ratio = e.ratio_valid ? e.rmspe_post / e.rmspe_pre : 0.0;
            e.gap_t0_plus_1 = f.gap_series(static_cast<Eigen::Index>(n_pre));
            e.gap_at_end = f.gap_series(f.gap_series.size() - 1);
            EffectSummary s = effect_summary(f);
            e.average_post_gap = s.average_effect;
            e.fit = std::move(f);
        } catch (const std::exception& ex) {
            e.failed = true;
            e.failure_reason = ex.what();
        }
    });

    std::stable_sort(entries.begin(), entries.end(),
                     [](const PlaceboEntry& a, const PlaceboEntry& b) { return a.unit < b.unit; });
    return {std::move(entries)};
}

namespace {

double stat_of(const PlaceboEntry& e, PlaceboStat stat) {
    switch (stat) {
        case PlaceboStat::average_post_gap: return e.average_post_gap;
        case PlaceboStat::gap_at_end: return e.gap_at_end;
        case PlaceboStat::gap_t0_plus_1: return e.gap_t0_plus_1;
    }
    return e.average_post_gap;
}

}  // namespace

double p_value_two_sided(const PlaceboDistribution& dist, PlaceboStat stat) {
    const PlaceboEntry& treated = dist.treated();
    double ref = std::abs(stat_of(treated, stat));
    int count = 0, total = 0;
    for (const auto& e : dist.entries) {
        if (e.failed) continue;
        ++total;
        if (std::abs(stat_of(e, stat)) >= ref) ++count;
    }
    if (total == 0) throw DegenerateDistribution("no valid placebo fits");
    return static_cast<double>(count) / static_cast<double>(total);
}

double p_value_left(const PlaceboDistribution& dist, Horizon horizon) {
    PlaceboStat stat = horizon == Horizon::t0_plus_1 ? PlaceboStat::gap_t0_plus_1
                                                     : PlaceboStat::gap_at_end;
    const PlaceboEntry& treated = dist.treated();
    double ref = stat_of(treated, stat);
    int count = 0, total = 0;
    for (const auto& e : dist.entries) {
        if (e.failed) continue;
        ++total;
        if (stat_of(e, stat) <= ref) ++count;
    }
    if (total == 0) throw DegenerateDistribution("no valid placebo fits");
    return static_cast<double>(count) / static_cast<double>(total);
}

RatioTest rmspe_ratio_p(const PlaceboDistribution& dist) {
    const PlaceboEntry& treated = dist.treated();
    if (!treated.ratio_valid)
        throw DegenerateDistribution("treated unit has degenerate pre-period fit");
    RatioTest out;
    out.treated_ratio = treated.rmspe_ratio;
    int count = 0;
    for (const auto& e : dist.entries) {
        if (e.failed) continue;
        if (!e.ratio_valid) {
            ++out.n_excluded;
            continue;
        }
        ++out.n_included;
        if (e.rmspe_ratio >= treated.rmspe_ratio) ++count;
    }
    out.p = static_cast<double>(count) / static_cast<double>(out.n_included);
    return out;
}

PlaceboCi placebo_ci(const PlaceboDistribution& dist, double treated_effect, double level) {
    std::vector<double> effects;
    for (const auto& e : dist.entries)
        if (!e.failed && !e.is_treated) effects.push_back(e.average_post_gap);
    if (effects.size() < 5)
        throw TooFewPlacebos("need at least 5 placebo entries, have " +
                             std::to_string(effects.size()));

    double mean = 0.0;
    for (double x : effects) mean += x;
    mean /= static_cast<double>(effects.size());
    std::vector<double> centered_abs;
    double ss = 0.0;
    for (double x : effects) {
        centered_abs.push_back(std::abs(x - mean));
        ss += (x - mean) * (x - mean);
    }
    double sd = std::sqrt(ss / static_cast<double>(effects.size() - 1));

    PlaceboCi ci;
    double q = quantile(centered_abs, (1.0 + level) / 2.0);
    ci.low = treated_effect - q;
    ci.high = treated_effect + q;
    double z = normal_quantile((1.0 + level) / 2.0);
    ci.gauss_low = treated_effect - z * sd;
    ci.gauss_high = treated_effect + z * sd;
    ci.raw_q_low = quantile(effects, (1.0 - level) / 2.0);
    ci.raw_q_high = quantile(effects, (1.0 + level) / 2.0);
    return ci;
}

InTimeResult in_time(const BalancedPanel& panel, const std::string& outcome, int pseudo_t0,
                     const PredictorSpec& spec, const FitOptions& options, int jobs) {
    if (pseudo_t0 >= panel.t0())
        throw DataError("pseudo t0 " + std::to_string(pseudo_t0) +
                        " must predate the true t0 " + std::to_string(panel.t0()));
    BalancedPanel truncated = panel.truncated(panel.t0(), pseudo_t0);
    ScmFit f = fit(truncated, outcome, spec, options);
    EffectSummary s = effect_summary(f);
    PlaceboDistribution dist = in_space(truncated, outcome, spec, options, jobs);
    double p = p_value_two_sided(dist, PlaceboStat::average_post_gap);
    return {std::move(f), s, p};
}

Verdict classify_persistence(double p_t0_plus_1, double p_end, double average_effect,
                             double alpha) {
    if (average_effect >= 0.0) return Verdict::Null;
    if (p_end <= alpha) return Verdict::PermanentNegative;
    if (p_t0_plus_1 <= alpha) return Verdict::TemporaryNegative;
    return Verdict::NegativeWeak;
}

std::string placebo_csv(const PlaceboDistribution& dist) {
    std::ostringstream out;
    out << "unit,is_treated,rmspe_pre,rmspe_post,ratio,gap_t0p1,gap_end,avg_post_gap\n";
    for (const auto& e : dist.entries) {
        if (e.failed) {
            out << e.unit << ',' << (e.is_treated ? 1 : 0) << ",,,,,,\n";
            continue;
        }
        out << e.unit << ',' << (e.is_treated ? 1 : 0) << ',' << fmt_double(e.rmspe_pre) << ','
            << fmt_double(e.rmspe_post) << ','
            << (e.ratio_valid ? fmt_double(e.rmspe_ratio) : std::string{}) << ','
            << fmt_double(e.gap_t0_plus_1) << ',' << fmt_double(e.gap_at_end) << ','
            << fmt_double(e.average_post_gap) << '\n';
    }
    return out.str();
}

std::string placebo_gaps_csv(const PlaceboDistribution& dist) {
    std::ostringstream out;
    out << "unit,is_treated,period,gap\n";
    for (const auto& e : dist.entries) {
        if (e.failed || !e.fit) continue;
        for (std::size_t t = 0; t < e.fit->periods.size(); ++t)
            out << e.unit << ',' << (e.is_treated ? 1 : 0) << ',' << e.fit->periods[t] << ','
                << fmt_double(e.fit->gap_series(static_cast<Eigen::Index>(t))) << '\n';
    }
    return out.str();
}

}  // namespace synthpanel
