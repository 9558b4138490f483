#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthpanel/panel.hpp"

namespace synthpanel {

struct PredictorMatrices {
    Eigen::VectorXd x1;  // k treated-unit predictors
    Eigen::MatrixXd x0;  // k x J donor predictors
    std::vector<std::string> labels;
    std::vector<std::string> donors;
};

enum class PredictorAgg { each_lag, mean };

struct PredictorEntry {
    std::string outcome;        // empty = the target outcome
    std::vector<int> periods;   // empty = all pre-treatment periods
    PredictorAgg agg = PredictorAgg::each_lag;
};

// Empty entries = the default all-pre-period-lags spec for the target outcome.
struct PredictorSpec {
    std::vector<PredictorEntry> entries;
};

struct WeightVector {
    std::vector<std::string> donors;
    Eigen::VectorXd weights;  // >= 0, sums to 1
};

struct VMatrix {
    Eigen::VectorXd diagonal;  // >= 0, sums to 1

    static VMatrix uniform(Eigen::Index k) {
        return {Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k))};
    }
};

struct FitDiagnostics {
    double rmspe_pre = 0.0;
    double avg_control_bias_pct = 0.0;
    double sc_bias_pct = 0.0;
    double r2_pre = 0.0;
};

enum class Verdict { PermanentNegative, TemporaryNegative, NegativeWeak, Null };

std::string to_string(Verdict v);

struct EffectSummary {
    double average_effect = 0.0;
    double gap_sd = 0.0;
    double end_of_sample_effect = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::optional<double> p_value;
    std::optional<Verdict> verdict;
};

struct ScmFit {
    std::string outcome;
    WeightVector weights;
    VMatrix v;
    std::vector<int> periods;
    std::size_t n_pre = 0;
    Eigen::VectorXd treated_series;
    Eigen::VectorXd synthetic_series;
    Eigen::VectorXd gap_series;  // treated - synthetic
    FitDiagnostics diagnostics;
    double mspe_pre = 0.0;
};

struct FitOptions {
    std::uint64_t seed = 0;
    int v_restarts = 20;     // Nelder-Mead restarts; uniform V is always scored too
    bool optimize_v = true;  // false = uniform V (used by fast Monte Carlo paths)
};

PredictorMatrices build_predictors(const BalancedPanel& panel, const std::string& outcome,
                                   const PredictorSpec& spec = {});

// argmin over the simplex of (x1 - x0 w)' V (x1 - x0 w), solved exactly by
// fully-corrective descent (active-set with Frank-Wolfe vertex additions).
WeightVector solve_weights(const PredictorMatrices& pred, const VMatrix& v);

// Diagonal V selected to minimize pre-period outcome MSPE of the induced
// weights; predictors are scaled by donor-pool sd before the weighted solve.
std::pair<VMatrix, WeightVector> optimize_v(const BalancedPanel& panel, const std::string& outcome,
                                            const PredictorMatrices& pred,
                                            const FitOptions& options = {});

ScmFit fit(const BalancedPanel& panel, const std::string& outcome,
           const PredictorSpec& spec = {}, const FitOptions& options = {});

double rmspe(std::span<const double> gaps);

FitDiagnostics fit_diagnostics(const BalancedPanel& panel, const std::string& outcome,
                               const ScmFit& fit);

// Averages and end-of-sample gap over the post window; CI/p left unfilled.
EffectSummary effect_summary(const ScmFit& fit);

// Internal QP: minimize 0.5 w'Qw + c'w over the simplex. Exposed for the
// grid-oracle cross checks.
Eigen::VectorXd minimize_quadratic_on_simplex(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                              double rel_tol = 1e-10, int max_iter = 10000);

PredictorMatrices standardize_predictors(const PredictorMatrices& pred);

double pre_period_mspe(const BalancedPanel& panel, const std::string& outcome,
                       const WeightVector& w);

}  // namespace synthpanel
