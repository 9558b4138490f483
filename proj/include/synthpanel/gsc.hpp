#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthpanel/panel.hpp"

namespace synthpanel {

// Interactive fixed effects on the donor block:
//   Y_jt = mu + alpha_j + xi_t + lambda_j' f_t + e_jt
// normalized so (1/T) F F' = I and Lambda'Lambda is diagonal descending.
struct FactorModel {
    double grand_mean = 0.0;
    Eigen::VectorXd unit_effects;  // per donor, mean 0
    Eigen::VectorXd time_effects;  // per period, mean 0
    Eigen::MatrixXd factors;       // r x T
    Eigen::MatrixXd loadings;      // J x r
    int r = 0;
    double sigma2 = 0.0;
    int iterations = 0;
    bool converged = true;
};

FactorModel fit_ife(const Eigen::MatrixXd& donors, int r);

// Leave-one-donor-out CV over r in 0..r_max, scored on post-period MSPE of
// the held-out donor's projected prediction. Ties go to the smaller r.
int select_factors(const Eigen::MatrixXd& donors, int r_max, std::size_t n_pre);

struct ProjectedUnit {
    Eigen::VectorXd loadings;  // r-vector
    double offset = 0.0;       // absorbed unit effect; pre-period mean gap is 0
};

ProjectedUnit project_loadings(const FactorModel& model, std::span<const double> treated_pre);

struct BootstrapConfig {
    int replications = 500;
    std::uint64_t seed = 0;
    double level = 0.95;
};

struct GscFit {
    FactorModel model;
    Eigen::VectorXd treated_loadings;
    double treated_offset = 0.0;
    std::vector<int> periods;
    std::size_t n_pre = 0;
    Eigen::VectorXd treated_series;
    Eigen::VectorXd counterfactual;  // all periods
    Eigen::VectorXd att_path;        // post periods
    Eigen::MatrixXd att_ci;          // post x 2 (low, high)
    double average_att = 0.0;
    double att_ci_low = 0.0;
    double att_ci_high = 0.0;
    double p_value = 1.0;
    int r = 0;
    int n_redrawn_resamples = 0;
};

// r unset = auto-select via leave-one-donor-out CV (r_max capped by data).
GscFit gsc_fit(const BalancedPanel& panel, const std::string& outcome,
               std::optional<int> r = std::nullopt, const BootstrapConfig& boot = {},
               int jobs = 1);

// Pseudo t0 = t0 - backdate on data truncated at the true t0; returns the
// bootstrap p-value of the pseudo average ATT.
double gsc_in_time_placebo(const BalancedPanel& panel, const std::string& outcome, int backdate,
                           std::optional<int> r = std::nullopt, const BootstrapConfig& boot = {},
                           int jobs = 1);

// Closed-form two-way fixed-effects DID average effect; the r = 0 cross-oracle.
double did_average_effect(const BalancedPanel& panel, const std::string& outcome);

}  // namespace synthpanel
