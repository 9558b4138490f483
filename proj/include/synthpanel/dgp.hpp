#pragma once

#include <cstdint>
#include <vector>

#include "synthpanel/panel.hpp"
#include "synthpanel/scm.hpp"

namespace synthpanel {

enum class DgpMode { convex_combination, factor_model, two_way_fe };

struct DgpSpec {
    int n_donors = 12;
    int n_periods = 29;
    int first_period = 1996;
    int n_pre = 11;  // t0 = first_period + n_pre - 1
    int n_factors = 0;
    double factor_sd = 1.0;
    double loading_sd = 1.0;
    double unit_effect_sd = 1.0;
    double time_effect_sd = 1.0;
    double noise_sd = 0.1;
    std::vector<double> delta;  // per post period; size 1 = constant; empty = no effect
    DgpMode mode = DgpMode::factor_model;
    std::uint64_t seed = 0;

    int t0() const { return first_period + n_pre - 1; }
    int n_post() const { return n_periods - n_pre; }
    double delta_at(int post_index) const {
        if (delta.empty()) return 0.0;
        return delta.size() == 1 ? delta.front() : delta.at(static_cast<std::size_t>(post_index));
    }
};

struct SimulatedPanel {
    BalancedPanel panel;
    std::vector<double> att_path;    // ground-truth effect per post period
    Eigen::VectorXd true_weights;    // convex mode only
};

// Y_it = alpha_i + xi_t + lambda_i'f_t + 1{treated, post}*delta_t + eps_it
SimulatedPanel simulate_factor_panel(const DgpSpec& spec);

// donors drawn freely; treated = sum_j w_j Y_j (+ delta post), w ~ Dirichlet
SimulatedPanel simulate_convex_panel(const DgpSpec& spec);

// Exhaustive simplex grid minimizer of the V-weighted predictor distance.
// Ties resolve to the lexicographically smallest weight vector.
WeightVector oracle_grid_weights(const PredictorMatrices& pred, const VMatrix& v, double step);

}  // namespace synthpanel
