#include "synthpanel/dgp.hpp"

#include <cmath>
#include <functional>

#include "synthpanel/errors.hpp"
#include "synthpanel/rng.hpp"

namespace synthpanel {

namespace {

std::vector<std::string> unit_names(int n_units) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n_units));
    for (int i = 0; i < n_units; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "U%02d", i);
        names.emplace_back(buf);
    }
    return names;
}

std::vector<int> make_periods(const DgpSpec& spec) {
    std::vector<int> periods(static_cast<std::size_t>(spec.n_periods));
    for (int t = 0; t < spec.n_periods; ++t)
        periods[static_cast<std::size_t>(t)] = spec.first_period + t;
    return periods;
}

}  // namespace

SimulatedPanel simulate_factor_panel(const DgpSpec& spec) {
    int n_units = spec.n_donors + 1;
    int T = spec.n_periods;
    int r = spec.mode == DgpMode::two_way_fe ? 0 : spec.n_factors;

    Rng base(spec.seed);
    Rng rng_fe = base.stream("dgp/fixed_effects");
    Rng rng_fac = base.stream("dgp/factors");
    Rng rng_noise = base.stream("dgp/noise");

    Eigen::VectorXd alpha(n_units), xi(T);
    for (int i = 0; i < n_units; ++i) alpha(i) = rng_fe.normal(0.0, spec.unit_effect_sd);
    for (int t = 0; t < T; ++t) xi(t) = rng_fe.normal(0.0, spec.time_effect_sd);

    Eigen::MatrixXd factors(r, T), loadings(n_units, r);
    for (int f = 0; f < r; ++f)
        for (int t = 0; t < T; ++t) factors(f, t) = rng_fac.normal(0.0, spec.factor_sd);
    for (int i = 0; i < n_units; ++i)
        for (int f = 0; f < r; ++f) loadings(i, f) = rng_fac.normal(0.0, spec.loading_sd);

    Eigen::MatrixXd y(n_units, T);
    for (int i = 0; i < n_units; ++i)
        for (int t = 0; t < T; ++t) {
            double common = alpha(i) + xi(t);
            if (r > 0) common += loadings.row(i).dot(factors.col(t));
            y(i, t) = common + rng_noise.normal(0.0, spec.noise_sd);
        }

    std::vector<double> att(static_cast<std::size_t>(spec.n_post()));
    for (int p = 0; p < spec.n_post(); ++p) {
        att[static_cast<std::size_t>(p)] = spec.delta_at(p);
        y(0, spec.n_pre + p) += spec.delta_at(p);
    }
    return {BalancedPanel::from_grid(unit_names(n_units), make_periods(spec), {{"y", y}}, "U00",
                                     spec.t0()),
            std::move(att), {}};
}

SimulatedPanel simulate_convex_panel(const DgpSpec& spec) {
    int n_units = spec.n_donors + 1;
    int T = spec.n_periods;

    Rng base(spec.seed);
    Rng rng_donors = base.stream("dgp/convex_donors");
    Rng rng_w = base.stream("dgp/convex_weights");

    Eigen::MatrixXd y(n_units, T);
    for (int j = 1; j < n_units; ++j) {
        double level = rng_donors.normal(0.0, 2.0);
        double trend = rng_donors.normal(0.0, 0.1);
        for (int t = 0; t < T; ++t)
            y(j, t) = level + trend * t + rng_donors.normal(0.0, 0.5);
    }
    auto wvec = rng_w.dirichlet(static_cast<std::size_t>(spec.n_donors));
    Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(wvec.data(), spec.n_donors);
    for (int t = 0; t < T; ++t) {
        double v = 0.0;
        for (int j = 0; j < spec.n_donors; ++j) v += w(j) * y(j + 1, t);
        y(0, t) = v;
    }

    std::vector<double> att(static_cast<std::size_t>(spec.n_post()));
    for (int p = 0; p < spec.n_post(); ++p) {
        att[static_cast<std::size_t>(p)] = spec.delta_at(p);
        y(0, spec.n_pre + p) += spec.delta_at(p);
    }
    return {BalancedPanel::from_grid(unit_names(n_units), make_periods(spec), {{"y", y}}, "U00",
                                     spec.t0()),
            std::move(att), w};
}

WeightVector oracle_grid_weights(const PredictorMatrices& pred, const VMatrix& v, double step) {
    const Eigen::Index n_donors = pred.x0.cols();
    if (n_donors > 4)
        throw GridTooLarge("grid oracle limited to 4 donors, got " + std::to_string(n_donors));
    int resolution = static_cast<int>(std::lround(1.0 / step));
    if (resolution < 1) throw GridTooLarge("step too coarse");

    Eigen::MatrixXd vx0 = v.diagonal.asDiagonal() * pred.x0;
    Eigen::MatrixXd q = pred.x0.transpose() * vx0;
    Eigen::VectorXd lin = -vx0.transpose() * pred.x1;

    Eigen::VectorXd best;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_donors);

    // enumerate integer compositions in lexicographic order; first strict
    // improvement wins, so ties pick the lexicographically smallest vector
    std::function<void(Eigen::Index, int)> recurse = [&](Eigen::Index pos, int remaining) {
        if (pos == n_donors - 1) {
            counts(pos) = remaining;
            Eigen::VectorXd w = counts / static_cast<double>(resolution);
            double val = 0.5 * w.dot(q * w) + lin.dot(w);
            if (val < best_val - 1e-15) {
                best_val = val;
                best = w;
            }
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts(pos) = c;
            recurse(pos + 1, remaining - c);
        }
    };
    recurse(0, resolution);

    WeightVector out;
    out.donors = pred.donors;
    out.weights = best;
    return out;
}

}  // namespace synthpanel
