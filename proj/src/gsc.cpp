#include "synthpanel/gsc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "synthpanel/errors.hpp"
#include "synthpanel/rng.hpp"
#include "synthpanel/util.hpp"

namespace synthpanel {

namespace {

struct TwoWayMeans {
    double mu = 0.0;
    Eigen::VectorXd alpha;  // rows, mean 0
    Eigen::VectorXd xi;     // cols, mean 0
};

TwoWayMeans two_way_means(const Eigen::MatrixXd& z) {
    TwoWayMeans m;
    m.mu = z.mean();
    m.alpha = z.rowwise().mean().array() - m.mu;
    m.xi = z.colwise().mean().transpose().array() - m.mu;
    return m;
}

Eigen::MatrixXd remove_two_way(const Eigen::MatrixXd& y, const TwoWayMeans& m) {
    Eigen::MatrixXd e = y.array() - m.mu;
    e.colwise() -= m.alpha;
    e.rowwise() -= m.xi.transpose();
    return e;
}

// top-r singular triplets of e (J x T) via the smaller Gram matrix
void top_svd(const Eigen::MatrixXd& e, int r, Eigen::MatrixXd& u, Eigen::VectorXd& s,
             Eigen::MatrixXd& v) {
    const Eigen::Index rows = e.rows(), cols = e.cols();
    u.resize(rows, r);
    v.resize(cols, r);
    s.resize(r);
    if (rows <= cols) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e * e.transpose());
        for (int i = 0; i < r; ++i) {
            Eigen::Index idx = rows - 1 - i;
            double val = std::max(eig.eigenvalues()(idx), 0.0);
            s(i) = std::sqrt(val);
            u.col(i) = eig.eigenvectors().col(idx);
            v.col(i) = s(i) > 1e-13 ? Eigen::VectorXd(e.transpose() * u.col(i) / s(i))
                                    : Eigen::VectorXd::Zero(cols);
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e.transpose() * e);
        for (int i = 0; i < r; ++i) {
            Eigen::Index idx = cols - 1 - i;
            double val = std::max(eig.eigenvalues()(idx), 0.0);
            s(i) = std::sqrt(val);
            v.col(i) = eig.eigenvectors().col(idx);
            u.col(i) = s(i) > 1e-13 ? Eigen::VectorXd(e * v.col(i) / s(i))
                                    : Eigen::VectorXd::Zero(rows);
        }
    }
    // deterministic orientation: largest-magnitude loading entry positive
    for (int i = 0; i < r; ++i) {
        Eigen::Index imax = 0;
        u.col(i).cwiseAbs().maxCoeff(&imax);
        if (u(imax, i) < 0.0) {
            u.col(i) = -u.col(i);
            v.col(i) = -v.col(i);
        }
    }
}

}  // namespace

FactorModel fit_ife(const Eigen::MatrixXd& donors, int r) {
    const Eigen::Index j = donors.rows(), t = donors.cols();
    if (r < 0) throw RankDeficient("negative factor count");
    if (r >= std::min(j, t))
        throw RankDeficient("r=" + std::to_string(r) + " too large for a " + std::to_string(j) +
                            "x" + std::to_string(t) + " donor block");

    FactorModel model;
    model.r = r;
    TwoWayMeans m = two_way_means(donors);
    if (r == 0) {
        Eigen::MatrixXd e = remove_two_way(donors, m);
        model.grand_mean = m.mu;
        model.unit_effects = m.alpha;
        model.time_effects = m.xi;
        model.factors.resize(0, t);
        model.loadings.resize(j, 0);
        model.sigma2 = e.squaredNorm() / static_cast<double>(j * t);
        return model;
    }

    const double sqrt_t = std::sqrt(static_cast<double>(t));
    Eigen::MatrixXd low_rank = Eigen::MatrixXd::Zero(j, t);
    Eigen::MatrixXd u, v;
    Eigen::VectorXd s;
    double prev_obj = std::numeric_limits<double>::infinity();
    int iter = 0;
    const int max_iter = 2000;
    for (; iter < max_iter; ++iter) {
        m = two_way_means(donors - low_rank);
        Eigen::MatrixXd e = remove_two_way(donors, m);
        top_svd(e, r, u, s, v);
        low_rank = u * s.asDiagonal() * v.transpose();
        double obj = (e - low_rank).squaredNorm();
        if (std::abs(prev_obj - obj) <= 1e-9 * (1.0 + obj)) {
            prev_obj = obj;
            ++iter;
            break;
        }
        prev_obj = obj;
    }
    model.converged = iter < max_iter;
    model.iterations = iter;
    model.grand_mean = m.mu;
    model.unit_effects = m.alpha;
    model.time_effects = m.xi;
    // normalization: (1/T) F F' = I, Lambda'Lambda diagonal descending
    model.factors = sqrt_t * v.transpose();
    model.loadings = u * s.asDiagonal() / sqrt_t;
    model.sigma2 = prev_obj / static_cast<double>(j * t);
    return model;
}

ProjectedUnit project_loadings(const FactorModel& model, std::span<const double> treated_pre) {
    const int r = model.r;
    const Eigen::Index n_pre = static_cast<Eigen::Index>(treated_pre.size());
    if (n_pre <= r)
        throw InsufficientPrePeriods("pre-period length " + std::to_string(n_pre) +
                                     " must exceed r=" + std::to_string(r));
    Eigen::VectorXd y(n_pre);
    for (Eigen::Index i = 0; i < n_pre; ++i)
        y(i) = treated_pre[static_cast<std::size_t>(i)] - model.grand_mean - model.time_effects(i);

    // intercept column absorbs the treated unit effect; residuals then have
    // zero mean over the pre window
    Eigen::MatrixXd x(n_pre, r + 1);
    x.col(0).setOnes();
    for (int f = 0; f < r; ++f) x.col(f + 1) = model.factors.row(f).head(n_pre).transpose();

    auto cod = x.completeOrthogonalDecomposition();
    if (cod.rank() < r + 1)
        throw CollinearFactors("factor regressors are collinear on the pre window");
    Eigen::VectorXd beta = cod.solve(y);

    ProjectedUnit out;
    out.offset = beta(0);
    out.loadings = beta.tail(r);
    return out;
}

int select_factors(const Eigen::MatrixXd& donors, int r_max, std::size_t n_pre) {
    const Eigen::Index j = donors.rows(), t = donors.cols();
    if (r_max >= static_cast<int>(std::min(j, t)) - 1)
        throw RankDeficient("r_max=" + std::to_string(r_max) + " too large for the donor block");

    int best_r = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= r_max; ++r) {
        if (r >= static_cast<int>(n_pre) || r >= static_cast<int>(j) - 1) break;
        double err = 0.0;
        for (Eigen::Index held = 0; held < j; ++held) {
            Eigen::MatrixXd rest(j - 1, t);
            Eigen::Index row = 0;
            for (Eigen::Index i = 0; i < j; ++i)
                if (i != held) rest.row(row++) = donors.row(i);
            FactorModel model = fit_ife(rest, r);
            std::vector<double> pre(n_pre);
            for (std::size_t k = 0; k < n_pre; ++k)
                pre[k] = donors(held, static_cast<Eigen::Index>(k));
            ProjectedUnit proj = project_loadings(model, pre);
            for (Eigen::Index tt = static_cast<Eigen::Index>(n_pre); tt < t; ++tt) {
                double pred = model.grand_mean + model.time_effects(tt) + proj.offset;
                if (r > 0) pred += proj.loadings.dot(model.factors.col(tt));
                double dev = donors(held, tt) - pred;
                err += dev * dev;
            }
        }
        // a larger r must buy a clear improvement, not just fit CV noise
        if (err < best_err * (1.0 - 0.01)) {
            best_err = err;
            best_r = r;
        } else if (err < best_err) {
            best_err = err;
        }
    }
    return best_r;
}

namespace {

struct PointFit {
    Eigen::VectorXd counterfactual;  // all periods
    Eigen::VectorXd att;             // post periods
    double average_att = 0.0;
};

PointFit gsc_point(const Eigen::MatrixXd& donors, const Eigen::VectorXd& treated,
                   std::size_t n_pre, int r, FactorModel* model_out = nullptr,
                   ProjectedUnit* proj_out = nullptr) {
    FactorModel model = fit_ife(donors, r);
    std::vector<double> pre(treated.data(), treated.data() + n_pre);
    ProjectedUnit proj = project_loadings(model, pre);

    const Eigen::Index t = donors.cols();
    PointFit out;
    out.counterfactual.resize(t);
    for (Eigen::Index tt = 0; tt < t; ++tt) {
        double cf = model.grand_mean + model.time_effects(tt) + proj.offset;
        if (r > 0) cf += proj.loadings.dot(model.factors.col(tt));
        out.counterfactual(tt) = cf;
    }
    const Eigen::Index n_post = t - static_cast<Eigen::Index>(n_pre);
    out.att = treated.tail(n_post) - out.counterfactual.tail(n_post);
    out.average_att = out.att.mean();
    if (model_out) *model_out = std::move(model);
    if (proj_out) *proj_out = std::move(proj);
    return out;
}

double percentile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    double h = p * (static_cast<double>(xs.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

GscFit gsc_fit(const BalancedPanel& panel, const std::string& outcome, std::optional<int> r_opt,
               const BootstrapConfig& boot, int jobs) {
    if (boot.replications < 100)
        throw ConfigError("bootstrap replications must be >= 100, got " +
                          std::to_string(boot.replications));
    const Eigen::MatrixXd& grid = panel.values(outcome);
    const Eigen::Index j = static_cast<Eigen::Index>(panel.n_donors());
    const Eigen::Index t = static_cast<Eigen::Index>(panel.n_periods());
    const std::size_t n_pre = panel.n_pre();
    Eigen::MatrixXd donors = grid.bottomRows(j);
    Eigen::VectorXd treated = grid.row(0).transpose();

    int r;
    if (r_opt) {
        r = *r_opt;
    } else {
        int r_max = std::min<int>({5, static_cast<int>(std::min(j, t)) - 2,
                                   static_cast<int>(n_pre) - 1});
        r = select_factors(donors, std::max(r_max, 0), n_pre);
    }

    GscFit out;
    FactorModel model;
    ProjectedUnit proj;
    PointFit point = gsc_point(donors, treated, n_pre, r, &model, &proj);

    out.model = std::move(model);
    out.treated_loadings = proj.loadings;
    out.treated_offset = proj.offset;
    out.periods = panel.periods();
    out.n_pre = n_pre;
    out.treated_series = treated;
    out.counterfactual = point.counterfactual;
    out.att_path = point.att;
    out.average_att = point.average_att;
    out.r = r;

    // donor resampling bootstrap, streams derived per replicate; each replicate
    // also perturbs the treated series with resampled pre-window residuals so
    // the interval carries the treated unit's own noise, not just donor-side
    // estimation variation
    const int b = boot.replications;
    const Eigen::Index n_post = t - static_cast<Eigen::Index>(n_pre);
    Eigen::VectorXd resid_pre(static_cast<Eigen::Index>(n_pre));
    for (std::size_t i = 0; i < n_pre; ++i) {
        Eigen::Index ti = static_cast<Eigen::Index>(i);
        resid_pre(ti) = treated(ti) - point.counterfactual(ti);
    }
    const int df = std::max(1, static_cast<int>(n_pre) - r - 1);
    const double resid_scale = std::sqrt(static_cast<double>(n_pre) / static_cast<double>(df));
    std::vector<double> boot_avg(static_cast<std::size_t>(b));
    Eigen::MatrixXd boot_att(n_post, b);
    std::vector<int> redraws(static_cast<std::size_t>(b), 0);

    parallel_for(static_cast<std::size_t>(b), jobs, [&](std::size_t rep) {
        Rng rng = Rng(boot.seed).stream("gsc/bootstrap", rep);
        const int max_attempts = 200;
        for (int attempt = 0;; ++attempt) {
            if (attempt >= max_attempts)
                throw DegenerateResample("bootstrap replicate " + std::to_string(rep) +
                                         " could not draw a usable donor resample");
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(j));
            std::set<Eigen::Index> distinct;
            for (auto& i : idx) {
                i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(j)));
                distinct.insert(i);
            }
            if (static_cast<int>(distinct.size()) < r + 2) {
                ++redraws[rep];
                continue;
            }
            Eigen::MatrixXd resampled(j, t);
            for (Eigen::Index i = 0; i < j; ++i)
                resampled.row(i) = donors.row(idx[static_cast<std::size_t>(i)]);
            Eigen::VectorXd perturbed = treated;
            for (Eigen::Index tt = 0; tt < t; ++tt)
                perturbed(tt) += resid_scale *
                                 resid_pre(static_cast<Eigen::Index>(rng.uniform_index(n_pre)));
            try {
                PointFit pf = gsc_point(resampled, perturbed, n_pre, r);
                boot_avg[rep] = pf.average_att;
                boot_att.col(static_cast<Eigen::Index>(rep)) = pf.att;
                return;
            } catch (const NumericalError&) {
                ++redraws[rep];
            }
        }
    });

    for (int v : redraws) out.n_redrawn_resamples += v;

    double lo_p = (1.0 - boot.level) / 2.0, hi_p = (1.0 + boot.level) / 2.0;
    out.att_ci.resize(n_post, 2);
    for (Eigen::Index tt = 0; tt < n_post; ++tt) {
        std::vector<double> col(static_cast<std::size_t>(b));
        for (int rep = 0; rep < b; ++rep) col[static_cast<std::size_t>(rep)] = boot_att(tt, rep);
        out.att_ci(tt, 0) = percentile(col, lo_p);
        out.att_ci(tt, 1) = percentile(col, hi_p);
    }
    out.att_ci_low = percentile(boot_avg, lo_p);
    out.att_ci_high = percentile(boot_avg, hi_p);

    // tolerance keeps exactly-null fits (noiseless data) at p = 1 despite
    // rounding in the replicate averages
    const double zero_tol = 1e-12;
    int n_le = 0, n_ge = 0;
    for (double x : boot_avg) {
        if (x <= zero_tol) ++n_le;
        if (x >= -zero_tol) ++n_ge;
    }
    out.p_value = std::min(1.0, 2.0 * static_cast<double>(std::min(n_le, n_ge)) /
                                    static_cast<double>(b));
    return out;
}

double gsc_in_time_placebo(const BalancedPanel& panel, const std::string& outcome, int backdate,
                           std::optional<int> r, const BootstrapConfig& boot, int jobs) {
    if (backdate < 1) throw ConfigError("backdate must be >= 1");
    int pseudo_t0 = panel.t0() - backdate;
    BalancedPanel truncated = panel.truncated(panel.t0(), pseudo_t0);
    if (r && static_cast<int>(truncated.n_pre()) <= *r + 2)
        throw InsufficientPrePeriods("pre window too short after backdating by " +
                                     std::to_string(backdate));
    GscFit f = gsc_fit(truncated, outcome, r, boot, jobs);
    return f.p_value;
}

double did_average_effect(const BalancedPanel& panel, const std::string& outcome) {
    const Eigen::MatrixXd& grid = panel.values(outcome);
    const Eigen::Index t = static_cast<Eigen::Index>(panel.n_periods());
    const Eigen::Index n_pre = static_cast<Eigen::Index>(panel.n_pre());
    Eigen::VectorXd diff(t);
    for (Eigen::Index tt = 0; tt < t; ++tt)
        diff(tt) = grid(0, tt) - grid.col(tt).tail(grid.rows() - 1).mean();
    return diff.tail(t - n_pre).mean() - diff.head(n_pre).mean();
}

}  // namespace synthpanel
