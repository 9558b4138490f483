#include "synthpanel/scm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "synthpanel/errors.hpp"
#include "synthpanel/rng.hpp"

namespace synthpanel {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::PermanentNegative: return "permanent_negative";
        case Verdict::TemporaryNegative: return "temporary_negative";
        case Verdict::NegativeWeak: return "negative_weak";
        case Verdict::Null: return "null";
    }
    return "null";
}

PredictorMatrices build_predictors(const BalancedPanel& panel, const std::string& outcome,
                                   const PredictorSpec& spec) {
    std::vector<PredictorEntry> entries = spec.entries;
    if (entries.empty()) entries.push_back({});  // all pre-period lags of the target outcome

    std::vector<double> x1;
    std::vector<std::vector<double>> rows;  // each of length J
    std::vector<std::string> labels;
    std::size_t n_donors = panel.n_donors();

    for (const auto& entry : entries) {
        std::string oc = entry.outcome.empty() ? outcome : entry.outcome;
        const Eigen::MatrixXd& grid = panel.values(oc);
        std::vector<int> periods = entry.periods.empty() ? panel.pre_period() : entry.periods;
        auto valid = [&](int y) {
            return y >= panel.periods().front() && y <= panel.t0();
        };
        if (std::none_of(periods.begin(), periods.end(), valid))
            throw EmptyPredictorSet("predictor entry for '" + oc +
                                    "' selects no pre-treatment periods");
        for (int y : periods)
            if (!valid(y))
                throw DataError("predictor period " + std::to_string(y) +
                                " is outside the pre-treatment window ending at t0=" +
                                std::to_string(panel.t0()));

        if (entry.agg == PredictorAgg::each_lag) {
            for (int y : periods) {
                Eigen::Index t = static_cast<Eigen::Index>(panel.period_index(y));
                x1.push_back(grid(0, t));
                std::vector<double> row(n_donors);
                for (std::size_t j = 0; j < n_donors; ++j)
                    row[j] = grid(static_cast<Eigen::Index>(j + 1), t);
                rows.push_back(std::move(row));
                labels.push_back(oc + "@" + std::to_string(y));
            }
        } else {
            double acc1 = 0.0;
            std::vector<double> row(n_donors, 0.0);
            for (int y : periods) {
                Eigen::Index t = static_cast<Eigen::Index>(panel.period_index(y));
                acc1 += grid(0, t);
                for (std::size_t j = 0; j < n_donors; ++j)
                    row[j] += grid(static_cast<Eigen::Index>(j + 1), t);
            }
            double n = static_cast<double>(periods.size());
            x1.push_back(acc1 / n);
            for (auto& v : row) v /= n;
            rows.push_back(std::move(row));
            labels.push_back("mean(" + oc + "@" + std::to_string(periods.front()) + ".." +
                             std::to_string(periods.back()) + ")");
        }
    }
    if (rows.empty()) throw EmptyPredictorSet("predictor spec produced no predictors");

    PredictorMatrices pred;
    pred.x1 = Eigen::Map<Eigen::VectorXd>(x1.data(), static_cast<Eigen::Index>(x1.size()));
    pred.x0.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_donors));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < n_donors; ++j)
            pred.x0(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
    pred.labels = std::move(labels);
    pred.donors.assign(panel.units().begin() + 1, panel.units().end());
    return pred;
}

PredictorMatrices standardize_predictors(const PredictorMatrices& pred) {
    PredictorMatrices out = pred;
    double n = static_cast<double>(pred.x0.cols());
    for (Eigen::Index r = 0; r < pred.x0.rows(); ++r) {
        double mean = pred.x0.row(r).mean();
        double ss = (pred.x0.row(r).array() - mean).square().sum();
        double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        if (sd > 1e-12) {
            out.x0.row(r) /= sd;
            out.x1(r) /= sd;
        }
    }
    return out;
}

Eigen::VectorXd minimize_quadratic_on_simplex(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                              double rel_tol, int max_iter) {
    const Eigen::Index n = q.rows();
    if (n == 1) return Eigen::VectorXd::Ones(1);

    auto value = [&](const Eigen::VectorXd& w) { return 0.5 * w.dot(q * w) + c.dot(w); };

    // best vertex start
    Eigen::Index start = 0;
    double best = 0.5 * q(0, 0) + c(0);
    for (Eigen::Index j = 1; j < n; ++j) {
        double f = 0.5 * q(j, j) + c(j);
        if (f < best) {
            best = f;
            start = j;
        }
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w(start) = 1.0;
    std::vector<Eigen::Index> support{start};

    auto solve_restricted = [&](const std::vector<Eigen::Index>& s) {
        const Eigen::Index m = static_cast<Eigen::Index>(s.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
        Eigen::VectorXd rhs(m + 1);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = q(s[static_cast<std::size_t>(a)],
                                                               s[static_cast<std::size_t>(b)]);
            kkt(a, m) = 1.0;
            kkt(m, a) = 1.0;
            rhs(a) = -c(s[static_cast<std::size_t>(a)]);
        }
        rhs(m) = 1.0;
        // minimal-norm solve keeps ties (duplicate donors) deterministic
        Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        return Eigen::VectorXd(sol.head(m));
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXd target = solve_restricted(support);
        if (target.minCoeff() >= -1e-12) {
            // feasible optimum on the current support
            for (std::size_t a = 0; a < support.size(); ++a)
                w(support[a]) = std::max(target(static_cast<Eigen::Index>(a)), 0.0);
            double total = w.sum();
            w /= total;
            Eigen::VectorXd g = q * w + c;
            double plane = w.dot(g);
            Eigen::Index entering = 0;
            double gmin = g(0);
            for (Eigen::Index j = 1; j < n; ++j)
                if (g(j) < gmin) {
                    gmin = g(j);
                    entering = j;
                }
            double fval = value(w);
            if (plane - gmin <= rel_tol * (1.0 + std::abs(fval))) return w;
            if (std::find(support.begin(), support.end(), entering) != support.end()) return w;
            support.push_back(entering);
        } else {
            // step toward the restricted solution until a weight hits zero
            double alpha = 1.0;
            for (std::size_t a = 0; a < support.size(); ++a) {
                double cur = w(support[a]);
                double tgt = target(static_cast<Eigen::Index>(a));
                if (tgt < cur)
                    alpha = std::min(alpha, cur / (cur - tgt));
            }
            std::vector<Eigen::Index> next;
            for (std::size_t a = 0; a < support.size(); ++a) {
                double nw = w(support[a]) + alpha * (target(static_cast<Eigen::Index>(a)) - w(support[a]));
                if (nw <= 1e-14) {
                    w(support[a]) = 0.0;
                } else {
                    w(support[a]) = nw;
                    next.push_back(support[a]);
                }
            }
            if (next.empty()) next.push_back(support.front());
            support = std::move(next);
            double total = w.sum();
            if (total > 0) w /= total;
        }
    }
    Eigen::VectorXd g = q * w + c;
    throw NumericalFailure("simplex QP did not converge after " + std::to_string(max_iter) +
                           " iterations, gradient norm " + std::to_string(g.norm()));
}

WeightVector solve_weights(const PredictorMatrices& pred, const VMatrix& v) {
    if (!pred.x1.allFinite() || !pred.x0.allFinite())
        throw DataError("predictor matrices contain non-finite entries");
    Eigen::MatrixXd vx0 = v.diagonal.asDiagonal() * pred.x0;
    Eigen::MatrixXd q = pred.x0.transpose() * vx0;
    Eigen::VectorXd c = -vx0.transpose() * pred.x1;
    WeightVector w;
    w.donors = pred.donors;
    w.weights = minimize_quadratic_on_simplex(q, c);
    return w;
}

double pre_period_mspe(const BalancedPanel& panel, const std::string& outcome,
                       const WeightVector& w) {
    const Eigen::MatrixXd& grid = panel.values(outcome);
    std::size_t n_pre = panel.n_pre();
    double acc = 0.0;
    for (std::size_t t = 0; t < n_pre; ++t) {
        double synth = 0.0;
        for (Eigen::Index j = 0; j < w.weights.size(); ++j)
            synth += w.weights(j) * grid(j + 1, static_cast<Eigen::Index>(t));
        double gap = grid(0, static_cast<Eigen::Index>(t)) - synth;
        acc += gap * gap;
    }
    return acc / static_cast<double>(n_pre);
}

namespace {

// Standard Nelder-Mead on R^dim; deterministic for a given start simplex.
std::pair<Eigen::VectorXd, double> nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
    double initial_step, int max_iter, double ftol) {
    const Eigen::Index dim = x0.size();
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    xs.push_back(x0);
    fs.push_back(f(x0));
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::VectorXd x = x0;
        x(i) += initial_step;
        xs.push_back(x);
        fs.push_back(f(x));
    }
    auto order = [&] {
        std::vector<std::size_t> idx(xs.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> nx;
        std::vector<double> nf;
        for (auto i : idx) {
            nx.push_back(xs[i]);
            nf.push_back(fs[i]);
        }
        xs = std::move(nx);
        fs = std::move(nf);
    };
    order();
    for (int iter = 0; iter < max_iter; ++iter) {
        if (std::abs(fs.back() - fs.front()) <= ftol * (1.0 + std::abs(fs.front()))) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) centroid += xs[i];
        centroid /= static_cast<double>(dim);
        Eigen::VectorXd refl = centroid + (centroid - xs.back());
        double frefl = f(refl);
        if (frefl < fs.front()) {
            Eigen::VectorXd expa = centroid + 2.0 * (centroid - xs.back());
            double fexpa = f(expa);
            if (fexpa < frefl) {
                xs.back() = expa;
                fs.back() = fexpa;
            } else {
                xs.back() = refl;
                fs.back() = frefl;
            }
        } else if (frefl < fs[fs.size() - 2]) {
            xs.back() = refl;
            fs.back() = frefl;
        } else {
            Eigen::VectorXd contr = centroid + 0.5 * (xs.back() - centroid);
            double fcontr = f(contr);
            if (fcontr < fs.back()) {
                xs.back() = contr;
                fs.back() = fcontr;
            } else {
                for (std::size_t i = 1; i < xs.size(); ++i) {
                    xs[i] = xs.front() + 0.5 * (xs[i] - xs.front());
                    fs[i] = f(xs[i]);
                }
            }
        }
        order();
    }
    return {xs.front(), fs.front()};
}

Eigen::VectorXd softmax_v(const Eigen::VectorXd& theta) {
    Eigen::Index k = theta.size() + 1;
    Eigen::VectorXd v(k);
    double mx = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) mx = std::max(mx, theta(i));
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        double e = std::exp((i < theta.size() ? theta(i) : 0.0) - mx);
        v(i) = e;
        total += e;
    }
    return v / total;
}

}  // namespace

std::pair<VMatrix, WeightVector> optimize_v(const BalancedPanel& panel, const std::string& outcome,
                                            const PredictorMatrices& pred,
                                            const FitOptions& options) {
    const Eigen::Index k = pred.x1.size();
    PredictorMatrices sx = standardize_predictors(pred);

    auto score = [&](const VMatrix& v) {
        WeightVector w = solve_weights(sx, v);
        return std::make_pair(pre_period_mspe(panel, outcome, w), std::move(w));
    };

    VMatrix best_v = VMatrix::uniform(k);
    auto [best_mspe, best_w] = score(best_v);
    if (k == 1 || !options.optimize_v || options.v_restarts <= 0)
        return {best_v, best_w};

    auto objective = [&](const Eigen::VectorXd& theta) {
        VMatrix v{softmax_v(theta)};
        WeightVector w = solve_weights(sx, v);
        return pre_period_mspe(panel, outcome, w);
    };

    Rng rng = Rng(options.seed).stream("optimize_v");
    for (int restart = 0; restart < options.v_restarts; ++restart) {
        Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(k - 1);
        if (restart > 0)
            for (Eigen::Index i = 0; i < k - 1; ++i) theta0(i) = rng.normal(0.0, 1.5);
        auto [theta, fval] = nelder_mead(objective, theta0, 0.7, 150 * static_cast<int>(k), 1e-10);
        if (fval < best_mspe) {
            VMatrix v{softmax_v(theta)};
            auto [mspe, w] = score(v);
            if (mspe < best_mspe) {
                best_mspe = mspe;
                best_v = std::move(v);
                best_w = std::move(w);
            }
        }
    }
    return {best_v, best_w};
}

double rmspe(std::span<const double> gaps) {
    if (gaps.empty()) throw EmptyPeriodSet("rmspe over an empty period set");
    double acc = 0.0;
    for (double g : gaps) acc += g * g;
    return std::sqrt(acc / static_cast<double>(gaps.size()));
}

FitDiagnostics fit_diagnostics(const BalancedPanel& panel, const std::string& outcome,
                               const ScmFit& fit) {
    const Eigen::MatrixXd& grid = panel.values(outcome);
    std::size_t n_pre = panel.n_pre();
    FitDiagnostics d;

    double ssr = 0.0;
    for (std::size_t t = 0; t < n_pre; ++t) ssr += fit.gap_series(static_cast<Eigen::Index>(t)) *
                                                   fit.gap_series(static_cast<Eigen::Index>(t));
    d.rmspe_pre = std::sqrt(ssr / static_cast<double>(n_pre));

    double avg_bias = 0.0, sc_bias = 0.0;
    for (std::size_t t = 0; t < n_pre; ++t) {
        Eigen::Index ti = static_cast<Eigen::Index>(t);
        double treated = grid(0, ti);
        double donor_mean = grid.col(ti).tail(grid.rows() - 1).mean();
        avg_bias += std::abs(treated - donor_mean) / std::abs(treated);
        sc_bias += std::abs(fit.gap_series(ti)) / std::abs(treated);
    }
    d.avg_control_bias_pct = 100.0 * avg_bias / static_cast<double>(n_pre);
    d.sc_bias_pct = 100.0 * sc_bias / static_cast<double>(n_pre);

    double mean_pre = 0.0;
    for (std::size_t t = 0; t < n_pre; ++t) mean_pre += grid(0, static_cast<Eigen::Index>(t));
    mean_pre /= static_cast<double>(n_pre);
    double sst = 0.0;
    for (std::size_t t = 0; t < n_pre; ++t) {
        double dev = grid(0, static_cast<Eigen::Index>(t)) - mean_pre;
        sst += dev * dev;
    }
    if (sst == 0.0)
        throw ZeroVarianceTreated("treated pre-period series is constant, R^2 undefined");
    d.r2_pre = 1.0 - ssr / sst;
    return d;
}

ScmFit fit(const BalancedPanel& panel, const std::string& outcome, const PredictorSpec& spec,
           const FitOptions& options) {
    PredictorMatrices pred = build_predictors(panel, outcome, spec);
    auto [v, w] = optimize_v(panel, outcome, pred, options);

    const Eigen::MatrixXd& grid = panel.values(outcome);
    ScmFit f;
    f.outcome = outcome;
    f.weights = std::move(w);
    f.v = std::move(v);
    f.periods = panel.periods();
    f.n_pre = panel.n_pre();
    f.treated_series = grid.row(0).transpose();
    f.synthetic_series = grid.bottomRows(grid.rows() - 1).transpose() * f.weights.weights;
    f.gap_series = f.treated_series - f.synthetic_series;
    f.diagnostics = fit_diagnostics(panel, outcome, f);
    f.mspe_pre = f.diagnostics.rmspe_pre * f.diagnostics.rmspe_pre;
    return f;
}

EffectSummary effect_summary(const ScmFit& fit) {
    std::size_t n_post = fit.periods.size() - fit.n_pre;
    if (n_post == 0) throw EmptyPeriodSet("no post-treatment periods");
    EffectSummary s;
    double acc = 0.0;
    for (std::size_t t = fit.n_pre; t < fit.periods.size(); ++t)
        acc += fit.gap_series(static_cast<Eigen::Index>(t));
    s.average_effect = acc / static_cast<double>(n_post);
    double ss = 0.0;
    for (std::size_t t = fit.n_pre; t < fit.periods.size(); ++t) {
        double dev = fit.gap_series(static_cast<Eigen::Index>(t)) - s.average_effect;
        ss += dev * dev;
    }
    s.gap_sd = n_post > 1 ? std::sqrt(ss / static_cast<double>(n_post - 1)) : 0.0;
    s.end_of_sample_effect = fit.gap_series(fit.gap_series.size() - 1);
    return s;
}

}  // namespace synthpanel
