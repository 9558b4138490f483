#include "synthpanel/serialize.hpp"

#include <sstream>

#include "synthpanel/util.hpp"

namespace synthpanel {

namespace {

ordered_json vec_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

}  // namespace

ordered_json to_json(const ScmFit& fit) {
    ordered_json j;
    j["outcome"] = fit.outcome;
    ordered_json weights;
    for (Eigen::Index i = 0; i < fit.weights.weights.size(); ++i)
        weights[fit.weights.donors[static_cast<std::size_t>(i)]] = fit.weights.weights(i);
    j["weights"] = weights;
    j["v"] = vec_json(fit.v.diagonal);
    j["periods"] = fit.periods;
    j["n_pre"] = fit.n_pre;
    j["treated"] = vec_json(fit.treated_series);
    j["synthetic"] = vec_json(fit.synthetic_series);
    j["gap"] = vec_json(fit.gap_series);
    j["diagnostics"] = {{"rmspe_pre", fit.diagnostics.rmspe_pre},
                        {"avg_control_bias_pct", fit.diagnostics.avg_control_bias_pct},
                        {"sc_bias_pct", fit.diagnostics.sc_bias_pct},
                        {"r2_pre", fit.diagnostics.r2_pre}};
    return j;
}

ordered_json to_json(const EffectSummary& s) {
    ordered_json j;
    j["average_effect"] = s.average_effect;
    j["gap_sd"] = s.gap_sd;
    j["end_of_sample_effect"] = s.end_of_sample_effect;
    if (s.ci_low) j["ci_low"] = *s.ci_low;
    if (s.ci_high) j["ci_high"] = *s.ci_high;
    if (s.p_value) j["p_value"] = *s.p_value;
    if (s.verdict) j["verdict"] = to_string(*s.verdict);
    return j;
}

ordered_json to_json(const GscFit& fit) {
    ordered_json j;
    j["r"] = fit.r;
    j["average_att"] = fit.average_att;
    j["att_ci"] = {fit.att_ci_low, fit.att_ci_high};
    j["p_value"] = fit.p_value;
    j["treated_offset"] = fit.treated_offset;
    j["treated_loadings"] = vec_json(fit.treated_loadings);
    j["grand_mean"] = fit.model.grand_mean;
    j["sigma2"] = fit.model.sigma2;
    j["converged"] = fit.model.converged;
    j["iterations"] = fit.model.iterations;
    j["n_redrawn_resamples"] = fit.n_redrawn_resamples;
    j["periods"] = fit.periods;
    j["n_pre"] = fit.n_pre;
    j["counterfactual"] = vec_json(fit.counterfactual);
    j["att_path"] = vec_json(fit.att_path);
    ordered_json ci_lo = ordered_json::array(), ci_hi = ordered_json::array();
    for (Eigen::Index t = 0; t < fit.att_ci.rows(); ++t) {
        ci_lo.push_back(fit.att_ci(t, 0));
        ci_hi.push_back(fit.att_ci(t, 1));
    }
    j["att_ci_low_path"] = ci_lo;
    j["att_ci_high_path"] = ci_hi;
    return j;
}

std::string gap_series_csv(const ScmFit& fit) {
    std::ostringstream out;
    out << "period,treated,synthetic,gap\n";
    for (std::size_t t = 0; t < fit.periods.size(); ++t) {
        Eigen::Index i = static_cast<Eigen::Index>(t);
        out << fit.periods[t] << ',' << fmt_double(fit.treated_series(i)) << ','
            << fmt_double(fit.synthetic_series(i)) << ',' << fmt_double(fit.gap_series(i)) << '\n';
    }
    return out.str();
}

std::string gsc_path_csv(const GscFit& fit) {
    std::ostringstream out;
    out << "period,treated,counterfactual,att,ci_low,ci_high\n";
    for (std::size_t t = 0; t < fit.periods.size(); ++t) {
        Eigen::Index i = static_cast<Eigen::Index>(t);
        out << fit.periods[t] << ',' << fmt_double(fit.treated_series(i)) << ','
            << fmt_double(fit.counterfactual(i)) << ',';
        if (t >= fit.n_pre) {
            Eigen::Index p = i - static_cast<Eigen::Index>(fit.n_pre);
            out << fmt_double(fit.att_path(p)) << ',' << fmt_double(fit.att_ci(p, 0)) << ','
                << fmt_double(fit.att_ci(p, 1));
        } else {
            out << ",,";
        }
        out << '\n';
    }
    return out.str();
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace synthpanel
