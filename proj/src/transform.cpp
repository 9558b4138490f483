#include "synthpanel/transform.hpp"

#include <cmath>

#include "synthpanel/errors.hpp"

namespace synthpanel {

TransformKind transform_kind_from_string(const std::string& s) {
    if (s == "identity") return TransformKind::identity;
    if (s == "log") return TransformKind::log;
    if (s == "log_normalized") return TransformKind::log_normalized;
    if (s == "zscore") return TransformKind::zscore;
    throw ConfigError("unknown transform '" + s + "'");
}

std::string to_string(TransformKind k) {
    switch (k) {
        case TransformKind::identity: return "identity";
        case TransformKind::log: return "log";
        case TransformKind::log_normalized: return "log_normalized";
        case TransformKind::zscore: return "zscore";
    }
    return "identity";
}

std::vector<double> apply_transform(std::span<const double> series, const TransformSpec& spec,
                                    std::span<const int> periods) {
    std::vector<double> out(series.begin(), series.end());
    switch (spec.kind) {
        case TransformKind::identity:
            break;
        case TransformKind::log:
        case TransformKind::log_normalized:
            // log_normalized is the natural log of the raw level series
            for (std::size_t i = 0; i < out.size(); ++i) {
                double x = out[i] + spec.offset;
                if (x <= 0.0) {
                    std::string where = i < periods.size() ? "period " + std::to_string(periods[i])
                                                           : "index " + std::to_string(i);
                    throw NonPositiveValue("log transform requires positive values, got " +
                                           std::to_string(out[i]) + " at " + where);
                }
                out[i] = std::log(x);
            }
            break;
        case TransformKind::zscore: {
            double n = static_cast<double>(out.size());
            if (out.size() < 2) throw ZeroVarianceColumn("zscore needs at least 2 values");
            double mean = 0.0;
            for (double x : out) mean += x;
            mean /= n;
            double ss = 0.0;
            for (double x : out) ss += (x - mean) * (x - mean);
            double sd = std::sqrt(ss / (n - 1.0));
            if (sd == 0.0) throw ZeroVarianceColumn("series is constant");
            for (auto& x : out) x = (x - mean) / sd;
            break;
        }
    }
    return out;
}

Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& matrix) {
    Eigen::MatrixXd out = matrix;
    double n = static_cast<double>(matrix.rows());
    if (matrix.rows() < 2) throw ZeroVarianceColumn("need at least 2 rows");
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        double mean = matrix.col(j).mean();
        double ss = (matrix.col(j).array() - mean).square().sum();
        double sd = std::sqrt(ss / (n - 1.0));
        if (sd == 0.0) throw ZeroVarianceColumn("column " + std::to_string(j) + " is constant");
        out.col(j) = (matrix.col(j).array() - mean) / sd;
    }
    return out;
}

PrincipalComponentResult first_principal_component(const Eigen::MatrixXd& indicators) {
    Eigen::Index k = indicators.cols();
    if (k < 2) throw DataError("first_principal_component needs at least 2 indicators");
    if (indicators.rows() < k + 1)
        throw DataError("first_principal_component needs at least k+1 observations");

    Eigen::MatrixXd z = zscore_columns(indicators);
    double n = static_cast<double>(z.rows());
    Eigen::MatrixXd corr = (z.transpose() * z) / (n - 1.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) throw DegenerateCovariance("eigendecomposition failed");
    // eigenvalues ascending; top is last
    double top = eig.eigenvalues()(k - 1);
    if (top <= 0.0) throw DegenerateCovariance("correlation matrix has no positive eigenvalue");

    PrincipalComponentResult res;
    res.loadings = eig.eigenvectors().col(k - 1);
    if (res.loadings.sum() < 0.0) res.loadings = -res.loadings;
    res.scores = z * res.loadings;
    res.explained_variance_ratio = top / eig.eigenvalues().sum();
    return res;
}

}  // namespace synthpanel
