#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthpanel {

enum class TransformKind { identity, log, log_normalized, zscore };

struct TransformSpec {
    TransformKind kind = TransformKind::identity;
    // additive offset applied before log-family transforms; defaults to 0,
    // which rejects non-positive inputs
    double offset = 0.0;
};

TransformKind transform_kind_from_string(const std::string& s);
std::string to_string(TransformKind k);

// Elementwise transform. `periods`, when given, is used to name the offending
// period in NonPositiveValue errors.
std::vector<double> apply_transform(std::span<const double> series, const TransformSpec& spec,
                                    std::span<const int> periods = {});

// Each column to sample mean 0, sample sd 1 (denominator n-1).
Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& matrix);

struct PrincipalComponentResult {
    Eigen::VectorXd scores;    // one per observation row
    Eigen::VectorXd loadings;  // unit norm, sum >= 0
    double explained_variance_ratio = 0.0;
};

// First PC of the sample correlation matrix (columns standardized internally).
PrincipalComponentResult first_principal_component(const Eigen::MatrixXd& indicators);

}  // namespace synthpanel
