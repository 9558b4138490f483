#pragma once

#include <stdexcept>
#include <string>

namespace synthpanel {

// Exit-code categories used by the CLI: 1 config, 2 data, 3 numerical.
class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg, 1) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg, 2) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg, 3) {}
};

// panel
struct MalformedRow : DataError {
    explicit MalformedRow(const std::string& m) : DataError("MalformedRow: " + m) {}
};
struct NonNumericValue : DataError {
    explicit NonNumericValue(const std::string& m) : DataError("NonNumericValue: " + m) {}
};
struct DuplicateKey : DataError {
    explicit DuplicateKey(const std::string& m) : DataError("DuplicateKey: " + m) {}
};
struct UnbalancedPanel : DataError {
    explicit UnbalancedPanel(const std::string& m) : DataError("UnbalancedPanel: " + m) {}
};
struct TreatedUnitMissing : DataError {
    explicit TreatedUnitMissing(const std::string& m) : DataError("TreatedUnitMissing: " + m) {}
};
struct InsufficientPrePeriods : DataError {
    explicit InsufficientPrePeriods(const std::string& m)
        : DataError("InsufficientPrePeriods: " + m) {}
};
struct NoPostPeriods : DataError {
    explicit NoPostPeriods(const std::string& m) : DataError("NoPostPeriods: " + m) {}
};

// transform
struct NonPositiveValue : DataError {
    explicit NonPositiveValue(const std::string& m) : DataError("NonPositiveValue: " + m) {}
};
struct ZeroVarianceColumn : DataError {
    explicit ZeroVarianceColumn(const std::string& m) : DataError("ZeroVarianceColumn: " + m) {}
};
struct DegenerateCovariance : NumericalError {
    explicit DegenerateCovariance(const std::string& m)
        : NumericalError("DegenerateCovariance: " + m) {}
};

// scm
struct EmptyPredictorSet : DataError {
    explicit EmptyPredictorSet(const std::string& m) : DataError("EmptyPredictorSet: " + m) {}
};
struct NumericalFailure : NumericalError {
    explicit NumericalFailure(const std::string& m) : NumericalError("NumericalFailure: " + m) {}
};
struct EmptyPeriodSet : DataError {
    explicit EmptyPeriodSet(const std::string& m) : DataError("EmptyPeriodSet: " + m) {}
};
struct ZeroVarianceTreated : NumericalError {
    explicit ZeroVarianceTreated(const std::string& m)
        : NumericalError("ZeroVarianceTreated: " + m) {}
};

// placebo
struct DegenerateDistribution : NumericalError {
    explicit DegenerateDistribution(const std::string& m)
        : NumericalError("DegenerateDistribution: " + m) {}
};
struct TooFewPlacebos : DataError {
    explicit TooFewPlacebos(const std::string& m) : DataError("TooFewPlacebos: " + m) {}
};

// gsc
struct NonConvergence : NumericalError {
    explicit NonConvergence(const std::string& m) : NumericalError("NonConvergence: " + m) {}
};
struct RankDeficient : NumericalError {
    explicit RankDeficient(const std::string& m) : NumericalError("RankDeficient: " + m) {}
};
struct CollinearFactors : NumericalError {
    explicit CollinearFactors(const std::string& m) : NumericalError("CollinearFactors: " + m) {}
};
struct DegenerateResample : NumericalError {
    explicit DegenerateResample(const std::string& m)
        : NumericalError("DegenerateResample: " + m) {}
};

// dgp
struct GridTooLarge : DataError {
    explicit GridTooLarge(const std::string& m) : DataError("GridTooLarge: " + m) {}
};

// cli
struct NonPositiveBaseline : ConfigError {
    explicit NonPositiveBaseline(const std::string& m)
        : ConfigError("NonPositiveBaseline: " + m) {}
};
struct SourceUnreachable : DataError {
    explicit SourceUnreachable(const std::string& m) : DataError("SourceUnreachable: " + m) {}
};
struct UnknownSeriesCode : DataError {
    explicit UnknownSeriesCode(const std::string& m) : DataError("UnknownSeriesCode: " + m) {}
};

}  // namespace synthpanel
