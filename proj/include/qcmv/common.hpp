#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmv {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorCode {
    InvalidArgument,
    OutOfStrip,
    AccuracyUnreachable,
    InvalidVerblunsky,
    NotSu11,
    ApHypothesisViolated,
    InvalidBoundary,
    InvalidSpectralParameter,
    SingularResolvent,
    InvalidSite,
    CayleyBreakdown,
    HypothesisViolated,
    CorollaryViolated,
    ContinuationBroken,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode c, const std::string& what)
        : std::runtime_error(std::string(error_name(c)) + ": " + what), code_(c) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// A complex number kept as log|v| and v/|v|. Zero is log_modulus = -inf.
struct LogDet {
    double log_modulus = 0.0;
    cplx phase{1.0, 0.0};

    bool is_zero() const { return log_modulus == kNegInf; }
    cplx value() const { return is_zero() ? cplx{} : std::exp(log_modulus) * phase; }
    static LogDet from(cplx v);
    LogDet& operator*=(const LogDet& o);
    LogDet& operator*=(cplx v) { return *this *= from(v); }
};

// Pairwise summation; the tree shape depends only on the length, so the
// result does not depend on how the terms were produced.
double pairwise_sum(std::span<const double> v);

// Distance from t to the nearest integer.
inline double dist_to_int(double t) {
    double f = t - std::floor(t);
    return std::min(f, 1.0 - f);
}

inline double wrap01(double t) {
    double f = t - std::floor(t);
    return f >= 1.0 ? 0.0 : f;
}

}  // namespace qcmv
