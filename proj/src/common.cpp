#include "qcmv/common.hpp"

namespace qcmv {

const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::OutOfStrip: return "out-of-strip";
        case ErrorCode::AccuracyUnreachable: return "accuracy-unreachable";
        case ErrorCode::InvalidVerblunsky: return "invalid-verblunsky";
        case ErrorCode::NotSu11: return "not-su11";
        case ErrorCode::ApHypothesisViolated: return "ap-hypothesis-violated";
        case ErrorCode::InvalidBoundary: return "invalid-boundary";
        case ErrorCode::InvalidSpectralParameter: return "invalid-spectral-parameter";
        case ErrorCode::SingularResolvent: return "singular-resolvent";
        case ErrorCode::InvalidSite: return "invalid-site";
        case ErrorCode::CayleyBreakdown: return "cayley-breakdown";
        case ErrorCode::HypothesisViolated: return "hypothesis-violated";
        case ErrorCode::CorollaryViolated: return "corollary-violated";
        case ErrorCode::ContinuationBroken: return "continuation-broken";
    }
    return "unknown";
}

LogDet LogDet::from(cplx v) {
    double a = std::abs(v);
    if (a == 0.0) return {kNegInf, cplx{1.0, 0.0}};
    return {std::log(a), v / a};
}

LogDet& LogDet::operator*=(const LogDet& o) {
    log_modulus += o.log_modulus;
    phase *= o.phase;
    phase /= std::abs(phase);
    return *this;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

}  // namespace qcmv
