#include "qcmv/torus.hpp"

#include <algorithm>
#include <functional>

namespace qcmv {

Frequency::Frequency(std::vector<double> w, double p_, double q_) : omega(std::move(w)), p(p_), q(q_) {
    for (double& t : omega) {
        if (!std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "non-finite frequency");
        t = wrap01(t);
    }
    if (!(p > 0)) throw Error(ErrorCode::InvalidArgument, "Diophantine p must be positive");
    if (!(q > static_cast<double>(omega.size())))
        throw Error(ErrorCode::InvalidArgument, "Diophantine q must exceed the dimension");
}

Phase::Phase(std::vector<double> x_, std::vector<double> y_) : x(std::move(x_)), y(std::move(y_)) {
    for (double& t : x) t = wrap01(t);
    if (!y.empty() && y.size() != x.size()) throw Error(ErrorCode::InvalidArgument, "phase y has wrong length");
}

bool Phase::is_real() const {
    return std::all_of(y.begin(), y.end(), [](double t) { return t == 0.0; });
}

Phase Phase::shifted(const Frequency& w, double n) const {
    Phase r = *this;
    for (std::size_t i = 0; i < x.size(); ++i) r.x[i] = wrap01(x[i] + n * w.omega[i]);
    return r;
}

double torus_distance(const Phase& a, const Phase& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) m = std::max(m, dist_to_int(a.x[i] - b.x[i]));
    return m;
}

double diophantine_margin(const Frequency& w, int k_max) {
    if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 1");
    const std::size_t d = w.dim();
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "empty frequency");
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> k(d, 0);
    // enumerate k with |k|_1 <= k_max
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int budget) {
        if (i == d) {
            int norm = 0;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                norm += std::abs(k[j]);
                dot += k[j] * w.omega[j];
            }
            if (norm == 0) return;
            best = std::min(best, dist_to_int(dot) * std::pow(static_cast<double>(norm), w.q));
            return;
        }
        for (int v = -budget; v <= budget; ++v) {
            k[i] = v;
            rec(i + 1, budget - std::abs(v));
        }
        k[i] = 0;
    };
    rec(0, k_max);
    return best;
}

std::vector<Phase> orbit(const Phase& x0, const Frequency& w, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be at least 1");
    std::vector<Phase> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(x0.shifted(w, i));
    return out;
}

std::vector<Phase> phase_grid(int d, int count, std::uint64_t seed) {
    if (d <= 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
    // generator: powers of the root of x^{d+1} = x + 1
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    std::vector<double> g(d), start(d);
    for (int j = 0; j < d; ++j) {
        g[j] = wrap01(std::pow(1.0 / phi, j + 1));
        start[j] = wrap01(0.5 + static_cast<double>(seed % 1000003u) * g[j] * std::sqrt(2.0));
    }
    std::vector<Phase> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        std::vector<double> x(d);
        for (int j = 0; j < d; ++j) x[j] = wrap01(start[j] + i * g[j]);
        out.emplace_back(std::move(x));
    }
    return out;
}

}  // namespace qcmv
