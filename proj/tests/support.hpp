#pragma once

#include <random>

#include "qcmv/lab.hpp"

namespace qcmv::testing {

inline Frequency golden() { return Frequency({0.6180339887498949}, 0.1, 2.0); }
inline Frequency omega2() { return Frequency({std::sqrt(2.0) - 1, std::sqrt(3.0) - 1}, 0.05, 3.0); }

inline TrigPolynomial poly1(std::initializer_list<std::pair<int, cplx>> cs) {
    TrigPolynomial p(1);
    for (auto [k, c] : cs) p.add({k}, c);
    return p;
}

inline VerblunskyField zero_field(int d = 1) { return VerblunskyField(TrigPolynomial(d), 1.0); }

// 0.9 e^{2 pi i x_1} on T^2
inline VerblunskyField rotor09() {
    TrigPolynomial p(2);
    p.add({1, 0}, 0.9);
    return VerblunskyField(p, 0.01);
}

inline cplx unimodular(std::mt19937_64& g) {
    return std::polar(1.0, std::uniform_real_distribution<double>(0, kTwoPi)(g));
}

// Random field with a few modes of l1 degree <= 2 and certificate in [0.3, 0.95].
inline VerblunskyField random_field(std::mt19937_64& g, int d) {
    std::uniform_real_distribution<double> U(-1, 1), C(0.3, 0.95);
    std::uniform_int_distribution<int> K(-1, 1);
    TrigPolynomial p(d);
    std::uniform_int_distribution<int> count(1, 4);
    int m = count(g);
    for (int i = 0; i < m; ++i) {
        Mode k(d);
        for (auto& v : k) v = K(g);
        p.add(k, cplx{U(g), U(g)});
    }
    if (p.coeffs.empty()) p.add(Mode(d, 0), 0.5);
    const double h = 0.02;
    double cert = VerblunskyField::certificate_of(p, h);
    double s = C(g) / cert;
    TrigPolynomial q(d);
    for (auto [k, c] : p.coeffs) q.add(k, c * s);
    return VerblunskyField(q, h);
}

inline Phase random_phase(std::mt19937_64& g, int d) {
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<double> x(d);
    for (auto& v : x) v = U(g);
    return Phase(x);
}

inline Frequency frequency_for(int d) { return d == 1 ? golden() : omega2(); }

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace qcmv::testing
