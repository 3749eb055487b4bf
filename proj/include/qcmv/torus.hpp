#pragma once

#include <cstdint>
#include <vector>

#include "qcmv/common.hpp"

namespace qcmv {

// Shift frequency on T^d together with the Diophantine parameters (p, q).
struct Frequency {
    std::vector<double> omega;
    double p = 1.0;
    double q = 2.0;

    Frequency() = default;
    Frequency(std::vector<double> w, double p_, double q_);
    std::size_t dim() const { return omega.size(); }
};

// Point of T^d, optionally lifted into the complex strip by y.
struct Phase {
    std::vector<double> x;
    std::vector<double> y;  // empty means real

    Phase() = default;
    explicit Phase(std::vector<double> x_, std::vector<double> y_ = {});
    std::size_t dim() const { return x.size(); }
    bool is_real() const;
    // x + n*omega reduced mod 1; y is carried along unchanged.
    Phase shifted(const Frequency& w, double n) const;
};

// Torus distance between two real phases (sup over coordinates).
double torus_distance(const Phase& a, const Phase& b);

double diophantine_margin(const Frequency& w, int k_max);

std::vector<Phase> orbit(const Phase& x0, const Frequency& w, int n);

// Additive Kronecker sequence in T^d. The seed moves the start point.
std::vector<Phase> phase_grid(int d, int count, std::uint64_t seed);

}  // namespace qcmv
