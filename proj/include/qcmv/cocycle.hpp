#pragma once

#include <array>
#include <string>
#include <vector>

#include "qcmv/field.hpp"
#include "qcmv/torus.hpp"

namespace qcmv {

// True matrix = e^{log_scale} * e, entries row-major (e[0] e[1]; e[2] e[3]).
struct Scaled2x2 {
    std::array<cplx, 4> e{cplx{1.0}, cplx{}, cplx{}, cplx{1.0}};
    double log_scale = 0.0;

    static Scaled2x2 identity() { return {}; }
    // this <- a * this
    void left_multiply(const Scaled2x2& a);
    void renormalize();
    double max_entry() const;
    double norm_entries() const;  // spectral norm of e
    double log_norm() const { return log_scale + std::log(norm_entries()); }
    LogDet det() const;
    cplx entry(int i, int j) const { return std::exp(log_scale) * e[2 * i + j]; }
};

Scaled2x2 operator*(const Scaled2x2& a, const Scaled2x2& b);

// Spectral norm of a 2x2 complex matrix from its closed-form singular values.
double spectral_norm(const std::array<cplx, 4>& m);

// Principal root e^{i theta/2}, theta = arg z in [0, 2pi).
cplx principal_sqrt(cplx z);

Scaled2x2 one_step(cplx alpha, cplx z);

// M(alphas[n-1]) ... M(alphas[0])
Scaled2x2 transfer_seq(const std::vector<cplx>& alphas, cplx z);
Scaled2x2 transfer(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n);

struct Sl2r {
    std::array<double, 4> t{};
    double log_scale = 0.0;
    double max_imag = 0.0;  // largest discarded imaginary part, relative to the entries
};

// Q^* e Q with Q = -1/(1+i) [[1,-i],[1,i]].
Sl2r conjugate_sl2r(const Scaled2x2& m, double tol = 1e-10);
std::array<cplx, 4> conjugate_q(const std::array<cplx, 4>& m);

struct LdtExponents {
    double sigma = 0.05;
    double tau = 0.25;
    double nu = 0.05;
    double c0 = 1.0;

    void validate() const;
};

struct LyapunovEstimate {
    int n = 0;
    double value = 0.0;
    double std_error = 0.0;
    int sample_count = 0;
    double gamma_floor = 0.0;  // max(0, value - 3 std_error) unless pinned
};

// Per-sample (1/n) log||M_n(x)||.
std::vector<double> lyapunov_samples(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                     const std::vector<Phase>& samples);
std::vector<double> lyapunov_samples_serial(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                            const std::vector<Phase>& samples);

LyapunovEstimate summarize_lyapunov(int n, const std::vector<double>& per_sample);
LyapunovEstimate finite_lyapunov(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                 const std::vector<Phase>& samples);
LyapunovEstimate finite_lyapunov_serial(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                        const std::vector<Phase>& samples);

inline constexpr double kAvalancheConstant = 16.0;

struct AvalancheResult {
    int l = 0, m = 0;
    double mu = 0.0;
    double max_pair_defect = 0.0;
    double reconstruction = 0.0;  // sum log||B_{j+1}B_j|| - sum_{interior} log||B_j||
    double direct = 0.0;          // log||B_m ... B_1||
    double difference = 0.0;
    double bound = 0.0;  // C_A m / mu
    double c_a = kAvalancheConstant;
    bool within_bound = false;
};

AvalancheResult lyapunov_ap(const VerblunskyField& f, const Frequency& w, cplx z, int l, int m, const Phase& x);

}  // namespace qcmv
