#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "qcmv/cmv.hpp"

namespace qcmv {

struct EigenPair {
    cplx value;
    std::vector<cplx> vector;
    double residual = 0.0;
};

struct EigenOptions {
    std::uint64_t seed = 0;
    int max_attempts = 8;
    // Cayley attempts whose largest |S_ij| exceeds this are retried
    double cayley_limit = 1e8;
    bool parallel = true;
};

// Spectrum sorted by argument in [0, 2pi); eigenvectors carry a real positive
// largest entry.
std::vector<EigenPair> eigensolve(const CmvRestriction& r, const EigenOptions& opt = {});
std::vector<EigenPair> eigensolve_serial(const CmvRestriction& r, std::uint64_t seed = 0);

// Eigen-decomposition of a dense Hermitian matrix (row-major) by cyclic Jacobi
// with round-robin pair ordering. Returns eigenvalues; vectors are the columns of w.
std::vector<double> jacobi_hermitian(std::vector<cplx>& s, int n, std::vector<cplx>& w, bool parallel,
                                     int* sweeps_out = nullptr);

double arg_2pi(cplx z);

double separation(const std::vector<EigenPair>& eigs, std::size_t j);

struct SpectralWindow {
    cplx center;
    double radius = 0.0;
    std::vector<std::size_t> members;
};
SpectralWindow make_window(const std::vector<EigenPair>& eigs, cplx center, double radius);

// prod (z_i - z_j) over members of each list inside the disk of `window`
LogDet resultant_window(const std::vector<EigenPair>& a, const std::vector<EigenPair>& b, const SpectralWindow& window);

// Polynomial by ascending coefficients.
using Poly = std::vector<cplx>;
std::vector<cplx> poly_roots(const Poly& p);
cplx poly_eval(const Poly& p, cplx z);
// Sylvester-matrix resultant.
cplx sylvester_resultant(const Poly& f, const Poly& g);

struct ResultantFloorReport {
    double resultant_abs = 0.0;
    double root_radius = 0.0;
    int s = 0;
    double delta = 0.0;
    double floor = 0.0;            // (delta/2)^s
    bool applicable = false;       // |Res| > delta
    double min_observed_max = 0.0; // min over grid of max(|f|,|g|)
    bool holds = true;
    int grid_points = 256;
};
ResultantFloorReport resultant_floor_check(const Poly& f, const Poly& g, double delta);

struct WeierstrassSplit {
    double logP = 0.0;
    double logG = 0.0;
};
WeierstrassSplit weierstrass_split(const CmvRestriction& r, const std::vector<EigenPair>& eigs,
                                   const SpectralWindow& window, cplx z);

struct ApproxMatch {
    double eps_tilde = 0.0;
    std::size_t nearest = 0;       // eigenpair minimizing |z0 - z|
    double nearest_distance = 0.0;
    std::size_t witness = 0;       // eigenpair realizing part (a)
    double witness_overlap = 0.0;
    double overlap_floor = 0.0;    // (2N)^{-1/2}
    bool part_a = false;
    // part (b): only when a caller-supplied eps_hat > eps_tilde isolates one eigenvalue
    bool part_b_applicable = false;
    double vector_distance = 0.0;
    double part_b_bound = 0.0;
    bool part_b = false;
};
ApproxMatch approx_eigen_match(const CmvRestriction& r, const std::vector<EigenPair>& eigs,
                               const std::vector<cplx>& phi, cplx z, std::optional<double> eps_hat = {});

// Optimal bottleneck matching distance min_pi max_i |a_i - b_pi(i)| between two
// equally long spectra.
double matching_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);

// min over unimodular c of ||a - c b||
double aligned_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);

void write_spectrum_csv(std::ostream& os, const std::vector<EigenPair>& eigs);

}  // namespace qcmv
