#pragma once

#include <array>
#include <vector>

#include "json.hpp"

#include "qcmv/banded.hpp"
#include "qcmv/cocycle.hpp"
#include "qcmv/field.hpp"
#include "qcmv/torus.hpp"

namespace qcmv {

// [[conj(a), rho], [rho, -a]]
struct ThetaBlock {
    cplx alpha;
    std::array<cplx, 4> m() const;
};

struct BoundaryPair {
    cplx beta{1.0, 0.0};
    cplx eta{1.0, 0.0};
    void validate() const;
};

inline bool is_even(int k) { return ((k % 2) + 2) % 2 == 0; }

// Finite CMV block on [a,b] with alpha_hat_{a-1} = beta, alpha_hat_b = eta.
// Site indices passed to member functions are absolute.
class CmvRestriction {
public:
    // alphas covers [a-1, b]; its end entries are replaced by the boundary.
    CmvRestriction(int a, int b, std::vector<cplx> alphas, BoundaryPair bc);

    int a() const { return a_; }
    int b() const { return b_; }
    int size() const { return b_ - a_ + 1; }
    const BoundaryPair& boundary() const { return bc_; }
    cplx alpha_hat(int k) const { return alphas_.at(k - (a_ - 1)); }
    double rho_hat(int k) const { return rho_of(alpha_hat(k)); }
    const std::vector<cplx>& alphas() const { return alphas_; }

    const Banded& L() const { return L_; }
    const Banded& M() const { return M_; }
    const Banded& band() const { return E_; }
    cplx entry(int i, int j) const { return E_.get(i - a_, j - a_); }

    double unitarity_defect() const;  // ||E^* E - I||_F
    double factor_defect() const;     // max |E - L M|

    nlohmann::json dump() const;

private:
    int a_, b_;
    std::vector<cplx> alphas_;
    BoundaryPair bc_;
    Banded L_, M_, E_;
};

CmvRestriction build_restriction(const VerblunskyField& f, const Frequency& w, const Phase& x, int a, int b,
                                 const BoundaryPair& bc);
// Half-line C = L+ M+ truncated to [0, n-1] (alpha_{-1} = -1).
CmvRestriction build_half_line(const VerblunskyField& f, const Frequency& w, const Phase& x, int n, cplx eta);
// Block [a,b] inside `outer`, reusing outer's coefficients. The given boundary
// is used only at cuts strictly inside outer; shared edges keep outer's values.
CmvRestriction sub_restriction(const CmvRestriction& outer, int a, int b, const BoundaryPair& bc);

// det(z - E) on the principal block [lo, hi] (absolute sites); empty block gives 1.
LogDet char_det_block(const CmvRestriction& r, int lo, int hi, cplx z);
LogDet char_det_lu(const CmvRestriction& r, cplx z);

// phi_[0,n-1] and z*phi_[1,n-1] at phase x from the cocycle route.
struct TransferDet {
    LogDet phi;       // phi^{beta,eta}_[0,n-1]
    LogDet z_phi1;    // z * phi^{beta,eta}_[1,n-1]
    LogDet prefactor; // (sqrt z)^n prod_{j<n-1} rho_j
    Scaled2x2 product;
};
TransferDet transfer_determinants(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                                  const BoundaryPair& bc);
LogDet char_det_transfer(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                         const BoundaryPair& bc);

// log|phi| - sum_{j=0}^{n-1} log rho(x + j omega): the determinant on the same
// scale as log||M_n||.
double normalized_log_det(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                          const BoundaryPair& bc);

// phi_[0,n-1] - (z + conj(alpha_0) beta) phi_[1,n-1] + rho_0 beta det P_{n-1}, relative to |phi|.
double determinant_recursion_residual(const CmvRestriction& r, cplx z);

struct Sl2rEntries {
    std::array<cplx, 4> t;   // divided by the prefactor
    LogDet prefactor;        // (sqrt z)^n prod rho * e^{product.log_scale}
    std::array<cplx, 4> expected;  // conjugate_q of the cocycle product entries
};
Sl2rEntries sl2r_entries(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                         const BoundaryPair& bc);

// z^deg conj(Q(1/conj z))
template <class F>
cplx szego_dual(F&& q, cplx z, int deg) {
    return std::pow(z, deg) * std::conj(q(1.0 / std::conj(z)));
}

// Pencil z L^* - M whose inverse is the finite-volume Green's function.
Banded green_pencil(const CmvRestriction& r, cplx z);
cplx greens_entry(const CmvRestriction& r, int j, int k, cplx z);
// |G(j,k)| for j <= k through principal-block determinants.
double greens_ratio(const CmvRestriction& r, int j, int k, cplx z);

// Boundary weights w(a), w(b) of the two-term Poisson identity for the block
// [a,b] inside `outer`; u indexes outer's sites.
struct PoissonTerms {
    cplx wa, wb;
};
PoissonTerms poisson_terms(const CmvRestriction& outer, const CmvRestriction& sub, const std::vector<cplx>& u,
                           cplx z);
double poisson_residual(const CmvRestriction& outer, const CmvRestriction& sub, const std::vector<cplx>& u, cplx z,
                        int m);

}  // namespace qcmv
