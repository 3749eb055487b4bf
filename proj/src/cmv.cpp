#include "qcmv/cmv.hpp"

#include <algorithm>

namespace qcmv {

std::array<cplx, 4> ThetaBlock::m() const {
    double r = rho_of(alpha);
    return {std::conj(alpha), r, r, -alpha};
}

void BoundaryPair::validate() const {
    if (std::abs(std::abs(beta) - 1.0) > 1e-14 || std::abs(std::abs(eta) - 1.0) > 1e-14)
        throw Error(ErrorCode::InvalidBoundary, "beta and eta must be unimodular");
}

CmvRestriction::CmvRestriction(int a, int b, std::vector<cplx> alphas, BoundaryPair bc)
    : a_(a), b_(b), alphas_(std::move(alphas)), bc_(bc) {
    if (b < a) throw Error(ErrorCode::InvalidArgument, "need b >= a");
    bc_.validate();
    const int n = size();
    if (static_cast<int>(alphas_.size()) != n + 1) throw Error(ErrorCode::InvalidArgument, "alphas must cover [a-1,b]");
    alphas_.front() = bc_.beta;
    alphas_.back() = bc_.eta;
    for (int i = 1; i < n; ++i)
        if (!(std::abs(alphas_[i]) < 1.0))
            throw Error(ErrorCode::InvalidVerblunsky, "interior coefficient outside the open disk");

    L_ = Banded(n, 1, 1);
    M_ = Banded(n, 1, 1);
    for (int k = a - 1; k <= b; ++k) {
        auto t = ThetaBlock{alphas_[k - (a - 1)]}.m();
        Banded& tgt = is_even(k) ? L_ : M_;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                int p = k + i - a, q = k + j - a;
                if (p >= 0 && p < n && q >= 0 && q < n) tgt.set(p, q, t[2 * i + j]);
            }
    }
    // sites outside every block (only possible when n = 0) keep zeros
    E_ = Banded(n, 2, 2);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
            cplx s{};
            for (int k = std::max(0, i - 1); k <= std::min(n - 1, i + 1); ++k) s += L_.get(i, k) * M_.get(k, j);
            E_.set(i, j, s);
        }
}

double CmvRestriction::unitarity_defect() const {
    const int n = size();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 4); j <= std::min(n - 1, i + 4); ++j) {
            cplx g{};
            for (int k = std::max(0, std::max(i, j) - 2); k <= std::min(n - 1, std::min(i, j) + 2); ++k)
                g += std::conj(E_.get(k, i)) * E_.get(k, j);
            if (i == j) g -= 1.0;
            s += std::norm(g);
        }
    return std::sqrt(s);
}

double CmvRestriction::factor_defect() const {
    const int n = size();
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
            cplx s{};
            for (int k = 0; k < n; ++k) s += L_.get(i, k) * M_.get(k, j);
            m = std::max(m, std::abs(s - E_.get(i, j)));
        }
    return m;
}

nlohmann::json CmvRestriction::dump() const {
    auto pair = [](cplx v) { return nlohmann::json::array({v.real(), v.imag()}); };
    nlohmann::json diags = nlohmann::json::object();
    const int n = size();
    for (int d = -2; d <= 2; ++d) {
        nlohmann::json arr = nlohmann::json::array();
        for (int i = std::max(0, -d); i < n && i + d < n; ++i) arr.push_back(pair(E_.get(i, i + d)));
        diags[std::to_string(d)] = arr;
    }
    nlohmann::json al = nlohmann::json::array();
    for (cplx v : alphas_) al.push_back(pair(v));
    return {{"a", a_}, {"b", b_}, {"beta", pair(bc_.beta)}, {"eta", pair(bc_.eta)},
            {"alphas_from", a_ - 1}, {"alphas", al}, {"diagonals", diags}};
}

CmvRestriction build_restriction(const VerblunskyField& f, const Frequency& w, const Phase& x, int a, int b,
                                 const BoundaryPair& bc) {
    if (b < a) throw Error(ErrorCode::InvalidArgument, "need b >= a");
    bc.validate();
    std::vector<cplx> al(static_cast<std::size_t>(b - a + 2));
    for (int k = a; k < b; ++k) al[k - (a - 1)] = f.evaluate(x.shifted(w, k));
    return CmvRestriction(a, b, std::move(al), bc);
}

CmvRestriction build_half_line(const VerblunskyField& f, const Frequency& w, const Phase& x, int n, cplx eta) {
    return build_restriction(f, w, x, 0, n - 1, BoundaryPair{cplx{-1.0, 0.0}, eta});
}

CmvRestriction sub_restriction(const CmvRestriction& outer, int a, int b, const BoundaryPair& bc) {
    if (a < outer.a() || b > outer.b() || b < a) throw Error(ErrorCode::InvalidSite, "sub-interval outside outer block");
    std::vector<cplx> al(static_cast<std::size_t>(b - a + 2));
    for (int k = a; k < b; ++k) al[k - (a - 1)] = outer.alpha_hat(k);
    BoundaryPair use = bc;
    if (a == outer.a()) use.beta = outer.boundary().beta;
    if (b == outer.b()) use.eta = outer.boundary().eta;
    return CmvRestriction(a, b, std::move(al), use);
}

static Banded shifted_block(const CmvRestriction& r, int lo, int hi, cplx z) {
    Banded m = r.band().principal(lo - r.a(), hi - r.a());
    for (int i = 0; i < m.n(); ++i)
        for (int j = std::max(0, i - 2); j <= std::min(m.n() - 1, i + 2); ++j)
            m.set(i, j, (i == j ? z : cplx{}) - m.get(i, j));
    return m;
}

LogDet char_det_block(const CmvRestriction& r, int lo, int hi, cplx z) {
    if (hi < lo) return {};
    if (lo < r.a() || hi > r.b()) throw Error(ErrorCode::InvalidSite, "block outside restriction");
    return BandLU(shifted_block(r, lo, hi, z)).det();
}

LogDet char_det_lu(const CmvRestriction& r, cplx z) { return char_det_block(r, r.a(), r.b(), z); }

static void require_unimodular(cplx z) {
    if (std::abs(std::abs(z) - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidSpectralParameter, "the transfer route needs |z| = 1");
}

TransferDet transfer_determinants(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                                  const BoundaryPair& bc) {
    require_unimodular(z);
    bc.validate();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be at least 2");
    TransferDet out;
    std::vector<double> logs;
    logs.reserve(n);
    Scaled2x2 p;
    for (int j = 0; j + 1 < n; ++j) {
        cplx al = f.evaluate(x.shifted(w, j));
        logs.push_back(std::log(rho_of(al)));
        p.left_multiply(one_step(al, z));
    }
    // last step has |eta| = 1, so keep it without the 1/rho normalization
    cplx s = principal_sqrt(z);
    Scaled2x2 last;
    last.e = {s, -std::conj(bc.eta) / s, -bc.eta * s, 1.0 / s};
    p.left_multiply(last);

    double th = std::arg(s) * 2.0;
    out.prefactor.log_modulus = pairwise_sum(logs);
    out.prefactor.phase = std::polar(1.0, std::fmod(0.5 * th * n, kTwoPi));
    out.product = p;

    LogDet base = out.prefactor;
    base.log_modulus += p.log_scale;
    out.z_phi1 = base;
    out.z_phi1 *= p.e[0];
    out.phi = base;
    out.phi *= p.e[0] - bc.beta * p.e[1];
    return out;
}

LogDet char_det_transfer(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                         const BoundaryPair& bc) {
    return transfer_determinants(f, w, z, x, n, bc).phi;
}

double normalized_log_det(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                          const BoundaryPair& bc) {
    auto r = build_restriction(f, w, x, 0, n - 1, bc);
    std::vector<double> logs(n);
    for (int j = 0; j < n; ++j) logs[j] = std::log(f.rho(x.shifted(w, j)));
    return char_det_lu(r, z).log_modulus - pairwise_sum(logs);
}

// sum of LogDet terms, all scaled down by the largest modulus
static cplx scaled_value(const LogDet& d, double ref) {
    return d.is_zero() ? cplx{} : std::exp(d.log_modulus - ref) * d.phase;
}

double determinant_recursion_residual(const CmvRestriction& r, cplx z) {
    const int n = r.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "recursion needs at least two sites");
    const int a = r.a();
    Banded A = shifted_block(r, a, r.b(), z);
    // cofactor expansion: along column 0 when a is even, along row 0 when odd
    const bool col = is_even(a);
    cplx c00 = A.get(0, 0);
    cplx c01 = col ? A.get(1, 0) : A.get(0, 1);
    Banded P(n - 1, 3, 3);
    for (int i = 0; i < n - 1; ++i)
        for (int j = std::max(0, i - 3); j <= std::min(n - 2, i + 3); ++j) {
            int ri = col ? (i == 0 ? 0 : i + 1) : i + 1;
            int cj = col ? j + 1 : (j == 0 ? 0 : j + 1);
            P.set(i, j, A.get(ri, cj));
        }
    LogDet phi = BandLU(A).det();
    LogDet phi1 = char_det_block(r, a + 1, r.b(), z);
    LogDet dp = BandLU(P).det();
    LogDet t1 = phi1;
    t1 *= c00;
    LogDet t2 = dp;
    t2 *= c01;
    double ref = std::max({phi.log_modulus, t1.log_modulus, t2.log_modulus});
    if (ref == kNegInf) return 0.0;
    cplx res = scaled_value(phi, ref) - scaled_value(t1, ref) + scaled_value(t2, ref);
    return std::abs(res);
}

Sl2rEntries sl2r_entries(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n,
                         const BoundaryPair& bc) {
    auto td = transfer_determinants(f, w, z, x, n, bc);
    auto r = build_restriction(f, w, x, 0, n - 1, bc);
    LogDet phi0 = char_det_lu(r, z);
    LogDet phi1 = char_det_block(r, 1, n - 1, z);

    LogDet pref = td.prefactor;
    pref.log_modulus += td.product.log_scale;
    const double ref = pref.log_modulus;
    auto over = [&](const LogDet& d) { return scaled_value(d, ref) / pref.phase; };
    const cplx zn = std::pow(z, n);

    LogDet zphi1 = phi1;
    zphi1 *= z;
    cplx A = over(zphi1);
    cplx B = (over(zphi1) - over(phi0)) / bc.beta;
    // duals on |z| = 1: Q*(z) = z^deg conj(Q(z)); the prefactor phase is handled by `over`
    LogDet Bd = LogDet::from(B);
    Bd.log_modulus += ref;
    Bd.phase *= pref.phase;
    LogDet Cd{Bd.log_modulus, zn * std::conj(Bd.phase)};
    LogDet Dd{phi1.log_modulus, std::pow(z, n - 1) * std::conj(phi1.phase)};
    cplx C = over(Cd);
    cplx D = over(Dd);
    const cplx I(0.0, 1.0);
    Sl2rEntries out;
    out.t = {(A + B + C + D) / 2.0, (-I * A + I * B - I * C + I * D) / 2.0, (I * A + I * B - I * C - I * D) / 2.0,
             (A - B - C + D) / 2.0};
    out.prefactor = pref;
    out.expected = conjugate_q(td.product.e);
    return out;
}

Banded green_pencil(const CmvRestriction& r, cplx z) {
    const int n = r.size();
    Banded p(n, 1, 1);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j)
            p.set(i, j, z * std::conj(r.L().get(j, i)) - r.M().get(i, j));
    return p;
}

cplx greens_entry(const CmvRestriction& r, int j, int k, cplx z) {
    if (j < r.a() || j > r.b() || k < r.a() || k > r.b()) throw Error(ErrorCode::InvalidSite, "site outside block");
    BandLU lu(green_pencil(r, z));
    if (lu.singular()) throw Error(ErrorCode::SingularResolvent, "z is an eigenvalue");
    std::vector<cplx> e(r.size());
    e[k - r.a()] = 1.0;
    return lu.solve(std::move(e))[j - r.a()];
}

double greens_ratio(const CmvRestriction& r, int j, int k, cplx z) {
    if (j > k) throw Error(ErrorCode::InvalidArgument, "ratio formula needs j <= k");
    LogDet full = char_det_lu(r, z);
    if (full.is_zero()) throw Error(ErrorCode::SingularResolvent, "z is an eigenvalue");
    double lg = char_det_block(r, r.a(), j - 1, z).log_modulus + char_det_block(r, k + 1, r.b(), z).log_modulus -
                full.log_modulus;
    for (int i = j; i < k; ++i) lg += std::log(r.rho_hat(i));
    return std::exp(lg);
}

PoissonTerms poisson_terms(const CmvRestriction& outer, const CmvRestriction& sub, const std::vector<cplx>& u,
                           cplx z) {
    const int a = sub.a(), b = sub.b(), o = outer.a();
    auto U = [&](int s) -> cplx { return (s < outer.a() || s > outer.b()) ? cplx{} : u[s - o]; };
    PoissonTerms t;
    cplx am = outer.alpha_hat(a - 1), bm = outer.alpha_hat(b);
    double ra = rho_of(am), rb = rho_of(bm);
    cplx beta = sub.boundary().beta, eta = sub.boundary().eta;
    if (is_even(a - 1))
        t.wa = z * (std::conj(beta) - std::conj(am)) * U(a) + z * ra * U(a - 1);
    else
        t.wa = (am - beta) * U(a) - ra * U(a - 1);
    if (is_even(b))
        t.wb = z * (bm - eta) * U(b) + z * rb * U(b + 1);
    else
        t.wb = (std::conj(eta) - std::conj(bm)) * U(b) - rb * U(b + 1);
    return t;
}

double poisson_residual(const CmvRestriction& outer, const CmvRestriction& sub, const std::vector<cplx>& u, cplx z,
                        int m) {
    if (!(sub.a() < m && m < sub.b())) throw Error(ErrorCode::InvalidSite, "m must lie strictly inside [a,b]");
    if (sub.a() < outer.a() || sub.b() > outer.b()) throw Error(ErrorCode::InvalidSite, "block outside outer");
    if (static_cast<int>(u.size()) != outer.size()) throw Error(ErrorCode::InvalidArgument, "u has wrong length");
    PoissonTerms t = poisson_terms(outer, sub, u, z);
    BandLU lu(green_pencil(sub, z));
    if (lu.singular()) throw Error(ErrorCode::SingularResolvent, "z is an eigenvalue of the block");
    std::vector<cplx> rhs(sub.size());
    rhs.front() -= t.wa;
    rhs.back() -= t.wb;
    // G e_a w(a) + G e_b w(b) in one solve
    auto v = lu.solve(std::move(rhs));
    return std::abs(u[m - outer.a()] - v[m - sub.a()]);
}

}  // namespace qcmv
