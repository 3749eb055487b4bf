#include "qcmv/cocycle.hpp"

#include <algorithm>

namespace qcmv {

double spectral_norm(const std::array<cplx, 4>& m) {
    double f = std::norm(m[0]) + std::norm(m[1]) + std::norm(m[2]) + std::norm(m[3]);
    double dt = std::abs(m[0] * m[3] - m[1] * m[2]);
    double disc = std::max(0.0, (f - 2 * dt) * (f + 2 * dt));
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

void Scaled2x2::left_multiply(const Scaled2x2& a) {
    std::array<cplx, 4> r{a.e[0] * e[0] + a.e[1] * e[2], a.e[0] * e[1] + a.e[1] * e[3],
                          a.e[2] * e[0] + a.e[3] * e[2], a.e[2] * e[1] + a.e[3] * e[3]};
    e = r;
    log_scale += a.log_scale;
    renormalize();
}

double Scaled2x2::max_entry() const {
    double m = 0.0;
    for (const auto& v : e) m = std::max(m, std::abs(v));
    return m;
}

// power-of-two rescaling is exact, so renormalizing never perturbs the entries
void Scaled2x2::renormalize() {
    double m = max_entry();
    if (m == 0.0 || !std::isfinite(m)) return;
    int k;
    std::frexp(m, &k);
    if (k == 0) return;
    for (auto& v : e) v = cplx{std::ldexp(v.real(), -k), std::ldexp(v.imag(), -k)};
    log_scale += k * std::log(2.0);
}

double Scaled2x2::norm_entries() const { return spectral_norm(e); }

LogDet Scaled2x2::det() const {
    LogDet d = LogDet::from(e[0] * e[3] - e[1] * e[2]);
    d.log_modulus += 2 * log_scale;
    return d;
}

Scaled2x2 operator*(const Scaled2x2& a, const Scaled2x2& b) {
    Scaled2x2 r = b;
    r.left_multiply(a);
    return r;
}

cplx principal_sqrt(cplx z) {
    double th = std::atan2(z.imag(), z.real());
    if (th < 0) th += kTwoPi;
    return std::polar(std::sqrt(std::abs(z)), th / 2);
}

Scaled2x2 one_step(cplx alpha, cplx z) {
    double a = std::abs(alpha);
    if (!(a < 1.0)) throw Error(ErrorCode::InvalidVerblunsky, "|alpha| = " + std::to_string(a));
    cplx s = principal_sqrt(z);
    Scaled2x2 m;
    m.e = {s, -std::conj(alpha) / s, -alpha * s, 1.0 / s};
    m.log_scale = -std::log(rho_of(alpha));
    m.renormalize();
    return m;
}

Scaled2x2 transfer_seq(const std::vector<cplx>& alphas, cplx z) {
    Scaled2x2 p;
    for (cplx a : alphas) p.left_multiply(one_step(a, z));
    return p;
}

Scaled2x2 transfer(const VerblunskyField& f, const Frequency& w, cplx z, const Phase& x, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    Scaled2x2 p;
    for (int j = 0; j < n; ++j) p.left_multiply(one_step(f.evaluate(x.shifted(w, j)), z));
    return p;
}

std::array<cplx, 4> conjugate_q(const std::array<cplx, 4>& m) {
    const cplx c = -1.0 / cplx(1.0, 1.0);
    const cplx I(0.0, 1.0);
    std::array<cplx, 4> q{c, -I * c, c, I * c};
    // m q
    std::array<cplx, 4> mq{m[0] * q[0] + m[1] * q[2], m[0] * q[1] + m[1] * q[3], m[2] * q[0] + m[3] * q[2],
                           m[2] * q[1] + m[3] * q[3]};
    std::array<cplx, 4> qs{std::conj(q[0]), std::conj(q[2]), std::conj(q[1]), std::conj(q[3])};
    return {qs[0] * mq[0] + qs[1] * mq[2], qs[0] * mq[1] + qs[1] * mq[3], qs[2] * mq[0] + qs[3] * mq[2],
            qs[2] * mq[1] + qs[3] * mq[3]};
}

Sl2r conjugate_sl2r(const Scaled2x2& m, double tol) {
    auto t = conjugate_q(m.e);
    Sl2r r;
    r.log_scale = m.log_scale;
    double scale = std::max(1.0, m.max_entry());
    for (int i = 0; i < 4; ++i) {
        r.t[i] = t[i].real();
        r.max_imag = std::max(r.max_imag, std::abs(t[i].imag()) / scale);
    }
    if (r.max_imag > tol) throw Error(ErrorCode::NotSu11, "imaginary residue " + std::to_string(r.max_imag));
    return r;
}

void LdtExponents::validate() const {
    auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open01(sigma) || !open01(tau) || !open01(nu))
        throw Error(ErrorCode::InvalidArgument, "sigma, tau, nu must lie in (0,1)");
    if (!(c0 > 0)) throw Error(ErrorCode::InvalidArgument, "c0 must be positive");
}

std::vector<double> lyapunov_samples(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                     const std::vector<Phase>& samples) {
    std::vector<double> u(samples.size());
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) u[i] = transfer(f, w, z, samples[i], n).log_norm() / n;
    return u;
}

std::vector<double> lyapunov_samples_serial(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                            const std::vector<Phase>& samples) {
    std::vector<double> u;
    u.reserve(samples.size());
    for (const auto& x : samples) u.push_back(transfer(f, w, z, x, n).log_norm() / n);
    return u;
}

LyapunovEstimate summarize_lyapunov(int n, const std::vector<double>& u) {
    LyapunovEstimate est;
    est.n = n;
    est.sample_count = static_cast<int>(u.size());
    if (u.empty()) return est;
    const double N = static_cast<double>(u.size());
    est.value = pairwise_sum(u) / N;
    if (u.size() > 1) {
        std::vector<double> sq(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) sq[i] = (u[i] - est.value) * (u[i] - est.value);
        est.std_error = std::sqrt(pairwise_sum(sq) / (N - 1) / N);
    }
    est.gamma_floor = std::max(0.0, est.value - 3 * est.std_error);
    return est;
}

LyapunovEstimate finite_lyapunov(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                 const std::vector<Phase>& samples) {
    if (n < 1 || samples.empty()) throw Error(ErrorCode::InvalidArgument, "need n >= 1 and samples");
    return summarize_lyapunov(n, lyapunov_samples(f, w, z, n, samples));
}

LyapunovEstimate finite_lyapunov_serial(const VerblunskyField& f, const Frequency& w, cplx z, int n,
                                        const std::vector<Phase>& samples) {
    if (n < 1 || samples.empty()) throw Error(ErrorCode::InvalidArgument, "need n >= 1 and samples");
    return summarize_lyapunov(n, lyapunov_samples_serial(f, w, z, n, samples));
}

AvalancheResult lyapunov_ap(const VerblunskyField& f, const Frequency& w, cplx z, int l, int m, const Phase& x) {
    if (l < 2 || m < 2) throw Error(ErrorCode::InvalidArgument, "l and m must be at least 2");
    std::vector<Scaled2x2> B;
    B.reserve(m);
    for (int j = 0; j < m; ++j) B.push_back(transfer(f, w, z, x.shifted(w, static_cast<double>(j) * l), l));

    AvalancheResult r;
    r.l = l;
    r.m = m;
    std::vector<double> lb(m);
    int jmin = 0;
    for (int j = 0; j < m; ++j) {
        lb[j] = B[j].log_norm();
        if (lb[j] < lb[jmin]) jmin = j;
    }
    double log_mu = lb[jmin];
    r.mu = std::exp(log_mu);
    if (!(log_mu >= std::log(static_cast<double>(m))))
        throw Error(ErrorCode::ApHypothesisViolated, "AP-1 fails at j=" + std::to_string(jmin + 1) +
                                                         ": min ||B_j|| = " + std::to_string(r.mu) + " < m");
    std::vector<double> lp(m - 1);
    for (int j = 0; j + 1 < m; ++j) {
        lp[j] = (B[j + 1] * B[j]).log_norm();
        double defect = lb[j + 1] + lb[j] - lp[j];
        r.max_pair_defect = std::max(r.max_pair_defect, defect);
        if (!(defect < 0.5 * log_mu))
            throw Error(ErrorCode::ApHypothesisViolated,
                        "AP-2 fails at j=" + std::to_string(j + 1) + ": defect " + std::to_string(defect));
    }
    std::vector<double> interior(lb.begin() + 1, lb.end() - 1);
    r.reconstruction = pairwise_sum(lp) - pairwise_sum(interior);
    Scaled2x2 prod;
    for (const auto& b : B) prod.left_multiply(b);
    r.direct = prod.log_norm();
    r.difference = std::abs(r.reconstruction - r.direct);
    r.bound = std::exp(std::log(r.c_a * m) - log_mu);
    r.within_bound = r.difference < r.bound;
    return r;
}

}  // namespace qcmv
