#include "qcmv/banded.hpp"

#include <algorithm>

namespace qcmv {

Banded::Banded(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), w_(2 * kl + ku + 1) {
    if (n < 0 || kl < 0 || ku < 0) throw Error(ErrorCode::InvalidArgument, "bad band shape");
    d_.assign(static_cast<std::size_t>(n) * w_, cplx{});
}

cplx Banded::get(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j)) return {};
    return slot(i, j);
}

void Banded::set(int i, int j, cplx v) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j))
        throw Error(ErrorCode::InvalidArgument, "entry outside the band");
    slot(i, j) = v;
}

std::vector<cplx> Banded::apply(const std::vector<cplx>& v) const {
    std::vector<cplx> r(n_);
    for (int i = 0; i < n_; ++i) {
        cplx s{};
        for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) s += slot(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

std::vector<cplx> Banded::apply_adjoint(const std::vector<cplx>& v) const {
    std::vector<cplx> r(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) r[j] += std::conj(slot(i, j)) * v[i];
    return r;
}

std::vector<cplx> Banded::dense() const {
    std::vector<cplx> m(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i)
        for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j)
            m[static_cast<std::size_t>(i) * n_ + j] = slot(i, j);
    return m;
}

Banded Banded::principal(int lo, int hi) const {
    int m = std::max(0, hi - lo + 1);
    Banded r(m, kl_, ku_);
    for (int i = 0; i < m; ++i)
        for (int j = std::max(0, i - kl_); j <= std::min(m - 1, i + ku_); ++j) r.slot(i, j) = slot(i + lo, j + lo);
    return r;
}

BandLU::BandLU(Banded a) : a_(std::move(a)) {
    const int n = a_.n_, kl = a_.kl_, ku = a_.ku_;
    piv_.resize(n);
    for (int c = 0; c < n; ++c) {
        int last = std::min(n - 1, c + kl);
        int p = c;
        double best = std::abs(a_.slot(c, c));
        for (int r = c + 1; r <= last; ++r) {
            double v = std::abs(a_.slot(r, c));
            if (v > best) {
                best = v;
                p = r;
            }
        }
        piv_[c] = p;
        int cmax = std::min(n - 1, c + kl + ku);
        if (p != c) {
            ++swaps_;
            for (int j = c; j <= cmax; ++j) std::swap(a_.slot(c, j), a_.slot(p, j));
        }
        cplx pivot = a_.slot(c, c);
        if (pivot == cplx{}) {
            singular_ = true;
            continue;
        }
        for (int r = c + 1; r <= last; ++r) {
            cplx l = a_.slot(r, c) / pivot;
            a_.slot(r, c) = l;
            if (l == cplx{}) continue;
            for (int j = c + 1; j <= cmax; ++j) a_.slot(r, j) -= l * a_.slot(c, j);
        }
    }
}

LogDet BandLU::det() const {
    LogDet d;
    if (singular_) return {kNegInf, cplx{1.0, 0.0}};
    // sum of logs is order fixed, so the result is reproducible
    std::vector<double> logs(a_.n_);
    cplx ph{1.0, 0.0};
    for (int i = 0; i < a_.n_; ++i) {
        cplx u = a_.slot(i, i);
        double m = std::abs(u);
        logs[i] = std::log(m);
        ph *= u / m;
        if ((i & 31) == 31) ph /= std::abs(ph);
    }
    d.log_modulus = pairwise_sum(logs);
    d.phase = (swaps_ % 2 ? -ph : ph) / std::abs(ph);
    return d;
}

void BandLU::regularize(double eps) {
    for (int i = 0; i < a_.n_; ++i)
        if (a_.slot(i, i) == cplx{}) a_.slot(i, i) = eps;
    singular_ = false;
}

std::vector<cplx> BandLU::solve(std::vector<cplx> b) const {
    if (singular_) throw Error(ErrorCode::SingularResolvent, "singular band matrix");
    const int n = a_.n_, kl = a_.kl_, ku = a_.ku_;
    for (int c = 0; c < n; ++c) {
        if (piv_[c] != c) std::swap(b[c], b[piv_[c]]);
        for (int r = c + 1; r <= std::min(n - 1, c + kl); ++r) b[r] -= a_.slot(r, c) * b[c];
    }
    for (int i = n - 1; i >= 0; --i) {
        cplx s = b[i];
        for (int j = i + 1; j <= std::min(n - 1, i + kl + ku); ++j) s -= a_.slot(i, j) * b[j];
        b[i] = s / a_.slot(i, i);
    }
    return b;
}

}  // namespace qcmv
