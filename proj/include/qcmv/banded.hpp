#pragma once

#include <vector>

#include "qcmv/common.hpp"

namespace qcmv {

// Square band matrix with kl sub- and ku super-diagonals. Each row keeps kl
// extra slots on the right for the fill-in produced by row pivoting.
class Banded {
public:
    Banded() = default;
    Banded(int n, int kl, int ku);

    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }
    bool in_band(int i, int j) const { return j - i >= -kl_ && j - i <= ku_; }
    cplx get(int i, int j) const;
    void set(int i, int j, cplx v);
    void add(int i, int j, cplx v) { set(i, j, get(i, j) + v); }

    std::vector<cplx> apply(const std::vector<cplx>& v) const;
    std::vector<cplx> apply_adjoint(const std::vector<cplx>& v) const;
    std::vector<cplx> dense() const;  // row-major

    // Principal block [lo, hi] (0-based, inclusive).
    Banded principal(int lo, int hi) const;

    friend class BandLU;

private:
    int n_ = 0, kl_ = 0, ku_ = 0, w_ = 1;
    std::vector<cplx> d_;
    cplx& slot(int i, int j) { return d_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }
    cplx slot(int i, int j) const { return d_[static_cast<std::size_t>(i) * w_ + (j - i + kl_)]; }
};

// LU with partial pivoting; keeps the band structure (upper width grows to kl+ku).
class BandLU {
public:
    explicit BandLU(Banded a);

    bool singular() const { return singular_; }
    LogDet det() const;
    // Replaces exact zero pivots by tiny ones so inverse iteration can proceed.
    void regularize(double eps);
    std::vector<cplx> solve(std::vector<cplx> b) const;

private:
    Banded a_;
    std::vector<int> piv_;
    bool singular_ = false;
    int swaps_ = 0;
};

}  // namespace qcmv
