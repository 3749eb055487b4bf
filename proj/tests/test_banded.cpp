#include <Eigen/Dense>

#include "doctest.h"
#include "support.hpp"

using namespace qcmv;

namespace {
Banded random_band(std::mt19937_64& g, int n, int kl, int ku) {
    std::uniform_real_distribution<double> U(-1, 1);
    Banded b(n, kl, ku);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) b.set(i, j, {U(g), U(g)});
    return b;
}

Eigen::MatrixXcd to_eigen(const Banded& b) {
    auto d = b.dense();
    Eigen::MatrixXcd m(b.n(), b.n());
    for (int i = 0; i < b.n(); ++i)
        for (int j = 0; j < b.n(); ++j) m(i, j) = d[static_cast<std::size_t>(i) * b.n() + j];
    return m;
}
}  // namespace

TEST_CASE("band storage") {
    Banded b(5, 1, 2);
    CHECK(b.get(4, 0) == cplx{});
    b.set(1, 3, 2.0);
    CHECK(b.get(1, 3) == cplx(2.0));
    CHECK_THROWS_AS(b.set(4, 0, 1.0), Error);
    auto p = b.principal(1, 3);
    CHECK(p.n() == 3);
    CHECK(p.get(0, 2) == cplx(2.0));
}

TEST_CASE("apply and adjoint against dense") {
    std::mt19937_64 g(5);
    for (int t = 0; t < 20; ++t) {
        int n = 1 + t * 3;
        auto b = random_band(g, n, 2, 1);
        Eigen::VectorXcd v = Eigen::VectorXcd::Random(n);
        std::vector<cplx> vs(v.data(), v.data() + n);
        auto m = to_eigen(b);
        Eigen::VectorXcd a = m * v, aa = m.adjoint() * v;
        auto r = b.apply(vs), ra = b.apply_adjoint(vs);
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(r[i] - a(i)) <= 1e-13);
            CHECK(std::abs(ra[i] - aa(i)) <= 1e-13);
        }
    }
}

TEST_CASE("LU determinant and solve against Eigen") {
    std::mt19937_64 g(6);
    for (int t = 0; t < 30; ++t) {
        int n = 1 + t * 2;
        auto b = random_band(g, n, 2, 2);
        auto m = to_eigen(b);
        BandLU lu(b);
        REQUIRE_FALSE(lu.singular());
        cplx ref = m.determinant();
        LogDet d = lu.det();
        CHECK(std::abs(d.log_modulus - std::log(std::abs(ref))) <= 1e-10);
        CHECK(std::abs(d.phase - ref / std::abs(ref)) <= 1e-9);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Random(n);
        auto x = lu.solve(std::vector<cplx>(rhs.data(), rhs.data() + n));
        Eigen::VectorXcd xv = Eigen::Map<Eigen::VectorXcd>(x.data(), n);
        CHECK((m * xv - rhs).norm() <= 1e-10 * (1 + xv.norm()));
    }
}

TEST_CASE("exactly singular band") {
    Banded b(3, 1, 1);
    b.set(0, 0, 1.0);
    b.set(1, 1, 1.0);
    b.set(0, 1, 1.0);
    b.set(1, 0, 1.0);
    b.set(2, 2, 1.0);
    BandLU lu(b);
    CHECK(lu.singular());
    CHECK(lu.det().is_zero());
    lu.regularize(1e-14);
    auto x = lu.solve({1.0, 0.0, 0.0});
    for (auto v : x) CHECK(std::isfinite(std::abs(v)));
}
