#include <algorithm>

#include "doctest.h"
#include "support.hpp"

using namespace qcmv;

namespace {
System zero_system(int d = 1) { return {testing::zero_field(d), testing::frequency_for(d), {}}; }
System rotor_system() { return {testing::rotor09(), testing::omega2(), {}}; }
}  // namespace

TEST_CASE("LDT for the free field") {
    auto s = zero_system();
    auto samples = phase_grid(1, 500, 0), ls = phase_grid(1, 50, 1);
    for (auto kind : {LdtKind::Monodromy, LdtKind::Determinant}) {
        auto r = ldt_tail(s, std::polar(1.0, 0.4), 32, samples, ls, {}, kind);
        CHECK(std::abs(r.lyapunov.value) < 1e-14);
        CHECK(r.exceed_count == 0);
        CHECK(r.empirical_measure == 0.0);
        CHECK(r.threshold == doctest::Approx(std::pow(32.0, 0.75)));
    }
    CHECK_THROWS_AS(ldt_tail(s, 1.0, 1, samples, ls, {}, LdtKind::Monodromy), Error);
    CHECK_THROWS_AS(ldt_tail(s, 1.0, 8, {}, ls, {}, LdtKind::Monodromy), Error);
}

TEST_CASE("LDT counting and thresholds") {
    std::mt19937_64 g(51);
    System s{testing::random_field(g, 2), testing::omega2(), {}};
    auto samples = phase_grid(2, 300, 4), ls = phase_grid(2, 100, 5);
    cplx z = testing::unimodular(g);
    auto inf = ldt_tail(s, z, 20, samples, ls, {}, LdtKind::Monodromy, std::numeric_limits<double>::infinity());
    CHECK(inf.exceed_count == 0);
    auto zero = ldt_tail(s, z, 20, samples, ls, {}, LdtKind::Monodromy, -1.0);
    CHECK(zero.exceed_count == 300);
    auto r = ldt_tail(s, z, 20, samples, ls, {}, LdtKind::Determinant, 0.5);
    auto dev = ldt_deviations(s, z, 20, 20 * r.lyapunov.value, samples, LdtKind::Determinant);
    CHECK(r.exceed_count == std::count_if(dev.begin(), dev.end(), [](double d) { return d > 0.5; }));
    CHECK(r.empirical_measure == doctest::Approx(r.exceed_count / 300.0));
    for (auto kind : {LdtKind::Monodromy, LdtKind::Determinant})
        CHECK(ldt_deviations_serial(s, z, 20, 1.0, samples, kind) == ldt_deviations(s, z, 20, 1.0, samples, kind));
}

TEST_CASE("NDR rule examples") {
    Interval iv{0, 9};
    int shortest = -1;
    CHECK(ndr_rule(iv, {}, 0, 5, &shortest));
    CHECK(shortest == 10);
    CHECK_FALSE(ndr_rule(iv, {5}, 0, 3));
    CHECK(ndr_rule(iv, {5}, 1, 3, &shortest));
    CHECK(shortest == 4);
    CHECK_FALSE(ndr_rule(iv, {5}, 1, 4));
    // duplicates and outside sites do not count
    CHECK(ndr_rule(iv, {5, 5, 20, -3}, 1, 3));
    // a bad endpoint leaves one component
    CHECK(ndr_rule(iv, {0}, 1, 8, &shortest));
    CHECK(shortest == 9);
    // everything bad: no component at all
    CHECK(ndr_rule({0, 1}, {0, 1}, 2, 100, &shortest));
    CHECK(shortest == 0);
}

TEST_CASE("removing a bad site next to a good one keeps an NDR verdict") {
    std::mt19937_64 g(52);
    std::uniform_int_distribution<int> S(0, 39), C(0, 5);
    int checked = 0;
    for (int t = 0; t < 2000; ++t) {
        Interval iv{0, 39};
        std::vector<int> bad(C(g));
        for (auto& b : bad) b = S(g);
        double len = C(g);
        if (!ndr_rule(iv, bad, 5, len) || bad.empty()) continue;
        int b = bad[t % bad.size()];
        auto is_bad = [&](int s) { return std::find(bad.begin(), bad.end(), s) != bad.end(); };
        bool merges = (iv.contains(b - 1) && !is_bad(b - 1)) || (iv.contains(b + 1) && !is_bad(b + 1));
        if (!merges) continue;
        std::vector<int> fewer;
        for (int v : bad)
            if (v != b) fewer.push_back(v);
        CHECK(ndr_rule(iv, fewer, 5, len));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("removing an isolated bad site can break the component rule") {
    // {4,5,6} bad: components [0,3] and [7,39]; dropping 5 leaves the length-1 component {5}
    CHECK(ndr_rule({0, 39}, {4, 5, 6}, 3, 2));
    CHECK_FALSE(ndr_rule({0, 39}, {4, 6}, 3, 2));
}

TEST_CASE("NDR scan agrees with the rule") {
    auto s = rotor_system();
    Interval lam{0, 39};
    auto ls = phase_grid(2, 100, 0);
    double L = finite_lyapunov(s.field, s.omega, 1.0, 6, ls).value;
    auto r = ndr_scan(s, 1.0, Phase({0.1, 0.2}), lam, 4, 6, 1.0, {}, L);
    CHECK(r.site_values.size() == 40);
    int shortest = 0;
    CHECK(r.is_ndr == ndr_rule(lam, r.bad_set, 4, r.min_component_length, &shortest));
    CHECK(r.min_component_gap == shortest);
    for (int b : r.bad_set) CHECK_FALSE(r.site_values[b] > r.threshold);
}

TEST_CASE("decay fit") {
    Interval I{10, 12};
    std::vector<cplx> u(40);
    for (int i = 0; i < 40; ++i) u[i] = std::exp(-0.5 * I.dist(i));
    auto f = fit_decay(u, 0, I, 0.1, 1.0);
    CHECK(f.rate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.violation_sites.empty());
    CHECK(f.max_violation == doctest::Approx(-0.4));
    CHECK(f.fit_points == 37);

    auto v = fit_decay(u, 0, I, 0.6, 5.0);
    CHECK(v.violation_sites.size() == 37);
    CHECK(v.fit_points == 37 - 8);

    // every site inside I: nothing to fit, nothing to violate
    std::vector<cplx> in(3, 1.0);
    auto e = fit_decay(in, 10, I, 0.1, 1.0);
    CHECK(e.fit_points == 0);
    CHECK(std::isnan(e.rate));
    CHECK(e.violation_sites.empty());
    CHECK(e.max_violation == kNegInf);

    // exact zeros are skipped
    u[0] = 0.0;
    CHECK(fit_decay(u, 0, I, 0.1, 1.0).fit_points == 36);
}

TEST_CASE("separation check") {
    DecayFit fit;
    fit.center_interval = {0, 4};
    std::vector<EigenPair> e{{1.0, {}, 0}, {std::polar(1.0, 0.01), {}, 0}, {-1.0, {}, 0}};
    auto c = eigen_separation_check(fit, e, 0, 1.0);
    CHECK(c.threshold == doctest::Approx(std::exp(-5.0)));
    CHECK(c.passes);
    CHECK_FALSE(eigen_separation_check(fit, e, 0, 0.1).passes);
    e.push_back(e[2]);
    auto d = eigen_separation_check(fit, e, 2, 1.0);
    CHECK(d.separation == 0.0);
    CHECK_FALSE(d.passes);
}

TEST_CASE("finite scale localization on the free field") {
    auto s = zero_system(2);
    auto rep = finite_scale_localize(s, Phase({0.1, 0.2}), 1.0, 40, 8, {});
    CHECK(rep.gamma.gamma <= 1e-10);
    CHECK(rep.fits.empty());
    CHECK(rep.eigs.size() == 40);
}

TEST_CASE("continuation schedules") {
    CHECK(continuation_scales(16, 3, Schedule::Geometric) == std::vector<int>{16, 32, 64, 128});
    CHECK(continuation_scales(16, 2, Schedule::Squaring) == std::vector<int>{16, 256, 65536});
    CHECK(continuation_scales(8, 0, Schedule::Squaring) == std::vector<int>{8});
    CHECK_THROWS_AS(continuation_scales(7, 2, Schedule::Geometric), Error);
    CHECK_THROWS_AS(continuation_scales(16, -1, Schedule::Geometric), Error);
    CHECK_THROWS_AS(continuation_scales(16, 3, Schedule::Squaring), Error);
}

TEST_CASE("continuation on the free field is flat") {
    auto ch = scale_continuation(zero_system(2), Phase({0.1, 0.2}), 16, 3);
    CHECK(ch.flat);
    CHECK_FALSE(ch.localized);
    CHECK(ch.verdict == "flat-drift");
    CHECK(ch.steps.size() == 4);
    for (std::size_t k = 1; k < ch.steps.size(); ++k)
        CHECK(ch.steps[k].eigenvalue_drift <= 10 * ch.steps[k].residual_bound + 1e-13);
    ContinuationOptions bad;
    bad.j0 = 1000;
    CHECK_THROWS_AS(scale_continuation(zero_system(2), Phase({0.1, 0.2}), 16, 1, bad), Error);
}

TEST_CASE("default sub-intervals clamp to the interval") {
    auto m = default_sub_intervals({0, 30}, 10);
    CHECK(m.size() == 31);
    CHECK(m[0].lo == 0);
    CHECK(m[0].hi == 10);
    CHECK(m[15].lo == 5);
    CHECK(m[15].hi == 25);
    CHECK(m[30].hi == 30);
}

TEST_CASE("covering refuses an eigenvalue of the block") {
    auto s = rotor_system();
    Interval iv{0, 40};
    Phase x0({0.3, 0.7});
    auto outer = build_restriction(s.field, s.omega, x0, iv.lo, iv.hi, s.boundary);
    auto eigs = eigensolve(outer);
    auto rep = covering_certificate(s, x0, eigs[5].value, iv, default_sub_intervals(iv, 10), {}, 50);
    CHECK_FALSE(rep.issued);
    CHECK(rep.gap == 0.0);
    CHECK(rep.sound);
    REQUIRE(rep.true_distance);
    CHECK(*rep.true_distance < 1e-12);

    std::map<int, Interval> bad = default_sub_intervals(iv, 10);
    bad[3] = {5, 9};
    CHECK_THROWS_AS(covering_certificate(s, x0, 1.0, iv, bad, {}, 50), Error);
    bad.erase(3);
    CHECK_THROWS_AS(covering_certificate(s, x0, 1.0, iv, bad, {}, 50), Error);
}

TEST_CASE("issued covering gaps are sound") {
    auto s = rotor_system();
    Interval iv{0, 59};
    Phase x0({0.1, 0.37});
    int issued = 0;
    for (int k = 0; k < 40; ++k) {
        cplx z0 = std::polar(1.0, kTwoPi * (k + 0.5) / 40);
        auto rep = covering_certificate(s, x0, z0, iv, default_sub_intervals(iv, 10), {}, 100, 1);
        CHECK(rep.sound);
        if (rep.issued) {
            ++issued;
            CHECK(rep.gap > 0);
            CHECK(rep.gap <= rep.ldt_gap);
            CHECK(*rep.true_distance >= rep.gap);
        }
    }
    CHECK(issued > 0);
}
