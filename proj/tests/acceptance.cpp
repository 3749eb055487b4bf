// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "qcmv/experiment.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace qcmv;

namespace {

// criterion 1
constexpr int kIdentityCases = 200;
constexpr int kIdentityMaxN = 60;
constexpr double kDetTol = 1e-10;
constexpr double kNormIdentityTol = 1e-10;
constexpr double kImagTol = 1e-10;
constexpr double kUnitaryTol = 1e-10;
constexpr double kTwoRouteTol = 1e-8;
constexpr double kRecursionTol = 1e-9;
constexpr double kGreenTol = 1e-7;
constexpr double kPoissonTol = 1e-9;
// criterion 2
constexpr double kUnimodularTol = 1e-10;
constexpr double kResidualTol = 1e-8;
constexpr double kProductTol = 1e-8;
constexpr double kMatchingSlack = 1e-10;
// criterion 3
constexpr double kZeroLyapunovTol = 1e-12;
constexpr double kLog2Tol = 1e-2;
constexpr double kSubadditiveSlack = 1e-9;
// criterion 4
constexpr double kApConstant = 16.0;
// criterion 5
constexpr int kLdtSamples = 10000;
constexpr double kLdtTau = 0.3;
// criterion 7
constexpr double kTriangleSlack = 1e-12;
// criterion 8
constexpr int kCoveringInstances = 50;
constexpr int kCoveringMaxTries = 2000;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Tracker {
    bool pass = true;
    double worst = 0.0;
    std::string where;
    void check(double value, double tol, const std::string& what) {
        if (value > worst || !std::isfinite(value)) worst = value;
        if (!(value <= tol)) {
            if (pass) where = what + " = " + std::to_string(value);
            pass = false;
        }
    }
};

double rel_logdet(const LogDet& a, const LogDet& b) {
    // |a - b| / |b|
    if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero() ? 0.0 : 1.0;
    cplx r = std::exp(a.log_modulus - b.log_modulus) * a.phase / b.phase;
    return std::abs(r - 1.0);
}

Eigen::MatrixXcd dense(const Banded& b) {
    auto d = b.dense();
    Eigen::MatrixXcd m(b.n(), b.n());
    for (int i = 0; i < b.n(); ++i)
        for (int j = 0; j < b.n(); ++j) m(i, j) = d[static_cast<std::size_t>(i) * b.n() + j];
    return m;
}

Outcome identities() {
    std::mt19937_64 g(2024);
    std::uniform_int_distribution<int> N(2, kIdentityMaxN);
    Tracker det, nrm, im, uni, two, rec, green, poi;
    for (int t = 0; t < kIdentityCases; ++t) {
        int d = 1 + t % 2;
        auto f = testing::random_field(g, d);
        auto w = testing::frequency_for(d);
        auto x = testing::random_phase(g, d);
        cplx z = testing::unimodular(g);
        BoundaryPair bc{testing::unimodular(g), testing::unimodular(g)};
        int n = N(g);
        std::string tag = " (case " + std::to_string(t) + ")";

        cplx a = f.evaluate(x);
        auto one = one_step(a, z);
        det.check(std::abs(one.det().value() - 1.0), kDetTol, "single-step |det - 1|" + tag);
        double s = std::exp(one.log_norm());
        nrm.check(std::abs(s + 1 / s - 2 / std::sqrt(1 - std::norm(a))), kNormIdentityTol, "norm identity" + tag);
        im.check(conjugate_sl2r(one, 1.0).max_imag, kImagTol, "single-step Im" + tag);

        // n-step product: det relative to the size of the terms it cancels
        auto M = transfer(f, w, z, x, n);
        double terms = std::abs(M.e[0] * M.e[3]) + std::abs(M.e[1] * M.e[2]);
        det.check(std::abs(M.det().phase * std::exp(M.det().log_modulus - 2 * M.log_scale) -
                           std::exp(-2 * M.log_scale)) / terms,
                  kDetTol, "product det" + tag);
        im.check(conjugate_sl2r(M, 1.0).max_imag, kImagTol, "product Im" + tag);

        auto r = build_restriction(f, w, x, 0, n - 1, bc);
        uni.check(r.unitarity_defect(), kUnitaryTol, "unitarity" + tag);
        two.check(rel_logdet(char_det_transfer(f, w, z, x, n, bc), char_det_lu(r, z)), kTwoRouteTol,
                  "two-route determinant" + tag);
        rec.check(determinant_recursion_residual(r, z), kRecursionTol, "recursion" + tag);

        std::uniform_int_distribution<int> S(0, n - 1);
        int j = S(g), k = S(g);
        if (j > k) std::swap(j, k);
        double direct = std::abs(greens_entry(r, j, k, z));
        if (direct > 1e-250) green.check(testing::rel(greens_ratio(r, j, k, z), direct), kGreenTol, "Green ratio" + tag);

        if (n >= 5) {
            auto eigs = eigensolve(r);
            const auto& e = eigs[t % eigs.size()];
            int lo = 1 + t % 2, hi = n - 2;
            auto sub = sub_restriction(r, lo, hi, {testing::unimodular(g), testing::unimodular(g)});
            for (int m = lo + 1; m < hi; ++m) {
                try {
                    poi.check(poisson_residual(r, sub, e.vector, e.value, m), kPoissonTol, "Poisson" + tag);
                } catch (const Error&) {
                    break;  // eigenvalue of the sub-block: the identity has no Green function
                }
            }
        }
    }
    Outcome o;
    char buf[400];
    std::snprintf(buf, sizeof buf,
                  "det %.1e, norm %.1e, Im %.1e, unitary %.1e, two-route %.1e, recursion %.1e, Green %.1e, "
                  "Poisson %.1e",
                  det.worst, nrm.worst, im.worst, uni.worst, two.worst, rec.worst, green.worst, poi.worst);
    o.detail = buf;
    for (auto* t : {&det, &nrm, &im, &uni, &two, &rec, &green, &poi})
        if (!t->pass) {
            o.pass = false;
            o.detail += "; first failure: " + t->where;
        }
    return o;
}

// 0.3 * 2^{-|k|}, |k| <= 100
VerblunskyField geometric_field() {
    TrigPolynomial p(1);
    for (int k = -100; k <= 100; ++k) p.add({k}, 0.3 * std::pow(2.0, -std::abs(k)));
    return VerblunskyField(p, 0.005);
}

Outcome eigensolver() {
    auto f = geometric_field();
    auto trunc = truncate_degree(f, 3);
    VerblunskyField ft(trunc.poly, f.h());
    auto w = testing::golden();
    Phase x({0.27});
    BoundaryPair bc{std::polar(1.0, 0.3), std::polar(1.0, -1.1)};
    Tracker uni, res, prod, match;
    std::string sizes;
    for (int n : {10, 50, 200}) {
        auto r = build_restriction(f, w, x, 0, n - 1, bc);
        auto rt = build_restriction(ft, w, x, 0, n - 1, bc);
        auto eigs = eigensolve(r), eigt = eigensolve(rt);
        std::string tag = " (n = " + std::to_string(n) + ")";
        for (const auto& e : eigs) {
            uni.check(std::abs(std::abs(e.value) - 1.0), kUnimodularTol, "|z| - 1" + tag);
            res.check(e.residual, kResidualTol, "residual" + tag);
        }
        for (int p = 0; p < 5; ++p) {
            cplx z = std::polar(1.0, kTwoPi * (p + 0.37) / 5);
            LogDet d;
            for (const auto& e : eigs) d *= z - e.value;
            prod.check(rel_logdet(d, char_det_lu(r, z)), kProductTol, "product vs LU" + tag);
        }
        std::vector<cplx> a, b;
        for (const auto& e : eigs) a.push_back(e.value);
        for (const auto& e : eigt) b.push_back(e.value);
        double dE = Eigen::JacobiSVD<Eigen::MatrixXcd>(dense(r.band()) - dense(rt.band())).singularValues()(0);
        double md = matching_distance(a, b);
        match.check(md - dE, kMatchingSlack, "matching distance - ||dE||" + tag);
        char buf[80];
        std::snprintf(buf, sizeof buf, " n=%d: match %.3g <= %.3g;", n, md, dE);
        sizes += buf;
    }
    Outcome o;
    char buf[200];
    std::snprintf(buf, sizeof buf, "unimodular %.1e, residual %.1e, product %.1e;", uni.worst, res.worst, prod.worst);
    o.detail = buf + sizes;
    for (auto* t : {&uni, &res, &prod, &match})
        if (!t->pass) {
            o.pass = false;
            o.detail += " first failure: " + t->where;
        }
    return o;
}

Outcome lyapunov() {
    auto w = testing::golden();
    auto samples = phase_grid(1, 2000, 0);
    Outcome o;
    double worst0 = 0.0;
    for (int n : {10, 100, 200})
        for (double th : {0.0, 1.0, 2.5}) {
            auto L = finite_lyapunov(testing::zero_field(), w, std::polar(1.0, th), n, samples);
            worst0 = std::max(worst0, std::abs(L.value));
        }
    VerblunskyField c = constant_field(1, 0.6);
    auto L = finite_lyapunov(c, w, 1.0, 200, samples);
    double err = std::abs(L.value - std::log(2.0));

    // pointwise subadditivity on every sample, for the constant and a nonconstant field
    std::mt19937_64 g(3);
    VerblunskyField other = testing::random_field(g, 1);
    double worst_slack = std::numeric_limits<double>::infinity();
    for (const auto* f : {&c, &other})
        for (const auto& x : samples)
            for (int split : {1, 80, 150}) {
                double whole = transfer(*f, w, 1.0, x, 200).log_norm();
                double parts = transfer(*f, w, 1.0, x, split).log_norm() +
                               transfer(*f, w, 1.0, x.shifted(w, split), 200 - split).log_norm();
                worst_slack = std::min(worst_slack, parts - whole);
            }
    o.pass = worst0 <= kZeroLyapunovTol && err <= kLog2Tol && worst_slack >= -kSubadditiveSlack;
    char buf[200];
    std::snprintf(buf, sizeof buf, "max |L_n(0)| %.1e, |L_200 - log 2| %.2e (se %.1e), min subadditive slack %.2e",
                  worst0, err, L.std_error, worst_slack);
    o.detail = buf;
    return o;
}

Outcome avalanche() {
    VerblunskyField c = constant_field(1, 0.6);
    auto w = testing::golden();
    Outcome o;
    double worst_ratio = 0.0;
    for (int m = 2; m <= 32; m *= 2)
        for (double x : {0.0, 0.4}) {
            auto r = lyapunov_ap(c, w, 1.0, 10, m, Phase({x}));
            double bound = kApConstant * m / r.mu;
            worst_ratio = std::max(worst_ratio, r.difference / bound);
            if (!(r.difference < bound) || !r.within_bound) o.pass = false;
        }
    bool rejected = false;
    try {
        lyapunov_ap(testing::zero_field(), w, 1.0, 10, 8, Phase({0.0}));
    } catch (const Error& e) {
        rejected = e.code() == ErrorCode::ApHypothesisViolated && std::string(e.what()).find("AP-1") != std::string::npos;
    }
    if (!rejected) o.pass = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "max error/bound %.2e, zero field rejected at AP-1: %s", worst_ratio,
                  rejected ? "yes" : "no");
    o.detail = buf;
    return o;
}

Outcome ldt_trend() {
    System s{constant_field(1, 0.6), testing::golden(), {}};
    LdtExponents ex;
    ex.tau = kLdtTau;
    auto samples = phase_grid(1, kLdtSamples, 0), ls = phase_grid(1, 2000, 1);
    Outcome o;
    for (auto kind : {LdtKind::Monodromy, LdtKind::Determinant}) {
        auto a = ldt_tail(s, 1.0, 16, samples, ls, ex, kind), b = ldt_tail(s, 1.0, 64, samples, ls, ex, kind);
        bool ok = b.empirical_measure <= a.empirical_measure && a.empirical_measure < 0.5 && b.empirical_measure < 0.5;
        o.pass = o.pass && ok;
        char buf[120];
        std::snprintf(buf, sizeof buf, "%s%s: %.4f at 16, %.4f at 64", o.detail.empty() ? "" : "; ",
                      ldt_kind_name(kind), a.empirical_measure, b.empirical_measure);
        o.detail += buf;
    }
    return o;
}

ExperimentConfig config(const std::string& name) {
    auto load = load_config(std::string(QCMV_CONFIGS) + "/" + name);
    if (!load.ok()) throw std::runtime_error("cannot load " + name);
    return *load.config;
}

Outcome localization() {
    auto cfg = config("localize_reference.json");
    auto art = run_experiment(cfg);
    const auto& r = art.report["result"];
    double g12 = r["gamma"]["gamma_12"].get<double>();
    double expected_g12 = r["L_n"]["gamma_floor"].get<double>() / 12;
    Outcome o;
    o.pass = false;
    int good = 0;
    double best_rate = 0.0, best_sep = 0.0, best_thr = 0.0;
    for (const auto& f : r["fits"]) {
        if (!f["rate"].is_number()) continue;
        double rate = f["rate"].get<double>();
        bool ok = f["fit_points"].get<int>() >= 2 && rate >= expected_g12 && f["violation_sites"].empty() &&
                  f["separation"]["separation"].get<double>() >= f["separation"]["threshold"].get<double>();
        if (ok) {
            ++good;
            if (rate > best_rate) {
                best_rate = rate;
                best_sep = f["separation"]["separation"].get<double>();
                best_thr = f["separation"]["threshold"].get<double>();
            }
        }
    }
    o.pass = good >= 1 && std::abs(g12 - expected_g12) <= 1e-15 && art.assertion_failures.empty();
    char buf[240];
    std::snprintf(buf, sizeof buf, "%d matched pair(s); best rate %.4f vs gamma/12 %.4f, separation %.3g >= %.3g",
                  good, best_rate, expected_g12, best_sep, best_thr);
    o.detail = buf;
    return o;
}

Outcome continuation() {
    auto run = [](const ExperimentConfig& c) {
        const auto& p = std::get<ContinueParams>(c.params);
        ContinuationOptions o;
        o.schedule = p.schedule;
        o.j0 = p.j0;
        o.gamma = p.gamma;
        o.lyapunov_samples = p.lyapunov_samples;
        o.seed = c.seed;
        return scale_continuation(c.system, c.x0, p.base_n, p.k_max, o);
    };
    auto ref = run(config("continue_reference.json"));
    Outcome o;
    bool scales = ref.scales == std::vector<int>{16, 32, 64, 128};
    bool decreasing = true;
    for (std::size_t k = 2; k < ref.steps.size(); ++k)
        if (!(ref.steps[k].eigenvalue_drift < ref.steps[k - 1].eigenvalue_drift)) decreasing = false;
    double worst = -1.0;  // max of direct - bound over all scale pairs
    for (std::size_t a = 0; a < ref.steps.size(); ++a)
        for (std::size_t b = a + 1; b < ref.steps.size(); ++b) {
            double sum = 0.0;
            for (std::size_t k = a + 1; k <= b; ++k) sum += ref.steps[k].eigenvalue_drift;
            worst = std::max(worst, std::abs(ref.steps[b].z - ref.steps[a].z) - sum);
        }
    auto zero = run(config("continue_zero.json"));
    bool zero_ok = !zero.localized && (zero.verdict == "flat-drift" || zero.verdict == "continuation-broken");
    o.pass = scales && decreasing && worst <= kTriangleSlack && zero_ok;
    std::string drifts;
    for (std::size_t k = 1; k < ref.steps.size(); ++k) {
        char b[32];
        std::snprintf(b, sizeof b, "%s%.2e", k > 1 ? ", " : "", ref.steps[k].eigenvalue_drift);
        drifts += b;
    }
    char buf[300];
    std::snprintf(buf, sizeof buf, "drifts [%s] (%s), triangle excess %.1e, reference verdict %s, zero field %s",
                  drifts.c_str(), decreasing ? "decreasing" : "not decreasing", worst, ref.verdict.c_str(),
                  zero.verdict.c_str());
    o.detail = buf;
    return o;
}

Outcome covering() {
    System s{testing::rotor09(), testing::omega2(), {}};
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> U(0, 1);
    Interval iv{0, 59};
    auto sub = default_sub_intervals(iv, 10);
    int issued = 0, sound = 0, tries = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    while (issued < kCoveringInstances && tries < kCoveringMaxTries) {
        ++tries;
        Phase x0({U(g), U(g)});
        cplx z0 = std::polar(1.0, kTwoPi * U(g));
        auto rep = covering_certificate(s, x0, z0, iv, sub, {}, 100, 1, true);
        if (!rep.issued) continue;
        ++issued;
        if (*rep.true_distance >= rep.gap) ++sound;
        min_ratio = std::min(min_ratio, *rep.true_distance / rep.gap);
    }
    Outcome o;
    o.pass = issued == kCoveringInstances && sound == issued;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d/%d sound (%d tries), min true distance / gap %.3g", sound, issued, tries,
                  min_ratio);
    o.detail = buf;
    return o;
}

Outcome determinism() {
    Outcome o;
    int count = 0;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(QCMV_CONFIGS))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        auto load = load_config(p.string());
        if (!load.ok()) {
            o.pass = false;
            o.detail += " cannot load " + p.filename().string();
            continue;
        }
        auto a = run_experiment(*load.config), b = run_experiment(*load.config);
        if (report_text(a.report) != report_text(b.report) || a.csv != b.csv) {
            o.pass = false;
            o.detail += " differs: " + p.filename().string();
        }
        ++count;
    }
    o.detail = std::to_string(count) + " configs re-run" + o.detail;
    if (count == 0) o.pass = false;
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all{
        {1, "algebraic identities", 30, identities},   {2, "eigensolver soundness", 60, eigensolver},
        {3, "Lyapunov sanity", 60, lyapunov},          {4, "avalanche principle", 10, avalanche},
        {5, "LDT trend", 120, ldt_trend},              {6, "finite-scale localization", 300, localization},
        {7, "scale continuation", 300, continuation}, {8, "covering soundness", 120, covering},
        {9, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = c.budget <= 0 || secs <= c.budget;
        bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("criterion %d %-26s %s  %.1fs%s  %s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs,
                    in_time ? "" : " (over budget)", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
