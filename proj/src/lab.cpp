#include "qcmv/lab.hpp"

#include <algorithm>
#include <numeric>

namespace qcmv {

namespace {
// exponents at or below this are rounding noise of a zero Lyapunov exponent
constexpr double kGammaNoise = 1e-10;
// drifts at or below this sit on the eigensolver's rounding floor
constexpr double kDriftNoise = 1e-12;
}  // namespace

const char* ldt_kind_name(LdtKind k) { return k == LdtKind::Monodromy ? "monodromy" : "determinant"; }

static double ldt_deviation(const System& s, cplx z, int n, double nL, const Phase& x, LdtKind kind) {
    double v = kind == LdtKind::Monodromy ? transfer(s.field, s.omega, z, x, n).log_norm()
                                          : normalized_log_det(s.field, s.omega, z, x, n, s.boundary);
    return std::abs(v - nL);
}

std::vector<double> ldt_deviations(const System& s, cplx z, int n, double nL, const std::vector<Phase>& samples,
                                   LdtKind kind) {
    std::vector<double> d(samples.size());
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) d[i] = ldt_deviation(s, z, n, nL, samples[i], kind);
    return d;
}

std::vector<double> ldt_deviations_serial(const System& s, cplx z, int n, double nL,
                                          const std::vector<Phase>& samples, LdtKind kind) {
    std::vector<double> d;
    d.reserve(samples.size());
    for (const auto& x : samples) d.push_back(ldt_deviation(s, z, n, nL, x, kind));
    return d;
}

LdtReport ldt_tail(const System& s, cplx z, int n, const std::vector<Phase>& samples,
                   const std::vector<Phase>& lyapunov_samples, const LdtExponents& ex, LdtKind kind,
                   std::optional<double> threshold_override) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be at least 2");
    if (samples.empty() || lyapunov_samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample set");
    ex.validate();
    LdtReport r;
    r.n = n;
    r.z = z;
    r.kind = kind;
    r.exponents = ex;
    r.sample_count = static_cast<int>(samples.size());
    r.threshold = threshold_override ? *threshold_override : std::pow(static_cast<double>(n), 1.0 - ex.tau);
    r.lyapunov = finite_lyapunov(s.field, s.omega, z, n, lyapunov_samples);
    auto dev = ldt_deviations(s, z, n, n * r.lyapunov.value, samples, kind);
    r.exceed_count = static_cast<int>(std::count_if(dev.begin(), dev.end(), [&](double d) { return d > r.threshold; }));
    r.empirical_measure = static_cast<double>(r.exceed_count) / r.sample_count;
    return r;
}

bool ndr_rule(const Interval& iv, const std::vector<int>& bad, int K, double min_len, int* shortest) {
    std::vector<char> is_bad(iv.length(), 0);
    int nb = 0;
    for (int b : bad)
        if (iv.contains(b) && !is_bad[b - iv.lo]) {
            is_bad[b - iv.lo] = 1;
            ++nb;
        }
    int best = 0;
    bool ok = nb <= K;
    int run = 0;
    auto close = [&] {
        if (run > 0) {
            best = best == 0 ? run : std::min(best, run);
            if (!(run > min_len)) ok = false;
        }
        run = 0;
    };
    for (int i = 0; i < iv.length(); ++i) {
        if (is_bad[i])
            close();
        else
            ++run;
    }
    close();
    if (shortest) *shortest = best;
    return ok;
}

NdrReport ndr_scan(const System& s, cplx z, const Phase& x, const Interval& lambda, int K, int l, double C,
                   const LdtExponents& ex, double L_l, std::optional<double> min_component_length) {
    if (l < 2) throw Error(ErrorCode::InvalidArgument, "l must be at least 2");
    ex.validate();
    NdrReport r;
    r.interval = lambda;
    r.K = K;
    r.l = l;
    r.C = C;
    r.L_l = L_l;
    r.exponents = ex;
    r.threshold = l * L_l - C * std::pow(static_cast<double>(l), 1.0 - ex.tau / 3);
    r.min_component_length =
        min_component_length ? *min_component_length : std::pow(static_cast<double>(l), 2.0 / ex.nu);
    const int len = lambda.length();
    r.site_values.resize(len);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < len; ++i) {
        int site = lambda.lo + i;
        r.site_values[i] = normalized_log_det(s.field, s.omega, z, x.shifted(s.omega, site - 1), l, s.boundary);
    }
    for (int i = 0; i < len; ++i)
        if (!(r.site_values[i] > r.threshold)) r.bad_set.push_back(lambda.lo + i);
    r.is_ndr = ndr_rule(lambda, r.bad_set, K, r.min_component_length, &r.min_component_gap);
    return r;
}

DecayFit fit_decay(const std::vector<cplx>& u, int first_site, const Interval& I, double floor_rate,
                   double min_dist) {
    DecayFit f;
    f.center_interval = I;
    f.floor_rate = floor_rate;
    f.fit_min_distance = min_dist;
    f.max_violation = kNegInf;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < u.size(); ++i) {
        int site = first_site + static_cast<int>(i);
        int d = I.length() > 0 ? I.dist(site) : 0;
        double a = std::abs(u[i]);
        if (d == 0 || a == 0.0) continue;
        double lg = std::log(a);
        double v = lg + floor_rate * d;
        f.max_violation = std::max(f.max_violation, v);
        if (v >= 0) f.violation_sites.push_back(site);
        if (d >= min_dist) {
            xs.push_back(d);
            ys.push_back(lg);
        }
    }
    f.fit_points = static_cast<int>(xs.size());
    if (xs.size() < 2) {
        f.rate = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    const double N = static_cast<double>(xs.size());
    double mx = pairwise_sum(xs) / N, my = pairwise_sum(ys) / N;
    std::vector<double> sxy(xs.size()), sxx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy[i] = (xs[i] - mx) * (ys[i] - my);
        sxx[i] = (xs[i] - mx) * (xs[i] - mx);
    }
    double den = pairwise_sum(sxx);
    f.rate = den > 0 ? -pairwise_sum(sxy) / den : std::numeric_limits<double>::quiet_NaN();
    return f;
}

FiniteScaleReport finite_scale_localize(const System& s, const Phase& x0, cplx z0, int n, int l,
                                        const LdtExponents& ex, const FiniteScaleOptions& opt) {
    ex.validate();
    if (l < 2 || n < l) throw Error(ErrorCode::InvalidArgument, "need 2 <= l <= n");
    FiniteScaleReport r;
    r.n = n;
    r.l = l;
    r.z0 = z0;
    r.exponents = ex;
    auto samples = phase_grid(s.field.dim(), opt.lyapunov_samples, opt.seed);
    r.L_l = finite_lyapunov(s.field, s.omega, z0, l, samples);
    r.L_n = finite_lyapunov(s.field, s.omega, z0, n, samples);
    r.gamma = GammaConstants::of(opt.gamma ? *opt.gamma : r.L_n.gamma_floor);
    r.shape_ok = l <= std::pow(static_cast<double>(n), ex.nu / 2);

    r.hypothesis_threshold = l * r.L_l.value - std::pow(static_cast<double>(l), 1.0 - ex.tau / 4);
    const int windows = n - l + 1;
    std::vector<double> vals(windows);
#pragma omp parallel for schedule(dynamic, 8)
    for (int m = 0; m < windows; ++m) vals[m] = normalized_log_det(s.field, s.omega, z0, x0.shifted(s.omega, m), l, s.boundary);

    if (opt.I) {
        r.I = *opt.I;
    } else {
        r.I_derived = true;
        int lo = -1, hi = -1;
        for (int m = 0; m < windows; ++m)
            if (!(vals[m] > r.hypothesis_threshold)) {
                if (lo < 0) lo = m;
                hi = m;
            }
        if (lo < 0) {
            lo = hi = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
        }
        r.I = Interval{lo, std::min(n - 1, hi + l - 1)};
    }
    for (int m = 0; m < windows; ++m)
        if (!r.I.contains(m) && !(vals[m] > r.hypothesis_threshold))
            r.hypothesis_failures.push_back({m, vals[m], r.hypothesis_threshold});
    r.hypothesis_ok = r.hypothesis_failures.empty();

    auto restr = build_restriction(s.field, s.omega, x0, 0, n - 1, s.boundary);
    EigenOptions eo;
    eo.seed = opt.seed;
    r.eigs = eigensolve(restr, eo);
    r.selection_radius = std::exp(-static_cast<double>(l));
    const double min_dist =
        opt.fit_min_distance ? *opt.fit_min_distance : std::pow(static_cast<double>(l), 2.0 / ex.nu);
    for (std::size_t j = 0; j < r.eigs.size(); ++j) {
        if (!(r.gamma.gamma > kGammaNoise)) break;
        if (!(std::abs(r.eigs[j].value - z0) < r.selection_radius)) continue;
        DecayFit f = fit_decay(r.eigs[j].vector, 0, r.I, r.gamma.g12, min_dist);
        f.eigen_index = j;
        f.z = r.eigs[j].value;
        r.fits.push_back(std::move(f));
    }
    return r;
}

SeparationCheck eigen_separation_check(const DecayFit& fit, const std::vector<EigenPair>& eigs, std::size_t j,
                                       double C_sep) {
    SeparationCheck c;
    c.separation = separation(eigs, j);
    c.threshold = std::exp(-C_sep * fit.center_interval.length());
    c.margin = c.separation - c.threshold;
    c.passes = c.separation >= c.threshold;
    return c;
}

std::vector<int> continuation_scales(int base_n, int k_max, Schedule s) {
    if (base_n < 8) throw Error(ErrorCode::InvalidArgument, "base_n must be at least 8");
    if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be nonnegative");
    std::vector<int> out;
    double n = base_n;
    for (int k = 0; k <= k_max; ++k) {
        if (n > 1e6) throw Error(ErrorCode::InvalidArgument, "scale schedule exceeds desk size");
        out.push_back(static_cast<int>(n));
        n = s == Schedule::Geometric ? 2 * n : n * n;
    }
    return out;
}

static std::size_t argmax_site(const std::vector<cplx>& u) {
    std::size_t im = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
        if (std::abs(u[i]) > std::abs(u[im])) im = i;
    return im;
}

std::size_t most_localized_central(const std::vector<EigenPair>& eigs, int first_site) {
    const int n = static_cast<int>(eigs.front().vector.size());
    const int last = first_site + n - 1;
    const int mid = (first_site + last) / 2, half = (last - first_site) / 4;
    std::size_t best = 0;
    double best_ipr = -1.0;
    for (std::size_t j = 0; j < eigs.size(); ++j) {
        int c = first_site + static_cast<int>(argmax_site(eigs[j].vector));
        if (std::abs(c - mid) > half) continue;
        double ipr = 0.0;
        for (const auto& v : eigs[j].vector) ipr += std::norm(v) * std::norm(v);
        if (ipr > best_ipr) {
            best_ipr = ipr;
            best = j;
        }
    }
    return best;
}

ScaleChain scale_continuation(const System& s, const Phase& x, int base_n, int k_max, const ContinuationOptions& opt) {
    ScaleChain ch;
    ch.base_n = base_n;
    ch.schedule = opt.schedule;
    ch.scales = continuation_scales(base_n, k_max, opt.schedule);
    EigenOptions eo;
    eo.seed = opt.seed;

    std::vector<EigenPair> prev;
    std::vector<cplx> prev_u;
    cplx prev_z;
    int prev_n = 0;
    for (std::size_t k = 0; k < ch.scales.size(); ++k) {
        const int nk = ch.scales[k];
        auto r = build_restriction(s.field, s.omega, x, -(nk - 1), nk - 1, s.boundary);
        auto eigs = eigensolve(r, eo);
        ScaleStep st;
        st.n = nk;
        if (k == 0) {
            st.index = opt.j0 ? *opt.j0 : most_localized_central(eigs, -(nk - 1));
            if (st.index >= eigs.size()) throw Error(ErrorCode::InvalidArgument, "j0 out of range");
            st.z = eigs[st.index].value;
            auto samples = phase_grid(s.field.dim(), opt.lyapunov_samples, opt.seed);
            ch.L = finite_lyapunov(s.field, s.omega, st.z, base_n, samples);
            ch.gamma = GammaConstants::of(opt.gamma ? *opt.gamma : ch.L.gamma_floor);
            int c = -(nk - 1) + static_cast<int>(argmax_site(eigs[st.index].vector));
            ch.interval = Interval{c - base_n / 4, c + base_n / 4};
            st.overlap = 1.0;
        } else {
            // zero-pad the previous vector into the larger symmetric window
            const int shift = nk - prev_n;
            std::vector<cplx> pad(r.size());
            for (std::size_t i = 0; i < prev_u.size(); ++i) pad[i + shift] = prev_u[i];
            auto epad = r.band().apply(pad);
            double res = 0.0;
            for (std::size_t i = 0; i < pad.size(); ++i) res += std::norm(epad[i] - prev_z * pad[i]);
            st.residual_bound = std::sqrt(2.0) * std::sqrt(res);

            double best = std::numeric_limits<double>::infinity();
            for (const auto& e : eigs) best = std::min(best, std::abs(e.value - prev_z));
            double best_ov = -1.0;
            for (std::size_t j = 0; j < eigs.size(); ++j) {
                if (std::abs(eigs[j].value - prev_z) > best + 1e-13) continue;
                cplx ip{};
                for (std::size_t i = 0; i < pad.size(); ++i) ip += std::conj(eigs[j].vector[i]) * pad[i];
                if (std::abs(ip) > best_ov) {
                    best_ov = std::abs(ip);
                    st.index = j;
                }
            }
            st.z = eigs[st.index].value;
            st.overlap = best_ov;
            st.eigenvalue_drift = std::abs(st.z - prev_z);
            st.vector_drift = aligned_distance(pad, eigs[st.index].vector);
            if (!ch.broken && st.eigenvalue_drift > 10 * st.residual_bound + 1e-13) {
                ch.broken = true;
                ch.broken_at = static_cast<int>(k);
            }
        }
        st.fit = fit_decay(eigs[st.index].vector, -(nk - 1), ch.interval, ch.gamma.g12, 1.0);
        st.fit.eigen_index = st.index;
        st.fit.z = st.z;
        prev_u = eigs[st.index].vector;
        prev_z = st.z;
        prev_n = nk;
        prev = std::move(eigs);
        ch.steps.push_back(std::move(st));
    }
    ch.drift_decreasing = true;
    ch.flat = false;
    for (std::size_t k = 2; k < ch.steps.size(); ++k) {
        double prev_d = ch.steps[k - 1].eigenvalue_drift, d = ch.steps[k].eigenvalue_drift;
        if (!(d < prev_d)) ch.drift_decreasing = false;
        // polynomial shrinkage (delocalized states move like 1/n) counts as flat
        double ratio = static_cast<double>(ch.scales[k - 1]) / ch.scales[k];
        if (d > kDriftNoise && d > prev_d * ratio * ratio) ch.flat = true;
    }
    if (!ch.drift_decreasing) ch.flat = true;
    const auto& last = ch.steps.back().fit;
    bool decays = ch.gamma.gamma > kGammaNoise && last.fit_points >= 2 && last.rate >= ch.gamma.g12;
    ch.localized = !ch.broken && !ch.flat && decays;
    ch.verdict = ch.broken ? "continuation-broken" : (ch.flat ? "flat-drift" : (decays ? "localized-chain" : "non-decaying"));
    return ch;
}

std::map<int, Interval> default_sub_intervals(const Interval& iv, int radius) {
    std::map<int, Interval> m;
    for (int s = iv.lo; s <= iv.hi; ++s) m[s] = Interval{std::max(iv.lo, s - radius), std::min(iv.hi, s + radius)};
    return m;
}

CoveringReport covering_certificate(const System& s, const Phase& x0, cplx z0, const Interval& iv,
                                    const std::map<int, Interval>& sub, const LdtExponents& ex, int lyapunov_samples,
                                    std::uint64_t seed, bool cross_check) {
    ex.validate();
    if (iv.length() < 1) throw Error(ErrorCode::InvalidArgument, "empty interval");
    CoveringReport rep;
    rep.interval = iv;
    rep.z0 = z0;
    rep.exponents = ex;
    rep.sub_intervals = sub;
    for (int m = iv.lo; m <= iv.hi; ++m) {
        auto it = sub.find(m);
        if (it == sub.end()) throw Error(ErrorCode::InvalidArgument, "no sub-interval for site " + std::to_string(m));
        const Interval& I = it->second;
        if (!I.contains(m) || I.lo < iv.lo || I.hi > iv.hi)
            throw Error(ErrorCode::InvalidArgument, "sub-interval must contain its site and lie inside the interval");
    }
    auto outer = build_restriction(s.field, s.omega, x0, iv.lo, iv.hi, s.boundary);
    auto samples = phase_grid(s.field.dim(), lyapunov_samples, seed);
    std::map<int, double> L_cache;
    std::map<std::pair<int, int>, double> det_cache;

    double max_len_pow = 0.0;
    double rig = std::numeric_limits<double>::infinity();
    for (int m = iv.lo; m <= iv.hi; ++m) {
        const Interval I = sub.at(m);
        const int len = I.length();
        max_len_pow = std::max(max_len_pow, std::pow(static_cast<double>(len), 1.0 - ex.tau / 4));

        // (i)
        double dl = I.lo > iv.lo ? m - (I.lo - 1) : std::numeric_limits<double>::infinity();
        double dr = I.hi < iv.hi ? (I.hi + 1) - m : std::numeric_limits<double>::infinity();
        double dmin = std::min(dl, dr);
        if (!(dmin >= len / 100.0)) rep.failures.push_back({m, "i", dmin, len / 100.0});

        // (iii)
        if (!L_cache.count(len)) L_cache[len] = finite_lyapunov(s.field, s.omega, z0, len, samples).value;
        auto key = std::make_pair(I.lo, I.hi);
        if (!det_cache.count(key))
            det_cache[key] = len >= 1 ? normalized_log_det(s.field, s.omega, z0, x0.shifted(s.omega, I.lo), len, s.boundary)
                                      : 0.0;
        double thr = len * L_cache[len] - std::pow(static_cast<double>(len), 1.0 - ex.tau / 4);
        if (!(det_cache[key] > thr)) rep.failures.push_back({m, "iii", det_cache[key], thr});

        // Poisson bound |u(m)| <= S_m max|u| for an eigenvector u of the outer block
        auto blk = sub_restriction(outer, I.lo, I.hi, s.boundary);
        BandLU lu(green_pencil(blk, z0));
        if (lu.singular()) {
            rep.failures.push_back({m, "green-sum", std::numeric_limits<double>::infinity(), 1.0});
            rig = 0.0;
            continue;
        }
        double fro = 0.0;
        std::vector<cplx> ga(len), gb(len);
        for (int c = 0; c < len; ++c) {
            std::vector<cplx> e(len);
            e[c] = 1.0;
            auto col = lu.solve(std::move(e));
            for (const auto& v : col) fro += std::norm(v);
            if (c == 0) ga = col;
            if (c == len - 1) gb = col;
        }
        fro = std::sqrt(fro);
        auto weight = [&](int site, cplx bnd, bool at_edge) {
            if (at_edge) return 0.0;
            cplx a = outer.alpha_hat(site);
            return std::abs(a - bnd) + rho_of(a);
        };
        double wa = weight(I.lo - 1, s.boundary.beta, I.lo == iv.lo);
        double wb = weight(I.hi, s.boundary.eta, I.hi == iv.hi);
        double S = std::abs(ga[m - I.lo]) * wa + std::abs(gb[m - I.lo]) * wb;
        rep.max_green_sum = std::max(rep.max_green_sum, S);
        if (!(S < 1.0 - 1e-8)) {
            rep.failures.push_back({m, "green-sum", S, 1.0});
            rig = 0.0;
            continue;
        }
        // |G(z) - G(z0)| <= d F^2 / (1 - d F) on |z - z0| <= d
        double W = wa + wb;
        double eps = W > 0 ? (1.0 - S) / W : std::numeric_limits<double>::infinity();
        double d = std::isinf(eps) ? 1.0 / fro : eps / (fro * fro + eps * fro);
        rig = std::min(rig, 0.999 * d);
    }
    rep.ldt_gap = std::exp(-2.0 * max_len_pow);
    rep.rigorous_gap = std::min(rig, 2.0);
    rep.issued = rep.failures.empty();
    rep.gap = rep.issued ? std::min(rep.ldt_gap, rep.rigorous_gap) : 0.0;
    if (cross_check) {
        EigenOptions eo;
        eo.seed = seed;
        auto eigs = eigensolve(outer, eo);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : eigs) best = std::min(best, std::abs(e.value - z0));
        rep.true_distance = best;
        rep.sound = !rep.issued || best >= rep.gap;
    }
    return rep;
}

}  // namespace qcmv
