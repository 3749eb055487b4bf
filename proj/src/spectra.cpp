#include "qcmv/spectra.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "qcmv/io.hpp"

namespace qcmv {

double arg_2pi(cplx z) {
    double t = std::atan2(z.imag(), z.real());
    return t < 0 ? t + kTwoPi : t;
}

namespace {

struct Rot {
    int p, q;
    double cs, sn;
    cplx e;  // e^{i psi}
    double ap, aq;
    bool active;
};

// circle-method pairing: every pair appears once per sweep, pairs within a round are disjoint
std::vector<std::pair<int, int>> round_pairs(int n, int round) {
    const int m = n + (n % 2);
    std::vector<std::pair<int, int>> out;
    auto add = [&](int p, int q) {
        if (p < n && q < n) out.emplace_back(std::min(p, q), std::max(p, q));
    };
    add(round, m - 1);
    for (int i = 1; i < m / 2; ++i) add((round + i) % (m - 1), (round - i + (m - 1)) % (m - 1));
    return out;
}

}  // namespace

std::vector<double> jacobi_hermitian(std::vector<cplx>& s, int n, std::vector<cplx>& w, bool parallel,
                                     int* sweeps_out) {
    w.assign(static_cast<std::size_t>(n) * n, cplx{});
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto S = [&](int i, int j) -> cplx& { return s[static_cast<std::size_t>(i) * n + j]; };
    auto W = [&](int i, int j) -> cplx& { return w[static_cast<std::size_t>(i) * n + j]; };

    double fro = 0.0;
    for (const auto& v : s) fro += std::norm(v);
    fro = std::sqrt(fro);
    const double tol = 1e-15 * std::max(fro, 1e-300);

    int sweep = 0;
    const int rounds = n + (n % 2) - 1;
    for (; sweep < 60 && n > 1; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += std::norm(S(i, j));
        if (std::sqrt(2 * off) <= tol) break;

        for (int r = 0; r < rounds; ++r) {
            auto pairs = round_pairs(n, r);
            std::vector<Rot> rots(pairs.size());
            for (std::size_t t = 0; t < pairs.size(); ++t) {
                auto [p, q] = pairs[t];
                Rot& R = rots[t];
                R.p = p;
                R.q = q;
                cplx c = S(p, q);
                double ac = std::abs(c);
                double a = S(p, p).real(), b = S(q, q).real();
                R.active = ac > 1e-300 && ac > 1e-18 * (std::abs(a) + std::abs(b));
                if (!R.active) continue;
                R.e = c / ac;
                double tau = (b - a) / (2 * ac);
                double tt = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1 + tau * tau));
                R.cs = 1 / std::sqrt(1 + tt * tt);
                R.sn = tt * R.cs;
                R.ap = a - tt * ac;
                R.aq = b + tt * ac;
            }
            const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(rots.size());
            // S <- S V and W <- W V; each rotation owns two columns
#pragma omp parallel for schedule(static) if (parallel)
            for (std::ptrdiff_t t = 0; t < np; ++t) {
                const Rot& R = rots[t];
                if (!R.active) continue;
                const cplx se = R.sn * R.e, sec = R.sn * std::conj(R.e);
                for (int k = 0; k < n; ++k) {
                    cplx x = S(k, R.p), y = S(k, R.q);
                    S(k, R.p) = R.cs * x - sec * y;
                    S(k, R.q) = se * x + R.cs * y;
                    cplx u = W(k, R.p), v = W(k, R.q);
                    W(k, R.p) = R.cs * u - sec * v;
                    W(k, R.q) = se * u + R.cs * v;
                }
            }
            // S <- V^* S; each rotation owns two rows
#pragma omp parallel for schedule(static) if (parallel)
            for (std::ptrdiff_t t = 0; t < np; ++t) {
                const Rot& R = rots[t];
                if (!R.active) continue;
                const cplx se = R.sn * R.e, sec = R.sn * std::conj(R.e);
                for (int k = 0; k < n; ++k) {
                    cplx x = S(R.p, k), y = S(R.q, k);
                    S(R.p, k) = R.cs * x - se * y;
                    S(R.q, k) = sec * x + R.cs * y;
                }
                S(R.p, R.q) = 0.0;
                S(R.q, R.p) = 0.0;
                S(R.p, R.p) = R.ap;
                S(R.q, R.q) = R.aq;
            }
        }
    }
    if (sweeps_out) *sweeps_out = sweep;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = S(i, i).real();
    return vals;
}

namespace {

double norm2(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

double residual_of(const Banded& E, const std::vector<cplx>& u, cplx z) {
    auto eu = E.apply(u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(eu[i] - z * u[i]);
    return std::sqrt(s);
}

void fix_phase(std::vector<cplx>& u) {
    std::size_t im = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
        if (std::abs(u[i]) > std::abs(u[im])) im = i;
    if (std::abs(u[im]) == 0.0) return;
    cplx c = std::conj(u[im]) / std::abs(u[im]);
    for (auto& x : u) x *= c;
    u[im] = std::abs(u[im]);
}

cplx rayleigh(const Banded& E, const std::vector<cplx>& u) {
    auto eu = E.apply(u);
    cplx s{};
    for (std::size_t i = 0; i < u.size(); ++i) s += std::conj(u[i]) * eu[i];
    return s / std::abs(s);
}

std::vector<EigenPair> eigensolve_impl(const CmvRestriction& r, const EigenOptions& opt) {
    const int n = r.size();
    const Banded& E = r.band();
    if (n == 1) {
        cplx v = E.get(0, 0);
        return {EigenPair{v, {cplx{1.0}}, 0.0}};
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> dist(0.0, kTwoPi);
    const cplx I(0.0, 1.0);

    for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
        const cplx rot = std::polar(1.0, dist(rng));
        Banded ip(n, 2, 2);
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j)
                ip.set(i, j, (i == j ? 1.0 : 0.0) + rot * E.get(i, j));
        BandLU lu(ip);
        if (lu.singular()) continue;

        // S = i (I+U)^{-1} (I-U)
        std::vector<cplx> S(static_cast<std::size_t>(n) * n);
        bool bad = false;
#pragma omp parallel for schedule(static) if (opt.parallel)
        for (int j = 0; j < n; ++j) {
            std::vector<cplx> rhs(n);
            for (int i = std::max(0, j - 2); i <= std::min(n - 1, j + 2); ++i)
                rhs[i] = (i == j ? 1.0 : 0.0) - rot * E.get(i, j);
            auto x = lu.solve(std::move(rhs));
            for (int i = 0; i < n; ++i) S[static_cast<std::size_t>(i) * n + j] = I * x[i];
        }
        double smax = 0.0;
        for (const auto& v : S) {
            double a = std::abs(v);
            if (!std::isfinite(a)) bad = true;
            smax = std::max(smax, a);
        }
        if (bad || smax > opt.cayley_limit) continue;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                cplx& x = S[static_cast<std::size_t>(i) * n + j];
                cplx& y = S[static_cast<std::size_t>(j) * n + i];
                cplx h = 0.5 * (x + std::conj(y));
                x = h;
                y = std::conj(h);
            }

        std::vector<cplx> W;
        auto vals = jacobi_hermitian(S, n, W, opt.parallel);

        std::vector<EigenPair> out(n);
        for (int j = 0; j < n; ++j) {
            cplx mu = (I - vals[j]) / (I + vals[j]);
            out[j].value = mu / rot;
            out[j].value /= std::abs(out[j].value);
            out[j].vector.resize(n);
            for (int i = 0; i < n; ++i) out[j].vector[i] = W[static_cast<std::size_t>(i) * n + j];
        }
        // neighbour gaps on the circle decide which vectors get inverse iteration
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int x, int y) { return arg_2pi(out[x].value) < arg_2pi(out[y].value); });
        std::vector<double> gap(n, 4.0);
        for (int t = 0; t < n; ++t) {
            int cur = order[t], nxt = order[(t + 1) % n];
            double g = std::abs(out[cur].value - out[nxt].value);
            gap[cur] = std::min(gap[cur], g);
            gap[nxt] = std::min(gap[nxt], g);
        }

#pragma omp parallel for schedule(dynamic, 4) if (opt.parallel)
        for (int j = 0; j < n; ++j) {
            EigenPair& ep = out[j];
            ep.value = rayleigh(E, ep.vector);
            ep.residual = residual_of(E, ep.vector, ep.value);
            if (gap[j] > 1e-7) {
                Banded sh(n, 2, 2);
                for (int i = 0; i < n; ++i)
                    for (int k = std::max(0, i - 2); k <= std::min(n - 1, i + 2); ++k)
                        sh.set(i, k, E.get(i, k) - (i == k ? ep.value : cplx{}));
                BandLU slu(sh);
                slu.regularize(1e-300);
                // repeat until every entry is stable relatively, so exponentially small tails are resolved
                std::vector<cplx> v = ep.vector;
                for (int it = 0; it < 32; ++it) {
                    auto nv = slu.solve(v);
                    double s = norm2(nv);
                    if (!std::isfinite(s) || s == 0.0) break;
                    for (auto& x : nv) x /= s;
                    cplx ip{};
                    for (int i = 0; i < n; ++i) ip += std::conj(nv[i]) * v[i];
                    cplx c = std::abs(ip) > 0 ? ip / std::abs(ip) : cplx{1.0};
                    double change = 0.0;
                    for (int i = 0; i < n; ++i) {
                        cplx a = c * nv[i];
                        if (a != cplx{}) change = std::max(change, std::abs(a - v[i]) / std::abs(a));
                        nv[i] = a;
                    }
                    v = std::move(nv);
                    if (change < 1e-8) break;
                }
                cplx zv = rayleigh(E, v);
                double res = residual_of(E, v, zv);
                if (res <= std::max(ep.residual, 1e-14)) {
                    ep.vector = std::move(v);
                    ep.value = zv;
                    ep.residual = res;
                }
            }
            fix_phase(ep.vector);
        }
        std::stable_sort(out.begin(), out.end(),
                         [](const EigenPair& x, const EigenPair& y) { return arg_2pi(x.value) < arg_2pi(y.value); });
        return out;
    }
    throw Error(ErrorCode::CayleyBreakdown, "no rotation kept -1 away from the spectrum");
}

}  // namespace

std::vector<EigenPair> eigensolve(const CmvRestriction& r, const EigenOptions& opt) { return eigensolve_impl(r, opt); }

std::vector<EigenPair> eigensolve_serial(const CmvRestriction& r, std::uint64_t seed) {
    EigenOptions o;
    o.seed = seed;
    o.parallel = false;
    return eigensolve_impl(r, o);
}

double separation(const std::vector<EigenPair>& eigs, std::size_t j) {
    if (eigs.size() < 2) throw Error(ErrorCode::InvalidArgument, "separation needs two eigenvalues");
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < eigs.size(); ++k)
        if (k != j) m = std::min(m, std::abs(eigs[j].value - eigs[k].value));
    return m;
}

SpectralWindow make_window(const std::vector<EigenPair>& eigs, cplx center, double radius) {
    SpectralWindow w{center, radius, {}};
    for (std::size_t i = 0; i < eigs.size(); ++i)
        if (std::abs(eigs[i].value - center) < radius) w.members.push_back(i);
    return w;
}

LogDet resultant_window(const std::vector<EigenPair>& a, const std::vector<EigenPair>& b, const SpectralWindow& w) {
    LogDet d;
    auto inside = [&](cplx z) { return std::abs(z - w.center) < w.radius; };
    for (const auto& x : a) {
        if (!inside(x.value)) continue;
        for (const auto& y : b) {
            if (!inside(y.value)) continue;
            d *= x.value - y.value;
        }
    }
    return d;
}

static Poly trimmed(const Poly& p) {
    Poly q = p;
    while (!q.empty() && q.back() == cplx{}) q.pop_back();
    if (q.empty()) throw Error(ErrorCode::InvalidArgument, "zero polynomial");
    return q;
}

cplx poly_eval(const Poly& p, cplx z) {
    cplx s{};
    for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * z + *it;
    return s;
}

std::vector<cplx> poly_roots(const Poly& p0) {
    Poly p = trimmed(p0);
    const int k = static_cast<int>(p.size()) - 1;
    if (k == 0) return {};
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(k, k);
    for (int i = 1; i < k; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < k; ++i) C(i, k - 1) = -p[i] / p[k];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> r(k);
    for (int i = 0; i < k; ++i) r[i] = es.eigenvalues()(i);
    return r;
}

cplx sylvester_resultant(const Poly& f0, const Poly& g0) {
    Poly f = trimmed(f0), g = trimmed(g0);
    const int k = static_cast<int>(f.size()) - 1, m = static_cast<int>(g.size()) - 1;
    if (k == 0 && m == 0) return 1.0;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(k + m, k + m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= k; ++j) S(i, i + j) = f[k - j];
    for (int i = 0; i < k; ++i)
        for (int j = 0; j <= m; ++j) S(m + i, i + j) = g[m - j];
    return S.determinant();
}

ResultantFloorReport resultant_floor_check(const Poly& f, const Poly& g, double delta) {
    if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
    ResultantFloorReport rep;
    rep.delta = delta;
    for (auto z : poly_roots(f)) rep.root_radius = std::max(rep.root_radius, std::abs(z));
    for (auto z : poly_roots(g)) rep.root_radius = std::max(rep.root_radius, std::abs(z));
    if (rep.root_radius > 0.5 + 1e-12)
        throw Error(ErrorCode::HypothesisViolated, "root radius " + std::to_string(rep.root_radius) + " > 1/2");
    rep.s = static_cast<int>(std::max(trimmed(f).size(), trimmed(g).size())) - 1;
    rep.floor = std::pow(delta / 2, rep.s);
    rep.resultant_abs = std::abs(sylvester_resultant(f, g));
    rep.applicable = rep.resultant_abs > delta;
    rep.min_observed_max = std::numeric_limits<double>::infinity();
    const int side = 16;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
            cplx z(-1.0 + 2.0 * i / (side - 1), -1.0 + 2.0 * j / (side - 1));
            rep.min_observed_max =
                std::min(rep.min_observed_max, std::max(std::abs(poly_eval(f, z)), std::abs(poly_eval(g, z))));
        }
    rep.grid_points = side * side;
    rep.holds = !rep.applicable || rep.min_observed_max > rep.floor;
    return rep;
}

WeierstrassSplit weierstrass_split(const CmvRestriction& r, const std::vector<EigenPair>& eigs,
                                   const SpectralWindow& window, cplx z) {
    LogDet phi = char_det_lu(r, z);
    if (phi.is_zero()) throw Error(ErrorCode::SingularResolvent, "z is an eigenvalue");
    WeierstrassSplit s;
    std::vector<double> logs;
    for (auto i : window.members) {
        double d = std::abs(z - eigs.at(i).value);
        if (d == 0.0) throw Error(ErrorCode::SingularResolvent, "z is an eigenvalue");
        logs.push_back(std::log(d));
    }
    s.logP = pairwise_sum(logs);
    s.logG = phi.log_modulus - s.logP;
    return s;
}

namespace {

// perfect matching using only pairs with |a_i - b_j| <= t (Kuhn's augmenting paths)
bool has_matching(const std::vector<cplx>& a, const std::vector<cplx>& b, double t) {
    const std::size_t n = a.size();
    std::vector<int> match(n, -1);
    std::vector<char> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (seen[j] || std::abs(a[i] - b[j]) > t) continue;
            seen[j] = 1;
            if (match[j] < 0 || augment(static_cast<std::size_t>(match[j]))) {
                match[j] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        seen.assign(n, 0);
        if (!augment(i)) return false;
    }
    return true;
}

}  // namespace

double matching_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "spectra differ in length");
    if (a.empty()) return 0.0;
    std::vector<double> cand;
    cand.reserve(a.size() * b.size());
    for (const auto& x : a)
        for (const auto& y : b) cand.push_back(std::abs(x - y));
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::size_t lo = 0, hi = cand.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (has_matching(a, b, cand[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return cand[lo];
}

double aligned_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx ip{};
    for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(b[i]) * a[i];
    cplx c = std::abs(ip) > 0 ? ip / std::abs(ip) : cplx{1.0};
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - c * b[i]);
    return std::sqrt(s);
}

ApproxMatch approx_eigen_match(const CmvRestriction& r, const std::vector<EigenPair>& eigs,
                               const std::vector<cplx>& phi, cplx z, std::optional<double> eps_hat) {
    // slack for rounding in eps_tilde when phi is an exact eigenvector
    constexpr double kSlack = 1e-13;
    const std::size_t N = eigs.size();
    if (phi.size() != N || N == 0) throw Error(ErrorCode::InvalidArgument, "phi has wrong length");
    if (std::abs(norm2(phi) - 1.0) > 1e-10) throw Error(ErrorCode::InvalidArgument, "phi must be a unit vector");
    ApproxMatch m;
    m.eps_tilde = residual_of(r.band(), phi, z);
    m.overlap_floor = 1.0 / std::sqrt(2.0 * N);
    auto overlap = [&](std::size_t j) {
        cplx ip{};
        for (std::size_t i = 0; i < N; ++i) ip += std::conj(eigs[j].vector[i]) * phi[i];
        return std::abs(ip);
    };
    m.nearest_distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) {
        double d = std::abs(eigs[j].value - z);
        if (d < m.nearest_distance) {
            m.nearest_distance = d;
            m.nearest = j;
        }
    }
    const double radius = m.eps_tilde * std::sqrt(2.0) + kSlack;
    if (m.nearest_distance > radius)
        throw Error(ErrorCode::CorollaryViolated, "no eigenvalue within sqrt(2) eps of z");
    for (std::size_t j = 0; j < N; ++j) {
        if (std::abs(eigs[j].value - z) > radius) continue;
        double o = overlap(j);
        if (o > m.witness_overlap) {
            m.witness_overlap = o;
            m.witness = j;
        }
    }
    m.part_a = m.witness_overlap >= m.overlap_floor;
    if (!m.part_a) throw Error(ErrorCode::CorollaryViolated, "no eigenvector in the disk has the overlap floor");

    if (eps_hat && *eps_hat > m.eps_tilde) {
        std::size_t inside = 0;
        for (const auto& e : eigs)
            if (std::abs(e.value - z) < *eps_hat) ++inside;
        m.part_b_applicable = inside <= 1;
        if (m.part_b_applicable) {
            m.vector_distance = aligned_distance(phi, eigs[m.nearest].vector);
            m.part_b_bound = std::sqrt(2.0) * m.eps_tilde / *eps_hat;
            m.part_b = m.vector_distance < m.part_b_bound + kSlack;
            if (!m.part_b) throw Error(ErrorCode::CorollaryViolated, "phase-aligned vector distance above bound");
        }
    }
    return m;
}

void write_spectrum_csv(std::ostream& os, const std::vector<EigenPair>& eigs) {
    CsvWriter w(os, {"index", "theta", "re_z", "im_z", "residual"});
    for (std::size_t i = 0; i < eigs.size(); ++i) {
        w.cell(i).cell(arg_2pi(eigs[i].value)).cell(eigs[i].value.real()).cell(eigs[i].value.imag());
        w.cell(eigs[i].residual).end_row();
    }
}

}  // namespace qcmv
