#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcmv/cmv.hpp"
#include "qcmv/cocycle.hpp"
#include "qcmv/spectra.hpp"

namespace qcmv {

struct Interval {
    int lo = 0, hi = -1;  // inclusive; empty when hi < lo
    int length() const { return hi < lo ? 0 : hi - lo + 1; }
    bool contains(int s) const { return s >= lo && s <= hi; }
    // distance from site s to the interval, 0 inside
    int dist(int s) const { return s < lo ? lo - s : (s > hi ? s - hi : 0); }
};

// Envelope constants gamma/12 ... gamma/60 used by the localization statements.
struct GammaConstants {
    double gamma = 0.0;
    double g12 = 0.0, g16 = 0.0, g48 = 0.0, g50 = 0.0, g60 = 0.0;
    static GammaConstants of(double g) { return {g, g / 12, g / 16, g / 48, g / 50, g / 60}; }
};

// The shared data of every experiment.
struct System {
    VerblunskyField field;
    Frequency omega;
    BoundaryPair boundary;
};

enum class LdtKind { Monodromy, Determinant };
const char* ldt_kind_name(LdtKind k);

struct LdtReport {
    int n = 0;
    cplx z;
    double threshold = 0.0;
    double empirical_measure = 0.0;
    int sample_count = 0;
    int exceed_count = 0;
    LdtKind kind = LdtKind::Monodromy;
    LyapunovEstimate lyapunov;  // L_n from the independent sample set
    LdtExponents exponents;
};

// |log||M_n(x)|| - n L| (monodromy) or |normalized log|phi(x)| - n L| (determinant) per sample.
std::vector<double> ldt_deviations(const System& s, cplx z, int n, double nL, const std::vector<Phase>& samples,
                                   LdtKind kind);
std::vector<double> ldt_deviations_serial(const System& s, cplx z, int n, double nL,
                                          const std::vector<Phase>& samples, LdtKind kind);

LdtReport ldt_tail(const System& s, cplx z, int n, const std::vector<Phase>& samples,
                   const std::vector<Phase>& lyapunov_samples, const LdtExponents& ex, LdtKind kind,
                   std::optional<double> threshold_override = {});

struct NdrReport {
    Interval interval;
    int K = 0;
    int l = 0;
    double C = 1.0;
    double L_l = 0.0;
    double threshold = 0.0;
    double min_component_length = 0.0;  // components must be longer than this
    std::vector<int> bad_set;
    std::vector<double> site_values;  // normalized log|phi| per site of the interval
    bool is_ndr = false;
    int min_component_gap = 0;  // shortest good component, 0 when there is none
    LdtExponents exponents;
};

// NDR verdict from a bad set alone.
bool ndr_rule(const Interval& iv, const std::vector<int>& bad, int K, double min_len, int* shortest = nullptr);

NdrReport ndr_scan(const System& s, cplx z, const Phase& x, const Interval& lambda, int K, int l, double C,
                   const LdtExponents& ex, double L_l, std::optional<double> min_component_length = {});

struct DecayFit {
    std::size_t eigen_index = 0;
    cplx z;
    Interval center_interval;
    double rate = 0.0;
    double floor_rate = 0.0;  // gamma/12
    double max_violation = 0.0;  // max over sites of log|u(s)| + floor_rate*dist, positive means violated
    std::vector<int> violation_sites;
    int fit_points = 0;
    double fit_min_distance = 0.0;
};

// Least squares slope of log|u| against dist(s, I) over sites with dist >= min_dist and u(s) != 0;
// sites are absolute, u indexes [first_site, first_site + u.size()).
DecayFit fit_decay(const std::vector<cplx>& u, int first_site, const Interval& I, double floor_rate,
                   double min_dist);

struct HypothesisFailure {
    int m = 0;
    double value = 0.0;
    double threshold = 0.0;
};

struct FiniteScaleOptions {
    std::optional<Interval> I;          // derived from hypothesis failures when absent
    std::optional<double> gamma;        // gamma_emp when absent
    std::optional<double> fit_min_distance;  // l^{2/nu} when absent
    int lyapunov_samples = 200;
    std::uint64_t seed = 0;
};

struct FiniteScaleReport {
    int n = 0, l = 0;
    cplx z0;
    LdtExponents exponents;
    LyapunovEstimate L_l;  // feeds the hypothesis threshold
    LyapunovEstimate L_n;  // feeds gamma_emp
    GammaConstants gamma;
    Interval I;
    bool I_derived = false;
    double hypothesis_threshold = 0.0;
    std::vector<HypothesisFailure> hypothesis_failures;
    bool hypothesis_ok = true;
    bool shape_ok = true;  // l <= n^{nu/2}
    double selection_radius = 0.0;  // e^{-l}
    std::vector<DecayFit> fits;
    std::vector<EigenPair> eigs;
};

FiniteScaleReport finite_scale_localize(const System& s, const Phase& x0, cplx z0, int n, int l,
                                        const LdtExponents& ex, const FiniteScaleOptions& opt = {});

struct SeparationCheck {
    bool passes = false;
    double separation = 0.0;
    double threshold = 0.0;
    double margin = 0.0;
};
SeparationCheck eigen_separation_check(const DecayFit& fit, const std::vector<EigenPair>& eigs, std::size_t j,
                                       double C_sep);

enum class Schedule { Geometric, Squaring };  // n_{k+1} = 2 n_k or n_k^2

struct ScaleStep {
    int n = 0;           // window [-(n-1), n-1]
    std::size_t index = 0;
    cplx z;
    double eigenvalue_drift = 0.0;  // from the previous scale
    double vector_drift = 0.0;
    double residual_bound = 0.0;    // sqrt(2) ||(E - z_prev) pad(u_prev)||
    double overlap = 0.0;
    DecayFit fit;
};

struct ScaleChain {
    int base_n = 0;
    Schedule schedule = Schedule::Geometric;
    std::vector<int> scales;
    std::vector<ScaleStep> steps;
    Interval interval;
    GammaConstants gamma;
    LyapunovEstimate L;
    bool broken = false;
    int broken_at = -1;
    bool drift_decreasing = false;
    bool flat = false;  // some drift grew, or shrank no faster than (n_k/n_{k+1})^2
    bool localized = false;
    std::string verdict;
};

struct ContinuationOptions {
    Schedule schedule = Schedule::Geometric;
    std::optional<std::size_t> j0;
    std::optional<double> gamma;
    int lyapunov_samples = 200;
    std::uint64_t seed = 0;
};

std::vector<int> continuation_scales(int base_n, int k_max, Schedule s);
std::size_t most_localized_central(const std::vector<EigenPair>& eigs, int first_site);

ScaleChain scale_continuation(const System& s, const Phase& x, int base_n, int k_max,
                              const ContinuationOptions& opt = {});

struct CoveringFailure {
    int m = 0;
    std::string hypothesis;  // "i", "iii" or "green-sum"
    double value = 0.0;
    double threshold = 0.0;
};

struct CoveringReport {
    Interval interval;
    cplx z0;
    LdtExponents exponents;
    std::map<int, Interval> sub_intervals;
    std::vector<CoveringFailure> failures;
    double max_green_sum = 0.0;
    double ldt_gap = 0.0;       // exp(-2 max |I_m|^{1-tau/4})
    double rigorous_gap = 0.0;  // from the Green sums and the resolvent perturbation bound
    bool issued = false;
    double gap = 0.0;
    std::optional<double> true_distance;
    bool sound = true;
};

std::map<int, Interval> default_sub_intervals(const Interval& iv, int radius);

CoveringReport covering_certificate(const System& s, const Phase& x0, cplx z0, const Interval& iv,
                                    const std::map<int, Interval>& sub, const LdtExponents& ex,
                                    int lyapunov_samples = 200, std::uint64_t seed = 0, bool cross_check = true);

}  // namespace qcmv
