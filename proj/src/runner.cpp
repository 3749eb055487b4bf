#include <set>
#include <sstream>

#include "qcmv/experiment.hpp"
#include "qcmv/io.hpp"

namespace qcmv {

using nlohmann::json;

namespace {

json jz(cplx z) { return json::array({z.real(), z.imag()}); }
json jiv(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

// nlohmann writes non-finite doubles as null, so they travel as strings
json jd(double v) { return std::isfinite(v) ? json(v) : json(fmt_double(v)); }

json j_exponents(const LdtExponents& e) { return {{"sigma", e.sigma}, {"tau", e.tau}, {"nu", e.nu}, {"c0", e.c0}}; }

json j_gamma(const GammaConstants& g) {
    return {{"gamma", g.gamma}, {"gamma_12", g.g12}, {"gamma_16", g.g16}, {"gamma_48", g.g48}, {"gamma_50", g.g50},
            {"gamma_60", g.g60}};
}

json j_lyap(const LyapunovEstimate& L) {
    return {{"n", L.n}, {"value", L.value}, {"std_error", L.std_error}, {"sample_count", L.sample_count},
            {"gamma_floor", L.gamma_floor}};
}

json j_fit(const DecayFit& f) {
    return {{"eigen_index", f.eigen_index}, {"theta", arg_2pi(f.z)}, {"z", jz(f.z)},
            {"center_interval", jiv(f.center_interval)}, {"rate", jd(f.rate)}, {"floor_rate", f.floor_rate},
            {"max_violation", jd(f.max_violation)}, {"violation_sites", f.violation_sites},
            {"fit_points", f.fit_points}, {"fit_min_distance", f.fit_min_distance}};
}

double jnum(const json& v) {
    if (v.is_string()) return std::stod(v.get<std::string>());
    return v.get<double>();
}

json config_echo(const ExperimentConfig& c) {
    json zs = json::array();
    for (auto z : c.z_grid) zs.push_back(jz(z));
    json params = std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            json o = json::object();
            if constexpr (std::is_same_v<T, LyapunovParams>) {
                o["samples"] = p.samples;
            } else if constexpr (std::is_same_v<T, LdtParams>) {
                o["samples"] = p.samples;
                o["lyapunov_samples"] = p.lyapunov_samples;
                json k = json::array();
                for (auto x : p.kinds) k.push_back(ldt_kind_name(x));
                o["kinds"] = k;
                if (p.threshold) o["threshold"] = jd(*p.threshold);
            } else if constexpr (std::is_same_v<T, LocalizeParams>) {
                o["n"] = p.n;
                o["l"] = p.l;
                if (p.I) o["I"] = jiv(*p.I);
                if (p.gamma) o["gamma"] = *p.gamma;
                if (p.fit_min_distance) o["fit_min_distance"] = *p.fit_min_distance;
                o["C_sep"] = p.C_sep;
                o["lyapunov_samples"] = p.lyapunov_samples;
                o["snap_to_spectrum"] = p.snap_to_spectrum;
            } else if constexpr (std::is_same_v<T, GreensParams>) {
                o["interval"] = json::array({p.a, p.b});
                o["row"] = p.row;
            } else if constexpr (std::is_same_v<T, NdrParams>) {
                o["interval"] = jiv(p.interval);
                o["K"] = p.K;
                o["l"] = p.l;
                o["C"] = p.C;
                if (p.min_component_length) o["min_component_length"] = jd(*p.min_component_length);
                o["lyapunov_samples"] = p.lyapunov_samples;
            } else if constexpr (std::is_same_v<T, ContinueParams>) {
                o["base_n"] = p.base_n;
                o["k_max"] = p.k_max;
                o["schedule"] = p.schedule == Schedule::Geometric ? "geometric" : "squaring";
                if (p.j0) o["j0"] = *p.j0;
                if (p.gamma) o["gamma"] = *p.gamma;
                o["lyapunov_samples"] = p.lyapunov_samples;
            } else if constexpr (std::is_same_v<T, CoveringParams>) {
                o["interval"] = jiv(p.interval);
                o["radius"] = p.radius;
                json subs = json::array();
                for (const auto& [m, I] : p.sub_intervals) subs.push_back({{"m", m}, {"I", jiv(I)}});
                o["sub_intervals"] = subs;
                o["lyapunov_samples"] = p.lyapunov_samples;
            }
            return o;
        },
        c.params);
    const auto& w = c.system.omega;
    return {{"experiment", c.experiment},
            {"field", field_to_json(c.system.field)},
            {"omega", {{"values", w.omega}, {"p", w.p}, {"q", w.q}, {"k_max", c.k_max}}},
            {"boundary", {{"beta", jz(c.system.boundary.beta)}, {"eta", jz(c.system.boundary.eta)}}},
            {"z_grid", {{"points", zs}}},
            {"scales", c.scales},
            {"x0", c.x0.x},
            {"seed", c.seed},
            {"output_path", c.output_path},
            {"params", params}};
}

std::string dbl(const json& v) { return fmt_double(jnum(v)); }

// ---- experiments: each fills `result` and returns the CSV projections built from it

void run_lyapunov(const ExperimentConfig& c, const LyapunovParams& p, json& result, Artifacts& a) {
    auto samples = phase_grid(c.system.field.dim(), p.samples, c.seed);
    json rows = json::array();
    for (auto z : c.z_grid)
        for (int n : c.scales) {
            auto L = finite_lyapunov(c.system.field, c.system.omega, z, n, samples);
            if (!std::isfinite(L.value)) a.assertion_failures.push_back("non-finite Lyapunov estimate");
            json r = j_lyap(L);
            r["theta"] = arg_2pi(z);
            r["z"] = jz(z);
            rows.push_back(r);
        }
    result["rows"] = rows;
    std::ostringstream os;
    CsvWriter w(os, {"theta", "re_z", "im_z", "n", "L_n", "std_error", "gamma_floor", "sample_count"});
    for (const auto& r : rows) {
        w.cell(dbl(r["theta"])).cell(dbl(r["z"][0])).cell(dbl(r["z"][1])).cell(r["n"].get<int>());
        w.cell(dbl(r["value"])).cell(dbl(r["std_error"])).cell(dbl(r["gamma_floor"])).cell(r["sample_count"].get<int>());
        w.end_row();
    }
    a.csv[""] = os.str();
}

void run_ldt(const ExperimentConfig& c, const LdtParams& p, json& result, Artifacts& a) {
    const int d = c.system.field.dim();
    auto samples = phase_grid(d, p.samples, c.seed);
    // a different start point keeps the Lyapunov estimate independent of the tested samples
    auto lsamples = phase_grid(d, p.lyapunov_samples, c.seed + 1);
    json rows = json::array();
    for (auto z : c.z_grid)
        for (int n : c.scales)
            for (auto kind : p.kinds) {
                auto r = ldt_tail(c.system, z, n, samples, lsamples, c.exponents, kind, p.threshold);
                if (!(r.empirical_measure >= 0 && r.empirical_measure <= 1) ||
                    r.empirical_measure != static_cast<double>(r.exceed_count) / r.sample_count)
                    a.assertion_failures.push_back("LDT measure inconsistent at n = " + std::to_string(n));
                rows.push_back({{"theta", arg_2pi(z)}, {"z", jz(z)}, {"n", n}, {"kind", ldt_kind_name(kind)},
                                {"threshold", jd(r.threshold)}, {"L_n", j_lyap(r.lyapunov)},
                                {"empirical_measure", r.empirical_measure}, {"exceed_count", r.exceed_count},
                                {"sample_count", r.sample_count}});
            }
    result["rows"] = rows;
    std::ostringstream os;
    CsvWriter w(os, {"theta", "re_z", "im_z", "n", "kind", "threshold", "L_n", "L_n_std_error", "empirical_measure",
                     "exceed_count", "sample_count"});
    for (const auto& r : rows) {
        w.cell(dbl(r["theta"])).cell(dbl(r["z"][0])).cell(dbl(r["z"][1])).cell(r["n"].get<int>());
        w.cell(r["kind"].get<std::string>()).cell(dbl(r["threshold"])).cell(dbl(r["L_n"]["value"]));
        w.cell(dbl(r["L_n"]["std_error"])).cell(dbl(r["empirical_measure"])).cell(r["exceed_count"].get<int>());
        w.cell(r["sample_count"].get<int>()).end_row();
    }
    a.csv[""] = os.str();
}

void run_localize(const ExperimentConfig& c, const LocalizeParams& p, json& result, Artifacts& a) {
    cplx z0 = c.z_grid.front();
    if (p.snap_to_spectrum) {
        auto r = build_restriction(c.system.field, c.system.omega, c.x0, 0, p.n - 1, c.system.boundary);
        EigenOptions eo;
        eo.seed = c.seed;
        auto eigs = eigensolve(r, eo);
        std::size_t best = 0;
        for (std::size_t j = 1; j < eigs.size(); ++j)
            if (std::abs(eigs[j].value - z0) < std::abs(eigs[best].value - z0)) best = j;
        result["z0_requested"] = jz(z0);
        z0 = eigs[best].value;
    }
    FiniteScaleOptions o;
    o.I = p.I;
    o.gamma = p.gamma;
    o.fit_min_distance = p.fit_min_distance;
    o.lyapunov_samples = p.lyapunov_samples;
    o.seed = c.seed;
    auto r = finite_scale_localize(c.system, c.x0, z0, p.n, p.l, c.exponents, o);

    result["n"] = r.n;
    result["l"] = r.l;
    result["z0"] = jz(r.z0);
    result["theta0"] = arg_2pi(r.z0);
    result["L_l"] = j_lyap(r.L_l);
    result["L_n"] = j_lyap(r.L_n);
    result["gamma"] = j_gamma(r.gamma);
    result["I"] = jiv(r.I);
    result["I_derived"] = r.I_derived;
    result["hypothesis_threshold"] = r.hypothesis_threshold;
    json hf = json::array();
    for (const auto& f : r.hypothesis_failures) hf.push_back({{"m", f.m}, {"value", f.value}, {"threshold", f.threshold}});
    result["hypothesis_failures"] = hf;
    result["hypothesis_ok"] = r.hypothesis_ok;
    result["shape_ok"] = r.shape_ok;
    result["selection_radius"] = r.selection_radius;
    result["C_sep"] = p.C_sep;
    json fits = json::array();
    int matched = 0;
    for (const auto& f : r.fits) {
        json jf = j_fit(f);
        auto sc = eigen_separation_check(f, r.eigs, f.eigen_index, p.C_sep);
        jf["separation"] = {{"passes", sc.passes}, {"separation", sc.separation}, {"threshold", sc.threshold},
                            {"margin", sc.margin}};
        bool ok = f.fit_points >= 2 && f.rate >= f.floor_rate && f.violation_sites.empty() && sc.passes;
        jf["localized"] = ok;
        matched += ok;
        fits.push_back(jf);

        // every listed site must violate the envelope, and no other site may
        const auto& u = r.eigs[f.eigen_index].vector;
        std::vector<int> recount;
        for (int s = 0; s < static_cast<int>(u.size()); ++s) {
            int dd = f.center_interval.dist(s);
            if (dd > 0 && u[s] != cplx{} && std::log(std::abs(u[s])) + f.floor_rate * dd >= 0) recount.push_back(s);
        }
        if (recount != f.violation_sites)
            a.assertion_failures.push_back("envelope violations disagree with the raw eigenvector for index " +
                                           std::to_string(f.eigen_index));
    }
    result["fits"] = fits;
    result["localized_matches"] = matched;
    json spectrum_rows = json::array();
    for (std::size_t j = 0; j < r.eigs.size(); ++j)
        spectrum_rows.push_back({{"index", j}, {"theta", arg_2pi(r.eigs[j].value)}, {"z", jz(r.eigs[j].value)},
                        {"residual", r.eigs[j].residual}});
    result["spectrum"] = spectrum_rows;

    std::ostringstream os;
    CsvWriter w(os, {"eigen_index", "theta", "re_z", "im_z", "I_lo", "I_hi", "rate", "floor_rate", "max_violation",
                     "violation_count", "fit_points", "fit_min_distance", "separation", "separation_threshold",
                     "separation_passes", "localized"});
    for (const auto& f : fits) {
        w.cell(f["eigen_index"].get<std::size_t>()).cell(dbl(f["theta"])).cell(dbl(f["z"][0])).cell(dbl(f["z"][1]));
        w.cell(f["center_interval"][0].get<int>()).cell(f["center_interval"][1].get<int>());
        w.cell(dbl(f["rate"])).cell(dbl(f["floor_rate"])).cell(dbl(f["max_violation"]));
        w.cell(f["violation_sites"].size()).cell(f["fit_points"].get<int>()).cell(dbl(f["fit_min_distance"]));
        w.cell(dbl(f["separation"]["separation"])).cell(dbl(f["separation"]["threshold"]));
        w.cell(f["separation"]["passes"].get<bool>()).cell(f["localized"].get<bool>()).end_row();
    }
    a.csv[""] = os.str();
    std::ostringstream ss;
    CsvWriter sw(ss, {"index", "theta", "re_z", "im_z", "residual"});
    for (const auto& e : spectrum_rows)
        sw.cell(e["index"].get<std::size_t>()).cell(dbl(e["theta"])).cell(dbl(e["z"][0])).cell(dbl(e["z"][1]))
            .cell(dbl(e["residual"])).end_row();
    a.csv["_spectrum"] = ss.str();
}

void run_greens(const ExperimentConfig& c, const GreensParams& p, json& result, Artifacts& a) {
    auto r = build_restriction(c.system.field, c.system.omega, c.x0, p.a, p.b, c.system.boundary);
    json rows = json::array();
    for (auto z : c.z_grid) {
        BandLU lu(green_pencil(r, z));
        if (lu.singular()) throw Error(ErrorCode::SingularResolvent, "z is a generalized eigenvalue of the pencil");
        const int n = r.size();
        // row `row` of G is column `row` of the adjoint solve; a direct solve per column is simpler
        std::vector<cplx> row(n);
        for (int k = p.row; k <= p.b; ++k) {
            std::vector<cplx> e(n);
            e[k - p.a] = 1.0;
            row[k - p.a] = lu.solve(std::move(e))[p.row - p.a];
        }
        for (int k = p.row; k <= p.b; ++k) {
            cplx g = row[k - p.a];
            double formula = greens_ratio(r, p.row, k, z);
            double rel = std::abs(std::abs(g) - formula) / std::max(std::abs(g), 1e-300);
            if (std::abs(g) > 1e-250 && rel > 1e-6)
                a.assertion_failures.push_back("Green's determinant ratio disagrees with the solve at k = " +
                                               std::to_string(k));
            rows.push_back({{"theta", arg_2pi(z)}, {"z", jz(z)}, {"j", p.row}, {"k", k}, {"G", jz(g)},
                            {"abs_G", std::abs(g)}, {"abs_G_determinant", formula}, {"relative_difference", rel}});
        }
    }
    result["interval"] = json::array({p.a, p.b});
    result["rows"] = rows;
    std::ostringstream os;
    CsvWriter w(os, {"theta", "re_z", "im_z", "j", "k", "re_G", "im_G", "abs_G", "abs_G_determinant",
                     "relative_difference"});
    for (const auto& r2 : rows) {
        w.cell(dbl(r2["theta"])).cell(dbl(r2["z"][0])).cell(dbl(r2["z"][1])).cell(r2["j"].get<int>());
        w.cell(r2["k"].get<int>()).cell(dbl(r2["G"][0])).cell(dbl(r2["G"][1])).cell(dbl(r2["abs_G"]));
        w.cell(dbl(r2["abs_G_determinant"])).cell(dbl(r2["relative_difference"])).end_row();
    }
    a.csv[""] = os.str();
}

void run_ndr(const ExperimentConfig& c, const NdrParams& p, json& result, Artifacts& a) {
    auto samples = phase_grid(c.system.field.dim(), p.lyapunov_samples, c.seed);
    json reports = json::array();
    for (auto z : c.z_grid) {
        auto L = finite_lyapunov(c.system.field, c.system.omega, z, p.l, samples);
        auto r = ndr_scan(c.system, z, c.x0, p.interval, p.K, p.l, p.C, c.exponents, L.value, p.min_component_length);
        if (r.is_ndr != ndr_rule(r.interval, r.bad_set, r.K, r.min_component_length))
            a.assertion_failures.push_back("NDR verdict disagrees with its bad set");
        json vals = json::array();
        for (double v : r.site_values) vals.push_back(jd(v));
        reports.push_back({{"theta", arg_2pi(z)}, {"z", jz(z)}, {"interval", jiv(r.interval)}, {"K", r.K},
                           {"l", r.l}, {"C", r.C}, {"L_l", j_lyap(L)}, {"threshold", r.threshold},
                           {"min_component_length", jd(r.min_component_length)}, {"bad_set", r.bad_set},
                           {"site_values", vals}, {"is_ndr", r.is_ndr}, {"min_component_gap", r.min_component_gap}});
    }
    result["reports"] = reports;
    std::ostringstream os;
    CsvWriter w(os, {"theta", "re_z", "im_z", "site", "value", "threshold", "bad", "is_ndr"});
    for (const auto& r : reports) {
        const int lo = r["interval"][0].get<int>();
        std::set<int> bad(r["bad_set"].begin(), r["bad_set"].end());
        for (std::size_t i = 0; i < r["site_values"].size(); ++i) {
            int site = lo + static_cast<int>(i);
            w.cell(dbl(r["theta"])).cell(dbl(r["z"][0])).cell(dbl(r["z"][1])).cell(site);
            w.cell(dbl(r["site_values"][i])).cell(dbl(r["threshold"])).cell(static_cast<bool>(bad.count(site)));
            w.cell(r["is_ndr"].get<bool>()).end_row();
        }
    }
    a.csv[""] = os.str();
}

void run_continue(const ExperimentConfig& c, const ContinueParams& p, json& result, Artifacts& a) {
    ContinuationOptions o;
    o.schedule = p.schedule;
    o.j0 = p.j0;
    o.gamma = p.gamma;
    o.lyapunov_samples = p.lyapunov_samples;
    o.seed = c.seed;
    auto ch = scale_continuation(c.system, c.x0, p.base_n, p.k_max, o);
    result["base_n"] = ch.base_n;
    result["schedule"] = ch.schedule == Schedule::Geometric ? "geometric" : "squaring";
    result["scales"] = ch.scales;
    result["interval"] = jiv(ch.interval);
    result["L"] = j_lyap(ch.L);
    result["gamma"] = j_gamma(ch.gamma);
    json steps = json::array();
    for (std::size_t k = 0; k < ch.steps.size(); ++k) {
        const auto& s = ch.steps[k];
        steps.push_back({{"k", k}, {"n", s.n}, {"index", s.index}, {"theta", arg_2pi(s.z)}, {"z", jz(s.z)},
                         {"eigenvalue_drift", s.eigenvalue_drift}, {"vector_drift", s.vector_drift},
                         {"residual_bound", s.residual_bound}, {"overlap", s.overlap}, {"fit", j_fit(s.fit)}});
    }
    result["steps"] = steps;
    json tri = json::array();
    for (std::size_t k = 0; k + 2 < ch.steps.size(); ++k) {
        double lhs = std::abs(ch.steps[k + 2].z - ch.steps[k].z);
        double rhs = ch.steps[k + 1].eigenvalue_drift + ch.steps[k + 2].eigenvalue_drift + 1e-12;
        tri.push_back({{"k", k}, {"direct", lhs}, {"bound", rhs}, {"holds", lhs <= rhs}});
        if (!(lhs <= rhs)) a.assertion_failures.push_back("cross-scale triangle inequality fails at k = " + std::to_string(k));
    }
    result["triangle_checks"] = tri;
    result["broken"] = ch.broken;
    result["broken_at"] = ch.broken_at;
    result["drift_decreasing"] = ch.drift_decreasing;
    result["flat"] = ch.flat;
    result["localized"] = ch.localized;
    result["verdict"] = ch.verdict;

    std::ostringstream os;
    CsvWriter w(os, {"k", "n", "index", "theta", "re_z", "im_z", "eigenvalue_drift", "vector_drift", "residual_bound",
                     "overlap", "fit_rate", "floor_rate", "violation_count", "verdict"});
    for (const auto& s : steps) {
        w.cell(s["k"].get<std::size_t>()).cell(s["n"].get<int>()).cell(s["index"].get<std::size_t>());
        w.cell(dbl(s["theta"])).cell(dbl(s["z"][0])).cell(dbl(s["z"][1])).cell(dbl(s["eigenvalue_drift"]));
        w.cell(dbl(s["vector_drift"])).cell(dbl(s["residual_bound"])).cell(dbl(s["overlap"]));
        w.cell(dbl(s["fit"]["rate"])).cell(dbl(s["fit"]["floor_rate"])).cell(s["fit"]["violation_sites"].size());
        w.cell(result["verdict"].get<std::string>()).end_row();
    }
    a.csv[""] = os.str();
}

void run_covering(const ExperimentConfig& c, const CoveringParams& p, json& result, Artifacts& a) {
    auto sub = p.sub_intervals.empty() ? default_sub_intervals(p.interval, p.radius) : p.sub_intervals;
    json reports = json::array();
    for (auto z : c.z_grid) {
        auto r = covering_certificate(c.system, c.x0, z, p.interval, sub, c.exponents, p.lyapunov_samples, c.seed, true);
        if (!r.sound) a.assertion_failures.push_back("certified gap exceeds the true spectral distance");
        json fails = json::array();
        for (const auto& f : r.failures)
            fails.push_back({{"m", f.m}, {"hypothesis", f.hypothesis}, {"value", jd(f.value)}, {"threshold", f.threshold}});
        reports.push_back({{"theta", arg_2pi(z)}, {"z", jz(z)}, {"interval", jiv(r.interval)}, {"failures", fails},
                           {"max_green_sum", r.max_green_sum}, {"ldt_gap", r.ldt_gap}, {"rigorous_gap", jd(r.rigorous_gap)},
                           {"issued", r.issued}, {"gap", r.gap}, {"true_distance", jd(r.true_distance.value_or(kNegInf))},
                           {"sound", r.sound}});
    }
    json subs = json::array();
    for (const auto& [m, I] : sub) subs.push_back({{"m", m}, {"I", jiv(I)}});
    result["sub_intervals"] = subs;
    result["reports"] = reports;
    std::ostringstream os;
    CsvWriter w(os, {"theta", "re_z", "im_z", "issued", "gap", "ldt_gap", "rigorous_gap", "max_green_sum",
                     "failure_count", "true_distance", "sound"});
    for (const auto& r : reports) {
        w.cell(dbl(r["theta"])).cell(dbl(r["z"][0])).cell(dbl(r["z"][1])).cell(r["issued"].get<bool>());
        w.cell(dbl(r["gap"])).cell(dbl(r["ldt_gap"])).cell(dbl(r["rigorous_gap"])).cell(dbl(r["max_green_sum"]));
        w.cell(r["failures"].size()).cell(dbl(r["true_distance"])).cell(r["sound"].get<bool>()).end_row();
    }
    a.csv[""] = os.str();
}

}  // namespace

Artifacts run_experiment(const ExperimentConfig& c) {
    Artifacts a;
    json result = json::object();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LyapunovParams>) run_lyapunov(c, p, result, a);
            if constexpr (std::is_same_v<T, LdtParams>) run_ldt(c, p, result, a);
            if constexpr (std::is_same_v<T, LocalizeParams>) run_localize(c, p, result, a);
            if constexpr (std::is_same_v<T, GreensParams>) run_greens(c, p, result, a);
            if constexpr (std::is_same_v<T, NdrParams>) run_ndr(c, p, result, a);
            if constexpr (std::is_same_v<T, ContinueParams>) run_continue(c, p, result, a);
            if constexpr (std::is_same_v<T, CoveringParams>) run_covering(c, p, result, a);
        },
        c.params);
    a.report = {{"schema_version", kSchemaVersion},
                {"experiment", c.experiment},
                {"seed", c.seed},
                {"config", config_echo(c)},
                {"exponents", j_exponents(c.exponents)},
                {"certificate", c.system.field.certificate()},
                {"diophantine_margin", jd(diophantine_margin(c.system.omega, c.k_max))},
                {"result", result},
                {"assertions", {{"passed", a.assertion_failures.empty()}, {"failures", a.assertion_failures}}}};
    return a;
}

std::string report_text(const json& report) { return report.dump(2) + "\n"; }

}  // namespace qcmv
