#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "qcmv/experiment.hpp"
#include "qcmv/io.hpp"

namespace qcmv {

using nlohmann::json;

namespace {

class Reader {
public:
    std::vector<Diagnostic> diags;

    void error(const std::string& where, const std::string& msg) { diags.push_back({true, where, msg}); }
    void warn(const std::string& where, const std::string& msg) { diags.push_back({false, where, msg}); }
    bool failed() const {
        for (const auto& d : diags)
            if (d.error) return true;
        return false;
    }

    // object member or nullptr; reports a missing required key
    const json* member(const json& obj, const std::string& path, const char* key, bool required) {
        if (!obj.is_object()) {
            error(path, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) error(path + "/" + key, "missing required field");
            return nullptr;
        }
        return &*it;
    }

    void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) warn(path + "/" + it.key(), "unknown field ignored");
    }

    std::optional<double> number(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_number()) {
            error(path, "expected a number");
            return {};
        }
        return v->get<double>();
    }

    std::optional<long long> integer(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_number_integer()) {
            error(path, "expected an integer");
            return {};
        }
        return v->get<long long>();
    }

    std::optional<int> int_in(const json* v, const std::string& path, long long lo, long long hi) {
        auto x = integer(v, path);
        if (!x) return {};
        if (*x < lo || *x > hi) {
            error(path, "value " + std::to_string(*x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return {};
        }
        return static_cast<int>(*x);
    }

    std::optional<std::string> string(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_string()) {
            error(path, "expected a string");
            return {};
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_boolean()) {
            error(path, "expected true or false");
            return {};
        }
        return v->get<bool>();
    }

    std::optional<std::vector<double>> numbers(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_array()) {
            error(path, "expected an array of numbers");
            return {};
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            auto x = number(&(*v)[i], path + "/" + std::to_string(i));
            if (!x) return {};
            out.push_back(*x);
        }
        return out;
    }

    std::optional<cplx> complex(const json* v, const std::string& path) {
        auto p = numbers(v, path);
        if (!p) return {};
        if (p->size() != 2) {
            error(path, "expected [re, im]");
            return {};
        }
        return cplx{(*p)[0], (*p)[1]};
    }

    std::optional<Interval> interval(const json* v, const std::string& path) {
        if (!v) return {};
        if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer()) {
            error(path, "expected [lo, hi] integers");
            return {};
        }
        Interval iv{(*v)[0].get<int>(), (*v)[1].get<int>()};
        if (iv.hi < iv.lo) {
            error(path, "interval has hi < lo");
            return {};
        }
        return iv;
    }
};

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::optional<VerblunskyField> read_field(Reader& R, const json& j) {
    const std::string P = "/field";
    R.known_keys(j, P, {"h", "d", "coeffs"});
    auto h = R.number(R.member(j, P, "h", true), P + "/h");
    auto d = R.int_in(R.member(j, P, "d", false), P + "/d", 1, 8);
    const json* cs = R.member(j, P, "coeffs", true);
    if (!h || !cs) return {};
    if (!(*h > 0)) {
        R.error(P + "/h", "analyticity width must be positive");
        return {};
    }
    if (!cs->is_array()) {
        R.error(P + "/coeffs", "expected an array");
        return {};
    }
    int dim = d ? *d : 0;
    TrigPolynomial poly;
    bool bad = false;
    for (std::size_t i = 0; i < cs->size(); ++i) {
        const std::string cp = P + "/coeffs/" + std::to_string(i);
        const json& c = (*cs)[i];
        R.known_keys(c, cp, {"k", "re", "im"});
        const json* k = R.member(c, cp, "k", true);
        if (!k) {
            bad = true;
            continue;
        }
        if (!k->is_array() || k->empty() ||
            !std::all_of(k->begin(), k->end(), [](const json& e) { return e.is_number_integer(); })) {
            R.error(cp + "/k", "expected a nonempty array of integers");
            bad = true;
            continue;
        }
        Mode m = k->get<Mode>();
        if (dim == 0) dim = static_cast<int>(m.size());
        if (static_cast<int>(m.size()) != dim) {
            R.error(cp + "/k", "mode has " + std::to_string(m.size()) + " entries, field dimension is " + std::to_string(dim));
            bad = true;
            continue;
        }
        auto re = R.number(R.member(c, cp, "re", false), cp + "/re");
        auto im = R.number(R.member(c, cp, "im", false), cp + "/im");
        if (poly.dim != dim) poly = TrigPolynomial(dim);
        poly.add(m, cplx{re.value_or(0.0), im.value_or(0.0)});
    }
    if (bad) return {};
    if (dim == 0) {
        R.error(P, "field dimension unknown: give \"d\" or a coefficient");
        return {};
    }
    if (poly.dim != dim) poly = TrigPolynomial(dim);
    double cert = VerblunskyField::certificate_of(poly, *h);
    if (!(cert < 1.0)) {
        R.error(P, "coefficient certificate sum |c_k| e^{2 pi |k| h} = " + fmt_double(cert) + " is not below 1");
        return {};
    }
    return VerblunskyField(std::move(poly), *h);
}

std::optional<Frequency> read_omega(Reader& R, const json& j, int dim, int& k_max) {
    const std::string P = "/omega";
    R.known_keys(j, P, {"values", "p", "q", "k_max"});
    auto v = R.numbers(R.member(j, P, "values", true), P + "/values");
    auto p = R.number(R.member(j, P, "p", false), P + "/p");
    auto q = R.number(R.member(j, P, "q", false), P + "/q");
    auto k = R.int_in(R.member(j, P, "k_max", false), P + "/k_max", 1, 64);
    if (k) k_max = *k;
    if (!v) return {};
    if (dim > 0 && static_cast<int>(v->size()) != dim) {
        R.error(P + "/values", "frequency has " + std::to_string(v->size()) + " entries, field dimension is " +
                                   std::to_string(dim));
        return {};
    }
    try {
        return Frequency(*v, p.value_or(1.0), q.value_or(static_cast<double>(v->size()) + 1.0));
    } catch (const Error& e) {
        R.error(P, e.what());
        return {};
    }
}

BoundaryPair read_boundary(Reader& R, const json* j) {
    BoundaryPair bc;
    if (!j) return bc;
    const std::string P = "/boundary";
    R.known_keys(*j, P, {"beta", "eta"});
    auto b = R.complex(R.member(*j, P, "beta", false), P + "/beta");
    auto e = R.complex(R.member(*j, P, "eta", false), P + "/eta");
    if (b) bc.beta = *b;
    if (e) bc.eta = *e;
    try {
        bc.validate();
    } catch (const Error& err) {
        R.error(P, err.what());
    }
    return bc;
}

LdtExponents read_exponents(Reader& R, const json* j) {
    LdtExponents ex;
    if (!j) return ex;
    const std::string P = "/exponents";
    R.known_keys(*j, P, {"sigma", "tau", "nu", "c0"});
    if (auto v = R.number(R.member(*j, P, "sigma", false), P + "/sigma")) ex.sigma = *v;
    if (auto v = R.number(R.member(*j, P, "tau", false), P + "/tau")) ex.tau = *v;
    if (auto v = R.number(R.member(*j, P, "nu", false), P + "/nu")) ex.nu = *v;
    if (auto v = R.number(R.member(*j, P, "c0", false), P + "/c0")) ex.c0 = *v;
    try {
        ex.validate();
    } catch (const Error& e) {
        R.error(P, e.what());
    }
    return ex;
}

std::vector<cplx> read_z_grid(Reader& R, const json* j) {
    std::vector<cplx> out;
    if (!j) return out;
    const std::string P = "/z_grid";
    R.known_keys(*j, P, {"theta", "points", "arc"});
    if (auto th = R.numbers(R.member(*j, P, "theta", false), P + "/theta"))
        for (double t : *th) out.push_back(std::polar(1.0, t));
    if (const json* pts = R.member(*j, P, "points", false)) {
        if (!pts->is_array()) {
            R.error(P + "/points", "expected an array of [re, im]");
        } else {
            for (std::size_t i = 0; i < pts->size(); ++i) {
                const std::string ip = P + "/points/" + std::to_string(i);
                auto z = R.complex(&(*pts)[i], ip);
                if (!z) continue;
                if (std::abs(std::abs(*z) - 1.0) > 1e-12) {
                    R.error(ip, std::string(error_name(ErrorCode::InvalidSpectralParameter)) + ": |z| = " +
                                    fmt_double(std::abs(*z)) + " is not 1");
                    continue;
                }
                out.push_back(*z);
            }
        }
    }
    if (const json* arc = R.member(*j, P, "arc", false)) {
        const std::string AP = P + "/arc";
        R.known_keys(*arc, AP, {"from", "to", "count"});
        auto a = R.number(R.member(*arc, AP, "from", true), AP + "/from");
        auto b = R.number(R.member(*arc, AP, "to", true), AP + "/to");
        auto n = R.int_in(R.member(*arc, AP, "count", true), AP + "/count", 1, 1000000);
        if (a && b && n)
            for (int i = 0; i < *n; ++i)
                out.push_back(std::polar(1.0, *n == 1 ? *a : *a + (*b - *a) * i / (*n - 1)));
    }
    return out;
}

std::optional<ExperimentParams> read_params(Reader& R, const std::string& exp, const json* j) {
    static const json empty = json::object();
    const json& o = j ? *j : empty;
    const std::string P = "/params";
    auto samples_of = [&](const char* key, int def) {
        return R.int_in(R.member(o, P, key, false), P + "/" + key, 1, 10000000).value_or(def);
    };
    if (exp == "lyapunov") {
        R.known_keys(o, P, {"samples"});
        LyapunovParams p;
        p.samples = samples_of("samples", p.samples);
        return p;
    }
    if (exp == "ldt") {
        R.known_keys(o, P, {"samples", "lyapunov_samples", "kind", "threshold"});
        LdtParams p;
        p.samples = samples_of("samples", p.samples);
        p.lyapunov_samples = samples_of("lyapunov_samples", p.lyapunov_samples);
        if (auto k = R.string(R.member(o, P, "kind", false), P + "/kind")) {
            if (*k == "monodromy")
                p.kinds = {LdtKind::Monodromy};
            else if (*k == "determinant")
                p.kinds = {LdtKind::Determinant};
            else if (*k == "both")
                p.kinds = {LdtKind::Monodromy, LdtKind::Determinant};
            else
                R.error(P + "/kind", "expected monodromy, determinant or both");
        }
        p.threshold = R.number(R.member(o, P, "threshold", false), P + "/threshold");
        return p;
    }
    if (exp == "localize") {
        R.known_keys(o, P, {"n", "l", "I", "gamma", "fit_min_distance", "C_sep", "lyapunov_samples", "snap_to_spectrum"});
        LocalizeParams p;
        p.n = R.int_in(R.member(o, P, "n", false), P + "/n", 2, 4000).value_or(p.n);
        p.l = R.int_in(R.member(o, P, "l", false), P + "/l", 2, 4000).value_or(p.l);
        p.I = R.interval(R.member(o, P, "I", false), P + "/I");
        p.gamma = R.number(R.member(o, P, "gamma", false), P + "/gamma");
        p.fit_min_distance = R.number(R.member(o, P, "fit_min_distance", false), P + "/fit_min_distance");
        p.C_sep = R.number(R.member(o, P, "C_sep", false), P + "/C_sep").value_or(p.C_sep);
        p.lyapunov_samples = samples_of("lyapunov_samples", p.lyapunov_samples);
        p.snap_to_spectrum = R.boolean(R.member(o, P, "snap_to_spectrum", false), P + "/snap_to_spectrum").value_or(false);
        if (p.l > p.n) R.error(P + "/l", "l must not exceed n");
        if (p.I && (p.I->lo < 0 || p.I->hi > p.n - 1)) R.error(P + "/I", "I must lie inside [0, n-1]");
        return p;
    }
    if (exp == "greens") {
        R.known_keys(o, P, {"interval", "row"});
        GreensParams p;
        auto iv = R.interval(R.member(o, P, "interval", true), P + "/interval");
        if (iv) {
            if (iv->length() > 4000) R.error(P + "/interval", "interval longer than 4000 sites");
            p.a = iv->lo;
            p.b = iv->hi;
        }
        p.row = R.int_in(R.member(o, P, "row", false), P + "/row", -1000000, 1000000).value_or(p.a);
        if (iv && !iv->contains(p.row)) R.error(P + "/row", "row must lie inside the interval");
        return p;
    }
    if (exp == "ndr") {
        R.known_keys(o, P, {"interval", "K", "l", "C", "min_component_length", "lyapunov_samples"});
        NdrParams p;
        if (auto iv = R.interval(R.member(o, P, "interval", true), P + "/interval")) p.interval = *iv;
        p.K = R.int_in(R.member(o, P, "K", true), P + "/K", 0, 100000000).value_or(0);
        p.l = R.int_in(R.member(o, P, "l", true), P + "/l", 2, 4000).value_or(2);
        p.C = R.number(R.member(o, P, "C", false), P + "/C").value_or(p.C);
        p.min_component_length = R.number(R.member(o, P, "min_component_length", false), P + "/min_component_length");
        p.lyapunov_samples = samples_of("lyapunov_samples", p.lyapunov_samples);
        return p;
    }
    if (exp == "continue-scales") {
        R.known_keys(o, P, {"base_n", "k_max", "schedule", "j0", "gamma", "lyapunov_samples"});
        ContinueParams p;
        p.base_n = R.int_in(R.member(o, P, "base_n", false), P + "/base_n", 8, 100000).value_or(p.base_n);
        p.k_max = R.int_in(R.member(o, P, "k_max", false), P + "/k_max", 0, 16).value_or(p.k_max);
        if (auto s = R.string(R.member(o, P, "schedule", false), P + "/schedule")) {
            if (*s == "geometric")
                p.schedule = Schedule::Geometric;
            else if (*s == "squaring")
                p.schedule = Schedule::Squaring;
            else
                R.error(P + "/schedule", "expected geometric or squaring");
        }
        if (auto j0 = R.int_in(R.member(o, P, "j0", false), P + "/j0", 0, 1000000)) p.j0 = static_cast<std::size_t>(*j0);
        p.gamma = R.number(R.member(o, P, "gamma", false), P + "/gamma");
        p.lyapunov_samples = samples_of("lyapunov_samples", p.lyapunov_samples);
        try {
            auto sc = continuation_scales(p.base_n, p.k_max, p.schedule);
            if (sc.back() > 2048) R.error(P, "largest scale " + std::to_string(sc.back()) + " exceeds 2048");
        } catch (const Error& e) {
            R.error(P, e.what());
        }
        return p;
    }
    if (exp == "covering") {
        R.known_keys(o, P, {"interval", "radius", "sub_intervals", "lyapunov_samples"});
        CoveringParams p;
        if (auto iv = R.interval(R.member(o, P, "interval", true), P + "/interval")) p.interval = *iv;
        if (p.interval.length() > 4000) R.error(P + "/interval", "interval longer than 4000 sites");
        p.radius = R.int_in(R.member(o, P, "radius", false), P + "/radius", 0, 100000).value_or(p.radius);
        if (const json* subs = R.member(o, P, "sub_intervals", false)) {
            if (!subs->is_array()) {
                R.error(P + "/sub_intervals", "expected an array of {\"m\", \"I\"}");
            } else {
                for (std::size_t i = 0; i < subs->size(); ++i) {
                    const std::string sp = P + "/sub_intervals/" + std::to_string(i);
                    auto m = R.int_in(R.member((*subs)[i], sp, "m", true), sp + "/m", -1000000000, 1000000000);
                    auto I = R.interval(R.member((*subs)[i], sp, "I", true), sp + "/I");
                    if (m && I) p.sub_intervals[*m] = *I;
                }
            }
        }
        p.lyapunov_samples = samples_of("lyapunov_samples", p.lyapunov_samples);
        return p;
    }
    return {};
}

}  // namespace

ConfigLoad parse_config(const std::string& text) {
    ConfigLoad out;
    Reader R;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        out.diagnostics.push_back({true, line_col(text, e.byte), e.what()});
        return out;
    }
    if (!j.is_object()) {
        out.diagnostics.push_back({true, "/", "config must be a JSON object"});
        return out;
    }
    R.known_keys(j, "", {"schema_version", "experiment", "field", "omega", "boundary", "exponents", "z_grid", "scales",
                         "x0", "seed", "output_path", "params"});
    if (auto v = R.integer(R.member(j, "", "schema_version", false), "/schema_version"); v && *v != kSchemaVersion)
        R.error("/schema_version", "unsupported schema version " + std::to_string(*v));
    static const std::vector<std::string> kinds{"lyapunov", "ldt", "localize", "greens", "ndr", "continue-scales",
                                                "covering"};
    auto exp = R.string(R.member(j, "", "experiment", true), "/experiment");
    if (exp && std::find(kinds.begin(), kinds.end(), *exp) == kinds.end()) {
        R.error("/experiment", "unknown experiment \"" + *exp + "\"");
        exp.reset();
    }
    std::optional<VerblunskyField> field;
    if (const json* f = R.member(j, "", "field", true)) field = read_field(R, *f);
    int dim = field ? field->dim() : 0;
    int k_max = 8;
    std::optional<Frequency> omega;
    if (const json* w = R.member(j, "", "omega", true)) omega = read_omega(R, *w, dim, k_max);
    BoundaryPair bc = read_boundary(R, R.member(j, "", "boundary", false));
    LdtExponents ex = read_exponents(R, R.member(j, "", "exponents", false));
    auto zs = read_z_grid(R, R.member(j, "", "z_grid", false));
    std::vector<int> scales;
    if (const json* s = R.member(j, "", "scales", false)) {
        if (!s->is_array()) R.error("/scales", "expected an array of integers");
        else
            for (std::size_t i = 0; i < s->size(); ++i)
                if (auto n = R.int_in(&(*s)[i], "/scales/" + std::to_string(i), 2, 100000)) scales.push_back(*n);
    }
    std::vector<double> x0v;
    if (auto x = R.numbers(R.member(j, "", "x0", false), "/x0")) x0v = *x;
    if (dim > 0 && x0v.empty()) x0v.assign(dim, 0.0);
    if (dim > 0 && static_cast<int>(x0v.size()) != dim) R.error("/x0", "phase has the wrong dimension");
    std::uint64_t seed = 0;
    if (const json* s = R.member(j, "", "seed", false)) {
        if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
            R.error("/seed", "expected a nonnegative integer");
        else
            seed = s->get<std::uint64_t>();
    }
    std::string output_path = exp ? *exp : "report";
    if (auto o = R.string(R.member(j, "", "output_path", false), "/output_path")) {
        if (o->empty() || o->find("..") != std::string::npos)
            R.error("/output_path", "output_path must be a nonempty name without ..");
        else
            output_path = *o;
    }
    std::optional<ExperimentParams> params;
    if (exp) params = read_params(R, *exp, R.member(j, "", "params", false));

    if (exp && (*exp == "lyapunov" || *exp == "ldt")) {
        if (zs.empty()) R.error("/z_grid", "experiment needs at least one spectral point");
        if (scales.empty()) R.error("/scales", "experiment needs at least one scale");
    }
    if (exp && (*exp == "localize" || *exp == "greens" || *exp == "ndr" || *exp == "covering") && zs.empty())
        R.error("/z_grid", "experiment needs at least one spectral point");

    out.diagnostics = R.diags;
    if (R.failed() || !exp || !field || !omega || !params) return out;
    out.config = ExperimentConfig{*exp, System{std::move(*field), std::move(*omega), bc}, k_max, std::move(zs),
                                  std::move(scales), Phase(x0v), ex, seed, output_path, std::move(*params)};
    return out;
}

ConfigLoad load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ConfigLoad out;
        out.diagnostics.push_back({true, path, "cannot open config file"});
        return out;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<Diagnostic> validate_config(const ExperimentConfig& c) {
    std::vector<Diagnostic> d;
    double margin = diophantine_margin(c.system.omega, c.k_max);
    if (margin == 0.0)
        d.push_back({false, "/omega", "zero Diophantine margin at k_max = " + std::to_string(c.k_max)});
    else if (margin < c.system.omega.p)
        d.push_back({false, "/omega",
                     "Diophantine margin " + fmt_double(margin) + " below p = " + fmt_double(c.system.omega.p) +
                         " at k_max = " + std::to_string(c.k_max)});
    if (c.x0.dim() != c.system.omega.dim()) d.push_back({true, "/x0", "phase has the wrong dimension"});
    return d;
}

}  // namespace qcmv
