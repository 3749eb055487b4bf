#include "qcmv/field.hpp"

#include "json.hpp"

namespace qcmv {

int l1_norm(const Mode& k) {
    int s = 0;
    for (int v : k) s += std::abs(v);
    return s;
}

void TrigPolynomial::add(const Mode& k, cplx c) {
    if (static_cast<int>(k.size()) != dim) throw Error(ErrorCode::InvalidArgument, "mode has wrong dimension");
    cplx& slot = coeffs[k];
    slot += c;
    if (slot == cplx{}) coeffs.erase(k);
}

int TrigPolynomial::degree() const {
    int d = 0;
    for (const auto& [k, c] : coeffs) d = std::max(d, l1_norm(k));
    return d;
}

cplx TrigPolynomial::operator()(const Phase& x) const {
    cplx s{};
    for (const auto& [k, c] : coeffs) {
        double re = 0.0, im = 0.0;
        for (int i = 0; i < dim; ++i) {
            re += k[i] * x.x[i];
            if (!x.y.empty()) im += k[i] * x.y[i];
        }
        // e^{2 pi i k.(x+iy)}
        s += c * std::exp(-kTwoPi * im) * std::polar(1.0, kTwoPi * re);
    }
    return s;
}

double VerblunskyField::certificate_of(const TrigPolynomial& p, double h) {
    double s = 0.0;
    for (const auto& [k, c] : p.coeffs) s += std::abs(c) * std::exp(kTwoPi * l1_norm(k) * h);
    return s;
}

VerblunskyField::VerblunskyField(TrigPolynomial poly, double h) : poly_(std::move(poly)), h_(h) {
    if (!(h > 0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "h must be positive");
    if (poly_.dim < 1) throw Error(ErrorCode::InvalidArgument, "field dimension must be positive");
    sup_norm_h_ = certificate_of(poly_, h_);
    if (!(sup_norm_h_ < 1.0))
        throw Error(ErrorCode::InvalidArgument,
                    "coefficient certificate " + std::to_string(sup_norm_h_) + " is not below 1");
    c_alpha_ = std::log(2.0 / std::sqrt(1.0 - sup_norm_h_ * sup_norm_h_));
}

cplx VerblunskyField::evaluate(const Phase& x) const {
    if (static_cast<int>(x.dim()) != dim()) throw Error(ErrorCode::InvalidArgument, "phase has wrong dimension");
    for (double y : x.y)
        if (std::abs(y) >= h_) throw Error(ErrorCode::OutOfStrip, "|y| must stay below h");
    return poly_(x);
}

double rho_of(cplx a) {
    double m = std::abs(a);
    if (m >= 1.0) return 0.0;
    return std::sqrt((1.0 - m) * (1.0 + m));
}

double VerblunskyField::rho(const Phase& x) const { return rho_of(evaluate(x)); }

VerblunskyField constant_field(int d, cplx c, double h) {
    TrigPolynomial p(d);
    p.add(Mode(d, 0), c);
    return VerblunskyField(std::move(p), h);
}

Truncation truncate_degree(const VerblunskyField& f, int cap) {
    Truncation t;
    t.poly = TrigPolynomial(f.dim());
    t.degree_cap = cap;
    for (const auto& [k, c] : f.poly().coeffs) {
        if (l1_norm(k) <= cap)
            t.poly.coeffs.emplace(k, c);
        else
            t.error += std::abs(c);
    }
    return t;
}

Truncation truncate(const VerblunskyField& f, int n, double C) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    double cap_real = C * std::pow(static_cast<double>(n), 4);
    int cap = cap_real > 1e9 ? 1000000000 : static_cast<int>(std::floor(cap_real));
    Truncation t = truncate_degree(f, cap);
    double target = std::exp(-static_cast<double>(n) * n);
    if (t.error > target)
        throw Error(ErrorCode::AccuracyUnreachable,
                    "achieved error " + std::to_string(t.error) + " at degree " + std::to_string(cap));
    return t;
}

double log_integrability(const VerblunskyField& f, int grid_size) {
    if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be at least 2");
    const int d = f.dim();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(grid_size);
    std::vector<double> vals(total);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(total); ++idx) {
        std::vector<double> x(d);
        std::size_t r = static_cast<std::size_t>(idx);
        for (int i = 0; i < d; ++i) {
            x[i] = static_cast<double>(r % grid_size) / grid_size;
            r /= grid_size;
        }
        vals[idx] = std::log1p(-std::abs(f.poly()(Phase(std::move(x)))));
    }
    return pairwise_sum(vals) / static_cast<double>(total);
}

VerblunskyField field_from_json(const nlohmann::json& j) {
    double h = j.at("h").get<double>();
    const auto& cs = j.at("coeffs");
    int d = j.contains("d") ? j.at("d").get<int>() : 0;
    if (d == 0) {
        if (cs.empty()) throw Error(ErrorCode::InvalidArgument, "field dimension unknown: give \"d\" or a coefficient");
        d = static_cast<int>(cs.at(0).at("k").size());
    }
    TrigPolynomial p(d);
    for (const auto& c : cs) {
        Mode k = c.at("k").get<Mode>();
        p.add(k, cplx{c.value("re", 0.0), c.value("im", 0.0)});
    }
    return VerblunskyField(std::move(p), h);
}

nlohmann::json field_to_json(const VerblunskyField& f) {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& [k, c] : f.poly().coeffs) cs.push_back({{"k", k}, {"re", c.real()}, {"im", c.imag()}});
    return {{"h", f.h()}, {"d", f.dim()}, {"coeffs", cs}};
}

}  // namespace qcmv
