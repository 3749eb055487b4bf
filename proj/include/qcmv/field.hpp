#pragma once

#include <map>
#include <vector>

#include "json.hpp"

#include "qcmv/common.hpp"
#include "qcmv/torus.hpp"

namespace qcmv {

using Mode = std::vector<int>;

int l1_norm(const Mode& k);

// Finite Fourier series sum_k c_k e^{2 pi i k.x} on T^d.
struct TrigPolynomial {
    int dim = 1;
    std::map<Mode, cplx> coeffs;  // zero coefficients are never stored

    TrigPolynomial() = default;
    explicit TrigPolynomial(int d) : dim(d) {}
    void add(const Mode& k, cplx c);
    int degree() const;  // max |k|_1, 0 when empty
    cplx operator()(const Phase& x) const;
};

class VerblunskyField {
public:
    VerblunskyField(TrigPolynomial poly, double h);

    const TrigPolynomial& poly() const { return poly_; }
    int dim() const { return poly_.dim; }
    double h() const { return h_; }
    // sum_k |c_k| e^{2 pi |k| h}; an upper bound for |alpha| on the strip
    double certificate() const { return sup_norm_h_; }
    double sup_norm_h() const { return sup_norm_h_; }
    double c_alpha() const { return c_alpha_; }

    cplx evaluate(const Phase& x) const;
    double rho(const Phase& x) const;

    static double certificate_of(const TrigPolynomial& p, double h);

private:
    TrigPolynomial poly_;
    double h_;
    double sup_norm_h_;
    double c_alpha_;
};

VerblunskyField constant_field(int d, cplx c, double h = 1.0);

double rho_of(cplx a);

struct Truncation {
    TrigPolynomial poly;
    int degree_cap = 0;
    double error = 0.0;  // sum of dropped |c_k|, bounds sup|alpha - truncated|
};

Truncation truncate_degree(const VerblunskyField& f, int cap);
// Degree cap C*n^4, target error e^{-n^2}.
Truncation truncate(const VerblunskyField& f, int n, double C = 1.0);

// Tensor-grid quadrature of the integral of log(1 - |alpha|) over T^d.
double log_integrability(const VerblunskyField& f, int grid_size);

VerblunskyField field_from_json(const nlohmann::json& j);
nlohmann::json field_to_json(const VerblunskyField& f);

}  // namespace qcmv
