#pragma once

#include <map>
#include <string>
#include <vector>

#include "nal/exterior.hpp"
#include "nal/expr.hpp"
#include "nal/liealg.hpp"

namespace nal {

struct Chart {
    std::string id;
    std::vector<std::string> coords;
    int dim() const { return static_cast<int>(coords.size()); }
};

struct FormKey {
    Mask mask = 0;
    PhiMonomial mono;
    bool operator<(const FormKey& o) const {
        if (mask != o.mask) return mask < o.mask;
        return mono < o.mono;
    }
};

struct FormTerm {
    Mask mask;
    PhiMonomial mono;
    Expr coeff;
};

class EquivariantForm {
public:
    EquivariantForm() = default;
    EquivariantForm(std::string chart_id, int ambient_dim, int phi_dim)
        : chart_id_(std::move(chart_id)), ambient_dim_(ambient_dim), phi_dim_(phi_dim) {}

    static EquivariantForm scalar(const std::string& chart, int n, int g, const Expr& f);
    static EquivariantForm dx(const std::string& chart, int n, int g, int k);
    static EquivariantForm phi(const std::string& chart, int n, int g, int a);

    const std::string& chart_id() const { return chart_id_; }
    int ambient_dim() const { return ambient_dim_; }
    int phi_dim() const { return phi_dim_; }
    const std::map<FormKey, Expr>& terms() const { return terms_; }
    std::vector<FormTerm> term_list() const;
    bool is_zero() const { return terms_.empty(); }

    void add_term(Mask mask, const PhiMonomial& mono, const Expr& c);

    int max_form_degree() const;
    int min_form_degree() const;
    int max_phi_degree() const;
    // Grade of a homogeneous form; -1 if terms have mixed grades.
    int grade() const;
    // Pure scalar: every term has empty mask and constant-one phi monomial.
    bool is_scalar_field() const;
    Expr scalar_field() const;

    EquivariantForm operator+(const EquivariantForm& o) const;
    EquivariantForm operator-(const EquivariantForm& o) const;
    EquivariantForm operator*(const Expr& s) const;
    EquivariantForm operator*(cplx s) const;
    EquivariantForm form_part(int degree) const;

    // Dense exterior-algebra value at a chart point with phi substituted.
    Dense evaluate(const double* x, const CVec& phi) const;
    std::string str(const Chart& chart, const std::vector<std::string>& phi_names) const;

private:
    std::string chart_id_;
    int ambient_dim_ = 0;
    int phi_dim_ = 0;
    std::map<FormKey, Expr> terms_;
};

struct VectorFieldFamily {
    std::string chart_id;
    int ambient_dim = 0;
    std::vector<std::vector<Expr>> comps;  // comps[a][k]: component k of V e_a
    int phi_dim() const { return static_cast<int>(comps.size()); }
    Vec at(const double* x, const Vec& phi) const;
    Mat matrix_at(const double* x) const;  // column a is V e_a
};

EquivariantForm wedge(const EquivariantForm& a, const EquivariantForm& b);
EquivariantForm exterior_d(const EquivariantForm& a);
EquivariantForm contract(const EquivariantForm& a, const VectorFieldFamily& v);
EquivariantForm contract_field(const EquivariantForm& a, const std::vector<Expr>& field);
EquivariantForm equivariant_D(const EquivariantForm& a, const VectorFieldFamily& v);
EquivariantForm exp_form_part(const EquivariantForm& a);
// Lie derivative along the single field V e_a, with phi a spectator.
EquivariantForm lie_derivative(const EquivariantForm& a, const std::vector<Expr>& field);
// Infinitesimal invariance including the coadjoint action on phi.
double invariance_residual(const EquivariantForm& a, const VectorFieldFamily& v, const LieAlgebraSpec& g,
                           const std::vector<std::vector<double>>& points, int n_phi, unsigned seed);
double pointwise_norm(const EquivariantForm& a, const double* x, const CVec& phi);

// Parses expressions over chart coordinates, d<coord> one-forms, phi components
// (phi1..phik or phi_<label>), i, pi, + - * / ^ and exp/log/sqrt/sin/cos.
EquivariantForm parse_form(const std::string& text, const Chart& chart, const LieAlgebraSpec& g);
Expr parse_scalar(const std::string& text, const Chart& chart);

}  // namespace nal
