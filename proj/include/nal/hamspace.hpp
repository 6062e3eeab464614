#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nal/forms.hpp"
#include "nal/liealg.hpp"

namespace nal {

using ExprVec = std::vector<Expr>;
using ExprMat = std::vector<std::vector<Expr>>;

// Moment maps depending on the point only through s_j = x_j^2 + y_j^2.
struct RadialModel {
    enum class Kind { U1Linear, SU2Quadratic };
    Kind kind = Kind::U1Linear;
    std::vector<double> weights;  // U1Linear: mu* = (sum w_j s_j - a)/2
    double a = 0.0;
    int pairs() const { return static_cast<int>(weights.size()); }
    // |mu|^2 as a function of S = sum w_j s_j.
    double mu2(double S) const;
    // Range of S with |mu|^2 <= r.
    std::pair<double, double> s_range(double r) const;
};

struct HamiltonianSpace {
    std::string name;
    LieAlgebraSpec algebra;
    Chart chart;
    EquivariantForm omega;
    VectorFieldFamily action;
    ExprVec moment_star;
    // Linear actions: V e_a at x equals generators[a] * x.
    std::vector<Mat> linear_generators;
    std::optional<RadialModel> radial;
    bool euclidean_metric = true;
    bool zero_regular = false;
    int generic_stabilizer = 1;
    // Sampling box half widths per coordinate.
    Vec sample_halfwidth;
    // Coordinates whose Euclidean norm must stay below chart_radius (exponential charts).
    std::vector<int> chart_radius_coords;
    double chart_radius = std::numeric_limits<double>::infinity();

    int dim() const { return chart.dim(); }
    int gdim() const { return algebra.dim; }

    Mat omega_matrix(const double* x) const;
    Vec moment(const double* x) const;
    double mu2(const double* x) const;
    Mat moment_jacobian(const double* x) const;  // rows: algebra index, cols: coordinates
    // Compatible metric: Euclidean when omega is constant standard, otherwise the polar part of omega.
    Mat metric(const double* x) const;
    Mat complex_structure(const double* x) const;
    Vec v_mu(const double* x) const;  // V applied to mu*
    bool in_chart(const double* x) const;
    // Finite group action for linear spaces.
    Vec act(const Vec& xi, const Vec& x) const;
    Mat act_matrix(const Vec& xi) const;

    std::vector<std::vector<double>> sample_points(int count, unsigned seed) const;
};

struct MomentReport {
    double max_residual = 0.0;
    int samples = 0;
    bool passed = false;
};

MomentReport check_moment_condition(const HamiltonianSpace& s, int n_samples, unsigned seed = 7);
double closedness_residual(const HamiltonianSpace& s, int n_samples, unsigned seed = 7);
double min_abs_det_omega(const HamiltonianSpace& s, int n_samples, unsigned seed = 7);
double compatibility_residual(const HamiltonianSpace& s, int n_samples, unsigned seed = 7);
// Pullback residuals of omega, |mu|^2 and lambda under random group elements (linear actions only).
struct InvarianceReport {
    double omega = 0.0;
    double mu2 = 0.0;
    double lambda = 0.0;
};
InvarianceReport group_invariance(const HamiltonianSpace& s, int n_samples, unsigned seed = 7);

// lambda = <V mu*, .>_M as a one-form; exact expressions for Euclidean-metric spaces.
EquivariantForm lambda_form(const HamiltonianSpace& s);
Vec lambda_at(const HamiltonianSpace& s, const double* x);

struct StandardLocalModel {
    LieAlgebraSpec g;
    Mat k_basis;  // columns: basis of k inside g
    Mat h_basis;  // columns: basis of h inside g (subspace of k)
    Vec beta;
    Mat omega_x;                 // antisymmetric 2m x 2m
    std::vector<Mat> x_generators;  // one per h basis vector: V_eta on X is x -> M x
    void validate() const;
};

struct StandardModelSpaces {
    HamiltonianSpace g_space;
    HamiltonianSpace h_space;
};

StandardModelSpaces build_standard_model(const StandardLocalModel& m);

// Catalog entries: cn_u1, weighted_cn_u1, c2_su2, standard_model, custom. A corrupt_delta
// parameter wraps the result in corrupt_moment.
HamiltonianSpace catalog(const std::string& name, const KeyValues& params);
// Symbolic space: algebra, coords, omega, action_<k> (comma-separated components), moment_<k>, halfwidth.
HamiltonianSpace custom_space(const KeyValues& kv);
HamiltonianSpace cn_u1(int n, double a);
HamiltonianSpace weighted_cn_u1(const std::vector<int>& weights, double a);
HamiltonianSpace c2_su2();
StandardLocalModel standard_model_preset(const KeyValues& params);

// Same space with mu* perturbed by delta in the x-dependence of component 0 (negative control).
HamiltonianSpace corrupt_moment(const HamiltonianSpace& s, double delta);

std::string param(const KeyValues& kv, const std::string& key, const std::string& fallback = "");

}  // namespace nal
