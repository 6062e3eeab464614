#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nal/hamspace.hpp"

namespace nal {

struct QuadratureSpec {
    std::string scheme = "auto";  // auto | radial | box
    double tolerance = 1e-8;      // relative
    double abs_floor = 1e-15;
    int angle_points = 8;
    int simplex_order = 4;
    int box_order = 12;
    int max_panels = 4000;
    int workers = 1;
};

struct IntegralResult {
    cplx value{0.0, 0.0};
    double error = 0.0;
    long nodes = 0;
    double wall_time = 0.0;
};

// Pointwise integrand of the Basic Integral after the closed-form phi integration.
class BasicIntegrand {
public:
    BasicIntegrand(const HamiltonianSpace& s, const EquivariantForm& alpha, double t, double eps);
    // Coefficient of dx_1 ^ ... ^ dx_2n (chart order).
    cplx top(const double* x) const;
    // All components of the ordinary form at x.
    Dense full(const double* x) const;
    // Shift m = mu* + t G^{-1} <V mu*, V e_a>.
    Vec shift(const double* x) const;

private:
    struct Term {
        Mask mask;
        int mono_id;
        int coeff_slot;
    };
    void eval_point(const double* x, std::vector<cplx>& out) const;
    void two_form(const std::vector<cplx>& out, std::vector<cplx>& omega) const;
    Vec shift_from(const std::vector<cplx>& out) const;

    const HamiltonianSpace& s_;
    double t_, eps_;
    int n_, g_;
    Program prog_;
    std::vector<Term> terms_;
    std::vector<PhiMonomial> monos_;
    std::vector<std::pair<int, int>> omega_slots_;  // (i*n+j, slot)
    int mu_slot_, w_slot_, dw_slot_, v_slot_;
    GaussianTable table_;
    Mat ip_inv_;
};

using TopFn = std::function<cplx(const double*)>;

// Integral over M_r = {|mu|^2 <= r} with the symplectic orientation.
IntegralResult integrate_top(const HamiltonianSpace& s, const TopFn& f, double r, const QuadratureSpec& q);
IntegralResult integrate_over_Mr(const HamiltonianSpace& s, const EquivariantForm& form, double r, const QuadratureSpec& q);

// Integral of the degree 2n-1 part over the boundary of M_r, oriented outward-first.
using FormFn = std::function<Dense(const double*)>;
IntegralResult integrate_boundary(const HamiltonianSpace& s, const FormFn& f, double r, const QuadratureSpec& q);

// Nodes on the hypersurface {S = const} of a radial model, parametrized by simplex
// coordinates u and angles theta. frame columns: d/du_k (k < pairs-1), then d/dtheta_j.
struct LevelNode {
    std::vector<double> x, u, theta;
    Mat frame;
    Vec dS;
    double weight = 0.0;  // parameter-space quadrature weight
    double orient = 1.0;  // sign of det[dx/dS, frame]
};
LevelNode radial_level_point(const RadialModel& rm, double S, const std::vector<double>& u, const std::vector<double>& theta);
std::vector<LevelNode> radial_level_nodes(const RadialModel& rm, double S, int order, int angles);
// Degree-k part of a dense form evaluated on the k columns of frame.
cplx pullback_top(const Dense& form, const Mat& frame);
// Integral of the degree 2n-1 part over {S = const}, oriented with dS first.
IntegralResult integrate_level_set(const HamiltonianSpace& s, double S, const FormFn& f, const QuadratureSpec& q);

struct BasicIntegralRequest {
    const HamiltonianSpace* space = nullptr;
    EquivariantForm alpha;
    double r = 0.0;
    double t = 0.0;
    double epsilon = 0.1;
    QuadratureSpec quadrature;
    // Known critical values skip the critical-point search used for the regularity check.
    std::optional<std::vector<double>> critical_values;
    bool check_regular = true;
    bool check_closed = true;
};

double integral_constant(const LieAlgebraSpec& g);  // vol(G) (2 pi)^dim G
IntegralResult basic_integral(const BasicIntegralRequest& req);

// max |D alpha| over sampled (point, phi).
double closedness_defect(const HamiltonianSpace& s, const EquivariantForm& alpha, int n_samples, unsigned seed = 3);

// Gauss-Legendre rule on [0, 1].
void gauss_legendre01(int order, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace nal
