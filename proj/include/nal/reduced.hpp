#pragma once

#include <string>
#include <vector>

#include "nal/integrate.hpp"

namespace nal {

// mu^{-1}(0) of a radial U(1) space, parametrized as the hypersurface S = a.
struct ZeroLevelData {
    const HamiltonianSpace* space = nullptr;
    double level_S = 0.0;
    std::vector<LevelNode> nodes;
    std::vector<double> weights;            // induced Riemannian measure
    std::vector<EquivariantForm> connection;  // A^a, metric connection from the Gram matrix
    std::vector<EquivariantForm> curvature;   // F^a = dA^a (abelian)
    double min_singular_dmu = 0.0;
    int stabilizer_order = 1;
    int reduced_dim = 0;
    // Sign making (P*omega)^m / m! ^ vol_A positive against the level-set parametrization.
    double orientation = 1.0;
    int mesh_order = 0, mesh_angles = 0;
    double volume() const;
};

ZeroLevelData zero_level(const HamiltonianSpace& s, int mesh_density = 8);
std::vector<EquivariantForm> curvature(const ZeroLevelData& level);

// P_A^*: beta -> beta - A ^ i_V beta.
EquivariantForm horizontal_projection(const EquivariantForm& beta, const ZeroLevelData& level);
// phi -> i F_A, then horizontal projection. Result has no phi dependence.
EquivariantForm cartan_map(const EquivariantForm& alpha, const ZeroLevelData& level);
// sqrt(det <,>) A^1 ^ ... ^ A^g.
EquivariantForm vertical_volume(const ZeroLevelData& level);

// max |A(V phi) - phi| over nodes and unit phi.
double connection_residual(const ZeroLevelData& level);
// max |A(g x)(g v) - A(x)(v)| over sampled group elements and tangent vectors.
double connection_equivariance_residual(const ZeroLevelData& level, int samples, unsigned seed = 11);
// max over nodes of |i_{V e_a} beta|.
double horizontality_residual(const EquivariantForm& beta, const ZeroLevelData& level);

// Integral over mu^{-1}(0) of the degree 2n-1 part of a phi-free form, with the level orientation.
IntegralResult integrate_on_level(const EquivariantForm& beta, const ZeroLevelData& level, const QuadratureSpec& q);

struct KirwanResult {
    cplx value;
    std::vector<cplx> coefficients;  // in powers of epsilon
    double error = 0.0;
};
KirwanResult kirwan_integral(const EquivariantForm& alpha, const ZeroLevelData& level, double eps,
                             const QuadratureSpec& q = {});

// (1/2 pi) integral of F_A over the slice theta_1 = 0 of the level set, divided by its
// covering degree of M_red. Needs a two-dimensional reduced space.
struct ChernReport {
    double value = 0.0;
    double error = 0.0;
    int covering = 1;
};
ChernReport chern_number(const ZeroLevelData& level);

struct NormalFormReport {
    bool passed = false;
    double moment_residual = 0.0;
    double closedness_residual = 0.0;
    double restriction_residual = 0.0;  // model at nu = 0 vs P_A^* omega on the level
    double collar_radius = 0.0;         // largest |nu| scanned with nondegenerate model
    double declared_radius = 0.0;
    int samples = 0;
    std::string note;
};
NormalFormReport normal_form_check(const HamiltonianSpace& s, const ZeroLevelData& level, double declared_radius = 0.2,
                                   int samples = 500, unsigned seed = 13);

}  // namespace nal
