#include <cmath>
#include <random>

#include "doctest.h"
#include "nal/hamspace.hpp"
#include "nal/integrate.hpp"
#include "oracles.hpp"

using namespace nal;

namespace {

double max_norm(const EquivariantForm& f, const HamiltonianSpace& s, int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (const auto& p : s.sample_points(n, seed)) {
        CVec phi(s.gdim());
        for (int a = 0; a < s.gdim(); ++a) phi(a) = nd(rng);
        worst = std::max(worst, pointwise_norm(f, p.data(), phi));
    }
    return worst;
}

// Leibniz defect D(a ^ b) - Da ^ b - (-1)^k a_k ^ Db summed over the form-degree parts of a.
EquivariantForm leibniz_defect(const EquivariantForm& a, const EquivariantForm& b, const VectorFieldFamily& v) {
    EquivariantForm r = equivariant_D(wedge(a, b), v) - wedge(equivariant_D(a, v), b);
    for (int k = a.min_form_degree(); k <= a.max_form_degree(); ++k) {
        EquivariantForm ak = a.form_part(k);
        if (ak.is_zero()) continue;
        r = r - wedge(ak, equivariant_D(b, v)) * cplx(k % 2 ? -1.0 : 1.0);
    }
    return r;
}

}  // namespace

TEST_CASE("wedge algebra") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    EquivariantForm d12 = wedge(f("dx1"), f("dy1")), d21 = wedge(f("dy1"), f("dx1"));
    CHECK((d12 + d21).is_zero());
    EquivariantForm beta = f("x1*dx2 + phi*y2*dy1*dx1");
    CHECK((wedge(f("1"), beta) - beta).is_zero());
    CHECK(wedge(f("dx1*dy1"), f("dx1*dx2")).is_zero());
}

TEST_CASE("exterior derivative") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    CHECK(exterior_d(f("3.5 + 2*phi")).is_zero());
    CHECK((exterior_d(f("x1*dy1")) - f("dx1*dy1")).is_zero());
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        EquivariantForm g = oracle::random_invariant_form(s, rng);
        CHECK(max_norm(exterior_d(exterior_d(g)), s, 100, 3 + trial) < 1e-10);
    }
    EquivariantForm poly = f("x1^3*y2 - 2*x2*y1^2 + 0.5*x1*x2*y1*y2");
    CHECK(max_norm(exterior_d(exterior_d(poly)), s, 100, 9) < 1e-12);
}

TEST_CASE("contraction") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    VectorFieldFamily v;
    v.chart_id = s.chart.id;
    v.ambient_dim = 2;
    v.comps = {{Expr(1.0), Expr(0.0)}};  // V phi = phi d/dx1
    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    CHECK((contract(f("dx1"), v) - f("phi")).is_zero());
    CHECK(contract(f("1 + x1^2"), v).is_zero());
    // Contracting twice with the same phi-linear field: pointwise, i_V i_V = 0 for each fixed phi.
    EquivariantForm twice = contract(contract(f("dx1*dy1"), s.action), s.action);
    CHECK(max_norm(twice, s, 50, 4) < 1e-14);
}

TEST_CASE("equivariant derivative") {
    for (int n : {1, 2}) {
        HamiltonianSpace s = cn_u1(n, 1.0);
        CHECK(equivariant_D(parse_form("1", s.chart, s.algebra), s.action).is_zero());
        EquivariantForm sym = s.omega;
        for (int a = 0; a < s.gdim(); ++a)
            sym = sym + EquivariantForm::phi(s.chart.id, s.dim(), s.gdim(), a) * s.moment_star[a] * cplx(0.0, 1.0);
        CHECK(sym.grade() == 2);
        CHECK(max_norm(equivariant_D(sym, s.action), s, 100, 8) < 1e-10);
    }
    HamiltonianSpace s = cn_u1(2, 1.0);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        EquivariantForm g = oracle::random_invariant_form(s, rng);
        CHECK(invariance_residual(g, s.action, s.algebra, s.sample_points(20, 2), 3, 4) < 1e-12);
        EquivariantForm dd = equivariant_D(equivariant_D(g, s.action), s.action);
        CHECK(max_norm(dd, s, 40, 21 + trial) < 1e-10);
        EquivariantForm h = oracle::random_invariant_form(s, rng);
        CHECK(max_norm(leibniz_defect(g, h, s.action), s, 40, 31 + trial) < 1e-10);
    }
}

TEST_CASE("D squared fails on a non-invariant form") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm g = parse_form("x1^2", s.chart, s.algebra);
    EquivariantForm dd = equivariant_D(equivariant_D(g, s.action), s.action);
    CHECK(max_norm(dd, s, 40, 2) > 1e-3);
}

TEST_CASE("exponential of the form part") {
    HamiltonianSpace s1 = cn_u1(1, 1.0);
    EquivariantForm zero(s1.chart.id, 2, 1);
    CHECK((exp_form_part(zero) - parse_form("1", s1.chart, s1.algebra)).is_zero());
    CHECK((exp_form_part(s1.omega) - (parse_form("1", s1.chart, s1.algebra) + s1.omega)).is_zero());

    HamiltonianSpace s2 = cn_u1(2, 1.0);
    EquivariantForm one = parse_form("1", s2.chart, s2.algebra);
    EquivariantForm expected = one + s2.omega + wedge(s2.omega, s2.omega) * cplx(0.5);
    CHECK(max_norm(exp_form_part(s2.omega) - expected, s2, 20, 1) < 1e-14);

    // Top coefficient of exp(omega) over the unit box: tensor Gauss-Legendre, volume 1.
    EquivariantForm top = exp_form_part(s2.omega).form_part(4);
    std::vector<double> x, w;
    gauss_legendre01(3, x, w);
    cplx sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    double p[4] = {x[i], x[j], x[k], x[l]};
                    sum += w[i] * w[j] * w[k] * w[l] * top.evaluate(p, CVec::Zero(1))[15];
                }
    CHECK(std::abs(sum - 1.0) < 1e-13);
}

TEST_CASE("grading and storage") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    EquivariantForm a = parse_form("x1*dx1*dy1 + phi", s.chart, s.algebra);
    CHECK(a.grade() == 2);
    CHECK(parse_form("dx1 + phi", s.chart, s.algebra).grade() == -1);
    EquivariantForm z = a - a;
    CHECK(z.is_zero());
    EquivariantForm sw = parse_form("dy1*dx1", s.chart, s.algebra);
    for (const auto& t : sw.term_list()) CHECK(std::abs(t.coeff.const_value() + 1.0) < 1e-15);
}
