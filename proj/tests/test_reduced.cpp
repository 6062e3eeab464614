#include <cmath>

#include "doctest.h"
#include "nal/errors.hpp"
#include "nal/reduced.hpp"

using namespace nal;

namespace {

double max_on_level(const EquivariantForm& f, const ZeroLevelData& level) {
    double worst = 0.0;
    CVec phi = CVec::Zero(level.space->gdim());
    for (const auto& n : level.nodes) worst = std::max(worst, pointwise_norm(f, n.x.data(), phi));
    return worst;
}

EquivariantForm equivariant_symplectic(const HamiltonianSpace& s) {
    EquivariantForm sym = s.omega;
    for (int a = 0; a < s.gdim(); ++a)
        sym = sym + EquivariantForm::phi(s.chart.id, s.dim(), s.gdim(), a) * s.moment_star[a] * cplx(0.0, 1.0);
    return sym;
}

}  // namespace

TEST_CASE("zero level of C is the unit circle") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    ZeroLevelData L = zero_level(s);
    CHECK(L.reduced_dim == 0);
    for (const auto& n : L.nodes) CHECK(std::abs(n.x[0] * n.x[0] + n.x[1] * n.x[1] - 1.0) < 1e-14);
    CHECK(L.volume() == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
    // A = (x dy - y dx) / |z|^2 for the unit rotation field
    for (const auto& n : L.nodes) {
        Dense a = L.connection[0].evaluate(n.x.data(), CVec::Zero(1));
        CHECK(std::abs(a[1] - (-n.x[1])) < 1e-14);
        CHECK(std::abs(a[2] - n.x[0]) < 1e-14);
    }
    CHECK(connection_residual(L) < 1e-10);
    KirwanResult k = kirwan_integral(parse_form("1", s.chart, s.algebra), L, 0.07);
    CHECK(std::abs(k.value - 1.0) < 1e-12);
}

TEST_CASE("Hopf bundle over the reduced sphere") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    ZeroLevelData L = zero_level(s);
    CHECK(L.reduced_dim == 2);
    CHECK(L.stabilizer_order == 1);
    CHECK(L.min_singular_dmu > 1e-6);
    CHECK(L.volume() == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-10));  // unit 3-sphere
    CHECK(connection_residual(L) < 1e-10);
    CHECK(connection_equivariance_residual(L, 50) < 1e-8);
    CHECK(horizontality_residual(L.curvature[0], L) < 1e-10);

    ChernReport ch = chern_number(L);
    CHECK(std::abs(ch.value - std::round(ch.value)) < 1e-6);
    CHECK(std::abs(std::abs(ch.value) - 1.0) < 1e-6);

    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    for (double eps : {0.02, 0.2}) {
        KirwanResult one = kirwan_integral(f("1"), L, eps);
        CHECK(std::abs(one.value - M_PI) < 1e-9);  // area pi of the reduced sphere
        KirwanResult ph = kirwan_integral(f("phi"), L, eps);
        CHECK(std::abs(ph.value - cplx(0.0, 2.0 * M_PI * ch.value)) < 1e-9);
    }
}

TEST_CASE("Cartan map") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    ZeroLevelData L = zero_level(s);
    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    EquivariantForm one = cartan_map(f("1"), L);
    CHECK(max_on_level(one - f("1"), L) < 1e-14);
    EquivariantForm ph = cartan_map(f("phi"), L);
    CHECK(max_on_level(ph - horizontal_projection(L.curvature[0], L) * cplx(0.0, 1.0), L) < 1e-12);
    CHECK(horizontality_residual(ph, L) < 1e-10);
    // omega + i mu phi goes to the pullback of the reduced form since mu = 0 on the level
    EquivariantForm red = cartan_map(equivariant_symplectic(s), L);
    CHECK(max_on_level(red - horizontal_projection(s.omega, L), L) < 1e-12);
    CHECK(horizontality_residual(red, L) < 1e-10);
}

TEST_CASE("higher-dimensional reduced space") {
    HamiltonianSpace s = cn_u1(3, 1.0);
    ZeroLevelData L = zero_level(s);
    CHECK(L.reduced_dim == 4);
    auto f = [&](const char* t) { return parse_form(t, s.chart, s.algebra); };
    double eps = 0.05;
    KirwanResult one = kirwan_integral(f("1"), L, eps);
    // CP^2 of area normalization pi: volume pi^2/2 plus the <F^F> correction linear in eps
    CHECK(std::abs(one.value - 0.5 * M_PI * M_PI * (1.0 + 4.0 * eps)) < 1e-8);
    REQUIRE(one.coefficients.size() == 2);
    KirwanResult sq = kirwan_integral(f("phi^2"), L, eps);
    CHECK(std::abs(sq.value - (-4.0 * M_PI * M_PI)) < 1e-8);
}

TEST_CASE("orbifold quotient from weights (1, 2)") {
    HamiltonianSpace s = weighted_cn_u1({1, 2}, 1.0);
    ZeroLevelData L = zero_level(s);
    CHECK(L.stabilizer_order == 1);
    KirwanResult one = kirwan_integral(parse_form("1", s.chart, s.algebra), L, 0.1);
    CHECK(std::abs(one.value - M_PI / 2.0) < 1e-8);
    ChernReport ch = chern_number(L);
    CHECK(std::abs(ch.value - 0.5) < 1e-6);
}

TEST_CASE("normal form near the zero level") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    ZeroLevelData L = zero_level(s);
    NormalFormReport nf = normal_form_check(s, L, 0.2, 500);
    CHECK(nf.passed);
    CHECK(nf.moment_residual < 1e-10);
    CHECK(nf.restriction_residual < 1e-10);
    CHECK(nf.collar_radius >= 0.2);
}

TEST_CASE("non-regular zero level") {
    CHECK_THROWS_AS(zero_level(c2_su2()), NotRegularError);
}
