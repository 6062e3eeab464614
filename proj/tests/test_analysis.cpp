#include <cmath>

#include "doctest.h"
#include "nal/analysis.hpp"
#include "nal/errors.hpp"
#include "nal/reduced.hpp"

using namespace nal;

namespace {

std::vector<double> coarse_grid() { return default_epsilon_grid(12, 0.02, 0.2); }

}  // namespace

TEST_CASE("fit recovers a synthetic polynomial plus tail") {
    auto g = default_epsilon_grid();
    std::vector<cplx> v;
    for (double e : g) v.push_back(2.0 + 3.0 * e + std::exp(-0.125 / e));
    FitReport f = fit_poly_plus_tail(g, v, 2);
    CHECK(f.within_tolerance);
    REQUIRE(f.degree == 1);
    CHECK(std::abs(f.poly_coeffs[0] - 2.0) < 1e-3);
    CHECK(std::abs(f.poly_coeffs[1] - 3.0) < 1e-3);
    CHECK(std::abs(f.tail_rate - 0.125) < 0.1 * 0.125);
    CHECK(f.tail_rate >= 0.0);
    for (double r : f.residuals) CHECK(std::abs(r) <= 1e-5);
}

TEST_CASE("fit of a constant") {
    auto g = default_epsilon_grid();
    std::vector<cplx> v(g.size(), cplx(5.0, -1.0));
    FitReport f = fit_poly_plus_tail(g, v, 1);
    CHECK(f.degree == 0);
    CHECK(std::abs(f.poly_coeffs[0] - cplx(5.0, -1.0)) < 1e-10);
    for (const auto& a : f.tail_amplitudes) CHECK(std::abs(a) < 1e-6);
}

TEST_CASE("degenerate sweeps skip the fit") {
    FitReport f = fit_poly_plus_tail({0.1}, {cplx(1.0)}, 1);
    CHECK(f.skipped);
    CHECK_FALSE(f.note.empty());
}

TEST_CASE("fit rejects a remainder that is not exponentially small") {
    auto g = default_epsilon_grid();
    std::vector<cplx> v;
    for (double e : g) v.push_back(1.0 + std::sqrt(e) * 0.3);
    CHECK_THROWS_AS(fit_poly_plus_tail(g, v, 0), DecompositionError);
}

TEST_CASE("exponential rate fit") {
    auto g = default_epsilon_grid();
    std::vector<double> m;
    for (double e : g) m.push_back(0.7 * std::pow(e, 0.5) * std::exp(-0.3 / e));
    RateFit r = fit_exponential_rate(g, m);
    CHECK(r.rate == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(r.power == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("sweep on C approaches the reduced point value") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    auto g = default_epsilon_grid();
    SweepResult sw = epsilon_sweep(s, one, 0.16, TPolicy{}, g);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs(sw.values[i - 1] - 1.0) < std::abs(sw.values[i] - 1.0));
    FitReport f = fit_poly_plus_tail(g, sw.values, 0);
    CHECK(f.degree == 0);
    CHECK(std::abs(f.poly_coeffs[0] - 1.0) < 1e-3);
    // t = 0 tail of erf(sqrt(r/(2 eps))) decays at rate r/2
    CHECK(std::abs(f.tail_rate - 0.08) < 0.2 * 0.08);

    SweepResult three = epsilon_sweep(s, parse_form("3", s.chart, s.algebra), 0.16, TPolicy{}, {0.05, 0.1});
    SweepResult base = epsilon_sweep(s, one, 0.16, TPolicy{}, {0.05, 0.1});
    for (int i = 0; i < 2; ++i) CHECK(std::abs(three.values[i] - 3.0 * base.values[i]) < 1e-12);
}

TEST_CASE("t extrapolation reaches a plateau") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    TPolicy p;
    p.extrapolate = true;
    SweepResult sw = epsilon_sweep(s, parse_form("1", s.chart, s.algebra), 0.16, p, {0.05, 0.1});
    REQUIRE(sw.limits.size() == 2);
    for (const auto& L : sw.limits) {
        CHECK(L.converged);
        CHECK(L.error < 1e-7);
    }
}

TEST_CASE("contributions on C") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    CriticalOptions co;
    CriticalValues cv = critical_values(find_critical_points(s, co));
    REQUIRE(cv.values.size() == 2);
    auto g = coarse_grid();
    QuadratureSpec q;

    ContributionRecord c1 = contribution(s, one, 1, cv, g, default_t_grid(), q);
    CHECK(c1.probe_shift < 1e-6);
    CHECK(std::abs(c1.rate.rate - 0.125) < 0.2 * 0.125);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(c1.values[i] + 0.5 * std::erfc(1.0 / std::sqrt(8.0 * g[i]))) < 1e-7);

    ContributionRecord c0 = contribution(s, one, 0, cv, {0.02, 0.05}, default_t_grid(), q, 1e-8, false);
    ZeroLevelData L = zero_level(s);
    CHECK(std::abs(c0.values[0] - kirwan_integral(one, L, 0.02).value) < 1e-8);

    // C_0 + C_1 reproduces the large-t Basic Integral above both critical values
    double eps = 0.05;
    ContributionRecord c1e = contribution(s, one, 1, cv, {eps}, default_t_grid(), q, 1e-8, false);
    TLimit big = t_limit(
        [&](double t) {
            BasicIntegralRequest req;
            req.space = &s;
            req.alpha = one;
            req.r = 0.36;
            req.t = t;
            req.epsilon = eps;
            req.critical_values = cv.values;
            return basic_integral(req);
        },
        default_t_grid(), 1e-8);
    CHECK(std::abs(c0.values[1] + c1e.values[0] - big.value) < c0.errors[1] + c1e.errors[0] + big.error + 1e-9);

    ContributionRecord zero = contribution(s, parse_form("0", s.chart, s.algebra), 1, cv, {0.05}, default_t_grid(), q);
    CHECK(zero.values[0] == cplx(0.0));
    CHECK_THROWS_AS(contribution(s, one, 5, cv, {0.05}, default_t_grid(), q), InputError);
}

TEST_CASE("damping between two regular radii") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    DampingReport d = damping_check(s, one, 0.36, 0.16, default_epsilon_grid());
    CHECK(d.passed);
    CHECK(d.slope <= -0.068);
    DampingReport same = damping_check(s, one, 0.16, 0.16, coarse_grid());
    for (double v : same.differences) CHECK(v == 0.0);
    CHECK_THROWS_AS(damping_check(s, one, 0.16, 0.36, coarse_grid()), InputError);
}

TEST_CASE("global convergence in r") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    std::vector<double> rg{0.36, 0.64, 1.0, 2.0};
    GlobalConvergenceReport a = global_convergence_check(s, one, rg, 0.05);
    CHECK(a.converged);
    CHECK(a.limit_shift < 1e-4);
    CHECK(std::abs(a.limit - a.values.back()) < 1e-4);

    GlobalConvergenceReport half = global_convergence_check(s, one, rg, 0.025);
    for (std::size_t k = 0; k < a.increments.size(); ++k) CHECK(half.increments[k] < a.increments[k]);

    SweepOptions loose;
    loose.check_closed = false;
    GlobalConvergenceReport bad = global_convergence_check(s, parse_form("exp((x1^2+y1^2)^3)", s.chart, s.algebra), rg, 0.05, loose);
    CHECK(bad.diverged);
    CHECK_FALSE(bad.converged);
}
