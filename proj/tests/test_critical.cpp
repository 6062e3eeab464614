#include <cmath>

#include "doctest.h"
#include "nal/critical.hpp"

using namespace nal;

namespace {

double norm2(const std::vector<double>& p) {
    double s = 0;
    for (double v : p) s += v * v;
    return s;
}

}  // namespace

TEST_CASE("critical set of C with the circle action") {
    HamiltonianSpace s = cn_u1(1, 1.0);
    CriticalOptions o;
    auto comps = find_critical_points(s, o);
    REQUIRE(comps.size() == 2);
    CHECK(std::abs(comps[0].critical_value) < 1e-12);
    CHECK(comps[1].critical_value == doctest::Approx(0.25).epsilon(1e-10));
    for (const auto& p : comps[0].representative_points) CHECK(std::abs(norm2(p) - 1.0) < 1e-6);
    for (const auto& p : comps[1].representative_points) CHECK(norm2(p) < 1e-12);
    for (const auto& c : comps)
        for (const auto& p : c.representative_points) {
            CHECK(s.v_mu(p.data()).norm() < c.tolerance);
            CHECK(std::abs(s.mu2(p.data()) - c.critical_value) < 10 * c.tolerance);
        }

    CriticalValues cv = critical_values(comps);
    REQUIRE(cv.values.size() == 2);
    CHECK(std::isnan(cv.probes[0].first));
    CHECK(cv.probes[0].second > 0.0);
    CHECK(cv.probes[0].second < 0.25);
    CHECK(cv.probes[1].first < 0.25);
    CHECK(cv.probes[1].first > cv.probes[0].second - 1e-15);
    CHECK(cv.probes[1].second > 0.25);

    LocalModelReport origin = local_model_check(s, comps[1]);
    CHECK(origin.passed);
    CHECK(origin.dim_x == 2);
    REQUIRE(origin.beta_alpha.size() == 2);  // beta acts invertibly on X = C
    CHECK(local_model_check(s, comps[0]).passed);
}

TEST_CASE("critical set of C^2") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    CriticalOptions o;
    auto comps = find_critical_points(s, o);
    REQUIRE(comps.size() == 2);
    CHECK(std::abs(comps[0].critical_value) < 1e-12);
    CHECK(comps[1].critical_value == doctest::Approx(0.25).epsilon(1e-10));
    for (const auto& c : comps) CHECK(local_model_check(s, c).passed);

    o.r_max = 0.2;
    auto low = find_critical_points(s, o);
    REQUIRE(low.size() == 1);
    CHECK(std::abs(low[0].critical_value) < 1e-12);
}

TEST_CASE("critical set of C^2 with SU(2)") {
    HamiltonianSpace s = c2_su2();
    auto comps = find_critical_points(s, CriticalOptions{});
    REQUIRE(comps.size() == 1);
    CHECK(std::abs(comps[0].critical_value) < 1e-12);
    for (const auto& p : comps[0].representative_points) CHECK(norm2(p) < 1e-12);
    LocalModelReport lm = local_model_check(s, comps[0]);
    CHECK(lm.passed);
    CHECK(lm.dim_k == 3);
}

TEST_CASE("critical values edge cases") {
    CHECK(critical_values({}).values.empty());
    CriticalComponent c;
    c.critical_value = 0.3;
    CriticalValues one = critical_values({c});
    REQUIRE(one.values.size() == 1);
    CHECK(one.probes[0].first < 0.3);
    CHECK(one.probes[0].second > 0.3);
}

TEST_CASE("search is deterministic in the worker count") {
    HamiltonianSpace s = cn_u1(2, 1.0);
    CriticalOptions a, b;
    b.workers = 4;
    auto ca = find_critical_points(s, a), cb = find_critical_points(s, b);
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) {
        CHECK(ca[i].critical_value == cb[i].critical_value);
        CHECK(ca[i].representative_points == cb[i].representative_points);
    }
}
