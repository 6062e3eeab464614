#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.

#include <cmath>
#include <random>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nal/liealg.hpp"

namespace oracle {

using nal::cplx;

// Integral of phi^mono exp(i <m, phi> - eps/2 |phi|^2) by adaptive quadrature per coordinate.
// Needs a diagonal inner product, so each monomial factorizes.
inline cplx direct_phi_monomial(const nal::LieAlgebraSpec& a, const nal::PhiMonomial& mono, const nal::Vec& m, double eps) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    cplx prod = 1.0;
    for (int k = 0; k < a.dim; ++k) {
        for (int j = 0; j < a.dim; ++j)
            if (j != k && a.inner_product(k, j) != 0.0) throw std::invalid_argument("oracle needs a diagonal metric");
        double g = a.inner_product(k, k);
        double freq = g * m(k);
        int p = mono[k];
        double L = std::sqrt(2.0 * 45.0 / (eps * g));
        auto re = [&](double f) { return std::pow(f, p) * std::cos(freq * f) * std::exp(-0.5 * eps * g * f * f); };
        auto im = [&](double f) { return std::pow(f, p) * std::sin(freq * f) * std::exp(-0.5 * eps * g * f * f); };
        double r = GK::integrate(re, -L, L, 20, 1e-15);
        double i = GK::integrate(im, -L, L, 20, 1e-15);
        prod *= cplx(r, i);
    }
    return prod;
}

inline cplx direct_phi_integral(const nal::LieAlgebraSpec& a, const nal::PhiPolynomial& p, const nal::Vec& m, double eps) {
    cplx s = 0.0;
    for (const auto& [mono, c] : p.terms()) s += c * direct_phi_monomial(a, mono, m, eps);
    return s;
}

// Random polynomial with complex coefficients and total degree <= deg.
inline nal::PhiPolynomial random_phi_poly(int dim, int deg, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> ud(0, deg);
    nal::PhiPolynomial p(dim);
    for (int t = 0; t < 4; ++t) {
        nal::PhiMonomial mono(dim, 0);
        int left = ud(rng);
        for (int k = 0; k < dim && left > 0; ++k) {
            std::uniform_int_distribution<int> take(0, left);
            mono[k] = k + 1 == dim ? left : take(rng);
            left -= mono[k];
        }
        p.add_term(mono, cplx(nd(rng), nd(rng)));
    }
    return p;
}

// Abelian algebra of rank d with a random diagonal metric.
inline nal::LieAlgebraSpec diagonal_torus(int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(0.5, 2.0);
    nal::LieAlgebraSpec a = nal::builtin_algebra("torus(" + std::to_string(d) + ")");
    for (int k = 0; k < d; ++k) a.inner_product(k, k) = ud(rng);
    a.name = "diag";
    return a;
}

}  // namespace oracle

#include "nal/hamspace.hpp"

namespace oracle {

// Random U(1)-invariant equivariant form on cn_u1(2, a) built from invariant functions,
// invariant forms and powers of phi.
inline nal::EquivariantForm random_invariant_form(const nal::HamiltonianSpace& s, std::mt19937_64& rng,
                                                  int form_degree = -1) {
    static const char* funcs[] = {"1", "(x1^2+y1^2)", "(x1*x2+y1*y2)", "(x1*y2-y1*x2)", "(x2^2+y2^2)^2", "exp(-(x1^2+y1^2))"};
    static const char* forms0[] = {"1"};
    static const char* forms1[] = {"(x1*dy1-y1*dx1)", "(x1*dx2+y1*dy2)", "(x1*dy2-y1*dx2)", "(x2*dx2+y2*dy2)"};
    static const char* forms2[] = {"dx1*dy1", "(dx1*dx2+dy1*dy2)", "(dy1*dx2-dx1*dy2)", "dx2*dy2"};
    static const char* phis[] = {"1", "phi", "phi^2"};
    std::uniform_int_distribution<int> pick(0, 1 << 20);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::string text;
    for (int t = 0; t < 4; ++t) {
        int deg = form_degree >= 0 ? form_degree : pick(rng) % 3;
        const char* f = funcs[pick(rng) % 6];
        const char* b = deg == 0 ? forms0[0] : deg == 1 ? forms1[pick(rng) % 4] : forms2[pick(rng) % 4];
        const char* p = phis[pick(rng) % 3];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%.6f", t ? " + " : "", coef(rng));
        text += std::string(buf) + "*" + f + "*" + b + "*" + p;
    }
    return nal::parse_form(text, s.chart, s.algebra);
}

}  // namespace oracle
