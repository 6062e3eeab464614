#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nal/expr.hpp"

namespace nal {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

struct LieAlgebraSpec {
    std::string name;
    int dim = 0;
    std::vector<std::string> basis_labels;
    std::vector<double> structure_constants;  // c[i][j][k] at (i*dim + j)*dim + k
    Mat inner_product;
    double group_volume = 0.0;

    double c(int i, int j, int k) const { return structure_constants[(i * dim + j) * dim + k]; }
    bool abelian() const;
    // Matrix of ad_xi acting on coefficient vectors.
    Mat ad(const Vec& xi) const;
    // Throws InputError on violated invariants; returns the worst residual seen.
    double validate() const;
};

using PhiMonomial = std::vector<int>;

class PhiPolynomial {
public:
    PhiPolynomial() = default;
    explicit PhiPolynomial(int dim) : dim_(dim) {}
    static PhiPolynomial constant(int dim, cplx c);
    static PhiPolynomial coordinate(int dim, int a);
    static PhiPolynomial monomial(int dim, const PhiMonomial& m, cplx c);

    int dim() const { return dim_; }
    int degree() const;
    const std::map<PhiMonomial, cplx>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const PhiMonomial& m, cplx c);
    PhiPolynomial operator+(const PhiPolynomial& o) const;
    PhiPolynomial operator*(const PhiPolynomial& o) const;
    PhiPolynomial operator*(cplx s) const;
    cplx eval(const CVec& phi) const;

private:
    int dim_ = 0;
    std::map<PhiMonomial, cplx> terms_;
};

int monomial_degree(const PhiMonomial& m);
PhiMonomial monomial_product(const PhiMonomial& a, const PhiMonomial& b);

Vec bracket(const LieAlgebraSpec& a, const Vec& xi, const Vec& eta);
double ip(const LieAlgebraSpec& a, const Vec& x, const Vec& y);

constexpr int kWickDegreeCap = 16;

cplx gaussian_moment(const LieAlgebraSpec& a, const PhiPolynomial& p, double eps);
cplx shifted_gaussian_integral(const LieAlgebraSpec& a, const PhiPolynomial& p, const Vec& m, double eps);

// Precomputed Wick moments for a fixed algebra and epsilon; evaluates shifted
// Gaussian integrals of monomials at many shifts.
class GaussianTable {
public:
    GaussianTable(const LieAlgebraSpec& a, double eps, int max_degree);
    double eps() const { return eps_; }
    int max_degree() const { return max_degree_; }
    // Normalized moment E[phi^m] under the Gaussian with covariance G^{-1}/eps.
    double moment(const PhiMonomial& m) const;
    // Integral of phi^mono exp(i<m,phi> - eps/2 |phi|^2) over the algebra.
    cplx shifted(const PhiMonomial& mono, const Vec& m) const;
    // Same with the exp(-|m|^2/(2 eps)) factor omitted.
    cplx shifted_no_damping(const PhiMonomial& mono, const Vec& m) const;
    double normalization() const { return norm_; }

private:
    LieAlgebraSpec a_;
    double eps_;
    int max_degree_;
    double norm_;
    Mat cov_;
    std::map<PhiMonomial, double> moments_;
    double moment_rec(const PhiMonomial& m, std::map<PhiMonomial, double>& memo) const;
};

LieAlgebraSpec builtin_algebra(const std::string& name);

using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues algebra_to_fields(const LieAlgebraSpec& a);
LieAlgebraSpec algebra_from_fields(const KeyValues& kv);

}  // namespace nal
