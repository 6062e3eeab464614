#include "nal/liealg.hpp"

#include <cmath>
#include <functional>
#include <regex>
#include <sstream>

#include "nal/errors.hpp"

namespace nal {

bool LieAlgebraSpec::abelian() const {
    for (double v : structure_constants)
        if (v != 0.0) return false;
    return true;
}

Mat LieAlgebraSpec::ad(const Vec& xi) const {
    Mat m = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k) m(k, j) += xi(i) * c(i, j, k);
    return m;
}

double LieAlgebraSpec::validate() const {
    if (dim <= 0) throw InputError("algebra dim must be positive");
    if (static_cast<int>(structure_constants.size()) != dim * dim * dim)
        throw InputError("structure constant array has wrong size");
    if (inner_product.rows() != dim || inner_product.cols() != dim)
        throw InputError("inner product has wrong shape");
    if (static_cast<int>(basis_labels.size()) != dim) throw InputError("basis_labels length differs from dim");
    if (!(group_volume > 0.0)) throw InputError("group_volume must be positive");
    double worst = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k) worst = std::max(worst, std::abs(c(i, j, k) + c(j, i, k)));
    if (worst > 1e-12) throw InputError("structure constants not antisymmetric");
    // Jacobi: [e_i,[e_j,e_l]] + cyclic = 0
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int l = 0; l < dim; ++l)
                for (int out = 0; out < dim; ++out) {
                    double s = 0.0;
                    for (int m = 0; m < dim; ++m) {
                        s += c(j, l, m) * c(i, m, out);
                        s += c(l, i, m) * c(j, m, out);
                        s += c(i, j, m) * c(l, m, out);
                    }
                    worst = std::max(worst, std::abs(s));
                }
    if (worst > 1e-10) throw InputError("Jacobi identity fails");
    if ((inner_product - inner_product.transpose()).cwiseAbs().maxCoeff() > 1e-14)
        throw InputError("inner product not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(inner_product);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("inner product not positive definite");
    for (int z = 0; z < dim; ++z)
        for (int x = 0; x < dim; ++x)
            for (int y = 0; y < dim; ++y) {
                Vec ez = Vec::Unit(dim, z), ex = Vec::Unit(dim, x), ey = Vec::Unit(dim, y);
                double r = ip(*this, bracket(*this, ez, ex), ey) + ip(*this, ex, bracket(*this, ez, ey));
                worst = std::max(worst, std::abs(r));
            }
    if (worst > 1e-10) throw InputError("inner product not ad-invariant");
    return worst;
}

int monomial_degree(const PhiMonomial& m) {
    int d = 0;
    for (int e : m) d += e;
    return d;
}

PhiMonomial monomial_product(const PhiMonomial& a, const PhiMonomial& b) {
    PhiMonomial r(a);
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return r;
}

PhiPolynomial PhiPolynomial::constant(int dim, cplx c) {
    PhiPolynomial p(dim);
    p.add_term(PhiMonomial(dim, 0), c);
    return p;
}

PhiPolynomial PhiPolynomial::coordinate(int dim, int a) {
    PhiMonomial m(dim, 0);
    m[a] = 1;
    return monomial(dim, m, 1.0);
}

PhiPolynomial PhiPolynomial::monomial(int dim, const PhiMonomial& m, cplx c) {
    PhiPolynomial p(dim);
    p.add_term(m, c);
    return p;
}

int PhiPolynomial::degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, monomial_degree(m));
    return d;
}

void PhiPolynomial::add_term(const PhiMonomial& m, cplx c) {
    if (static_cast<int>(m.size()) != dim_) throw InputError("phi monomial has wrong length");
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        if (c != cplx(0.0)) terms_.emplace(m, c);
        return;
    }
    it->second += c;
    if (it->second == cplx(0.0)) terms_.erase(it);
}

PhiPolynomial PhiPolynomial::operator+(const PhiPolynomial& o) const {
    PhiPolynomial r(*this);
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
}

PhiPolynomial PhiPolynomial::operator*(const PhiPolynomial& o) const {
    PhiPolynomial r(dim_);
    for (const auto& [m1, c1] : terms_)
        for (const auto& [m2, c2] : o.terms_) r.add_term(monomial_product(m1, m2), c1 * c2);
    return r;
}

PhiPolynomial PhiPolynomial::operator*(cplx s) const {
    PhiPolynomial r(dim_);
    for (const auto& [m, c] : terms_) r.add_term(m, c * s);
    return r;
}

cplx PhiPolynomial::eval(const CVec& phi) const {
    cplx s(0.0);
    for (const auto& [m, c] : terms_) {
        cplx t = c;
        for (int a = 0; a < dim_; ++a)
            for (int e = 0; e < m[a]; ++e) t *= phi(a);
        s += t;
    }
    return s;
}

Vec bracket(const LieAlgebraSpec& a, const Vec& xi, const Vec& eta) {
    if (xi.size() != a.dim || eta.size() != a.dim) throw InputError("bracket: dimension mismatch");
    Vec r = Vec::Zero(a.dim);
    for (int i = 0; i < a.dim; ++i) {
        if (xi(i) == 0.0) continue;
        for (int j = 0; j < a.dim; ++j) {
            if (eta(j) == 0.0) continue;
            for (int k = 0; k < a.dim; ++k) r(k) += xi(i) * eta(j) * a.c(i, j, k);
        }
    }
    return r;
}

double ip(const LieAlgebraSpec& a, const Vec& x, const Vec& y) { return x.dot(a.inner_product * y); }

namespace {

void enumerate_monomials(int dim, int max_degree, const std::function<void(const PhiMonomial&)>& f) {
    PhiMonomial m(dim, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == dim) {
            f(m);
            return;
        }
        for (int e = 0; e <= left; ++e) {
            m[pos] = e;
            rec(pos + 1, left - e);
        }
        m[pos] = 0;
    };
    rec(0, max_degree);
}

}  // namespace

GaussianTable::GaussianTable(const LieAlgebraSpec& a, double eps, int max_degree)
    : a_(a), eps_(eps), max_degree_(max_degree) {
    if (!(eps > 0.0)) throw InputError("epsilon must be positive");
    if (max_degree > kWickDegreeCap) throw InputError("phi degree exceeds the Wick cap of 16");
    cov_ = a.inner_product.inverse() / eps;
    norm_ = std::pow(2.0 * M_PI / eps, 0.5 * a.dim) / std::sqrt(a.inner_product.determinant());
    std::map<PhiMonomial, double> memo;
    enumerate_monomials(a.dim, max_degree, [&](const PhiMonomial& m) { moments_[m] = moment_rec(m, memo); });
}

double GaussianTable::moment_rec(const PhiMonomial& m, std::map<PhiMonomial, double>& memo) const {
    int d = monomial_degree(m);
    if (d == 0) return 1.0;
    if (d % 2) return 0.0;
    auto it = memo.find(m);
    if (it != memo.end()) return it->second;
    int a = 0;
    while (m[a] == 0) ++a;
    PhiMonomial beta(m);
    beta[a] -= 1;
    double s = 0.0;
    for (int b = 0; b < a_.dim; ++b) {
        if (beta[b] == 0 || cov_(a, b) == 0.0) continue;
        PhiMonomial g(beta);
        g[b] -= 1;
        s += cov_(a, b) * beta[b] * moment_rec(g, memo);
    }
    memo[m] = s;
    return s;
}

double GaussianTable::moment(const PhiMonomial& m) const {
    auto it = moments_.find(m);
    if (it != moments_.end()) return it->second;
    if (monomial_degree(m) > kWickDegreeCap) throw InputError("phi degree exceeds the Wick cap of 16");
    std::map<PhiMonomial, double> memo;
    return moment_rec(m, memo);
}

cplx GaussianTable::shifted_no_damping(const PhiMonomial& mono, const Vec& m) const {
    int dim = a_.dim;
    int deg = monomial_degree(mono);
    if (deg > kWickDegreeCap) throw InputError("phi degree exceeds the Wick cap of 16");
    if (deg == 0) return norm_;
    std::vector<cplx> s(dim);
    for (int b = 0; b < dim; ++b) s[b] = cplx(0.0, m(b) / eps_);
    // sum over beta <= mono of prod_a binom(mono_a, beta_a) s_a^(mono_a - beta_a) E[phi^beta]
    cplx total(0.0);
    PhiMonomial beta(dim, 0);
    std::function<void(int, cplx)> rec = [&](int pos, cplx w) {
        if (pos == dim) {
            if (monomial_degree(beta) % 2 == 0) total += w * moment(beta);
            return;
        }
        double binom = 1.0;
        for (int e = 0; e <= mono[pos]; ++e) {
            beta[pos] = e;
            int rest = mono[pos] - e;
            cplx sp(1.0);
            for (int k = 0; k < rest; ++k) sp *= s[pos];
            rec(pos + 1, w * binom * sp);
            binom = binom * (mono[pos] - e) / (e + 1);
        }
        beta[pos] = 0;
    };
    rec(0, cplx(1.0));
    return norm_ * total;
}

cplx GaussianTable::shifted(const PhiMonomial& mono, const Vec& m) const {
    double m2 = ip(a_, m, m);
    return std::exp(-m2 / (2.0 * eps_)) * shifted_no_damping(mono, m);
}

cplx gaussian_moment(const LieAlgebraSpec& a, const PhiPolynomial& p, double eps) {
    if (!(eps > 0.0)) throw InputError("gaussian_moment: epsilon must be positive");
    if (p.degree() > kWickDegreeCap) throw InputError("phi degree exceeds the Wick cap of 16");
    GaussianTable t(a, eps, p.degree());
    cplx s(0.0);
    for (const auto& [m, c] : p.terms()) s += c * t.moment(m);
    return s * t.normalization();
}

cplx shifted_gaussian_integral(const LieAlgebraSpec& a, const PhiPolynomial& p, const Vec& m, double eps) {
    if (!(eps > 0.0)) throw InputError("shifted_gaussian_integral: epsilon must be positive");
    if (m.size() != a.dim) throw InputError("shift vector has wrong length");
    if (p.degree() > kWickDegreeCap) throw InputError("phi degree exceeds the Wick cap of 16");
    GaussianTable t(a, eps, p.degree());
    cplx s(0.0);
    for (const auto& [mono, c] : p.terms()) s += c * t.shifted_no_damping(mono, m);
    return s * std::exp(-ip(a, m, m) / (2.0 * eps));
}

LieAlgebraSpec builtin_algebra(const std::string& name) {
    LieAlgebraSpec a;
    a.name = name;
    std::smatch mt;
    static const std::regex torus_re(R"(torus\((\d+)\))");
    if (name == "u1") {
        a.dim = 1;
        a.basis_labels = {"e"};
        a.structure_constants = {0.0};
        a.inner_product = Mat::Identity(1, 1);
        a.group_volume = 2.0 * M_PI;
    } else if (name == "su2") {
        a.dim = 3;
        a.basis_labels = {"e1", "e2", "e3"};
        a.structure_constants.assign(27, 0.0);
        auto set = [&](int i, int j, int k, double v) { a.structure_constants[(i * 3 + j) * 3 + k] = v; };
        set(0, 1, 2, 1.0);
        set(1, 2, 0, 1.0);
        set(2, 0, 1, 1.0);
        set(1, 0, 2, -1.0);
        set(2, 1, 0, -1.0);
        set(0, 2, 1, -1.0);
        a.inner_product = Mat::Identity(3, 3);
        // S^3 of radius 2: the basis e_k = -(i/2) sigma_k is orthonormal for -2 tr(XY)
        a.group_volume = 16.0 * M_PI * M_PI;
    } else if (std::regex_match(name, mt, torus_re)) {
        int k = std::stoi(mt[1]);
        if (k < 1 || k > 8) throw InputError("torus rank out of range");
        a.dim = k;
        for (int i = 0; i < k; ++i) a.basis_labels.push_back("e" + std::to_string(i + 1));
        a.structure_constants.assign(k * k * k, 0.0);
        a.inner_product = Mat::Identity(k, k);
        a.group_volume = std::pow(2.0 * M_PI, k);
    } else {
        throw InputError("unknown algebra: " + name);
    }
    a.validate();
    return a;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw InputError("not a number: " + tok);
        }
    }
    return out;
}

}  // namespace

KeyValues algebra_to_fields(const LieAlgebraSpec& a) {
    KeyValues kv;
    kv.emplace_back("name", a.name);
    kv.emplace_back("dim", std::to_string(a.dim));
    std::string labels;
    for (int i = 0; i < a.dim; ++i) labels += (i ? ", " : "") + a.basis_labels[i];
    kv.emplace_back("basis_labels", labels);
    kv.emplace_back("structure_constants", join_doubles(a.structure_constants));
    std::vector<double> ipv;
    for (int i = 0; i < a.dim; ++i)
        for (int j = 0; j < a.dim; ++j) ipv.push_back(a.inner_product(i, j));
    kv.emplace_back("inner_product", join_doubles(ipv));
    kv.emplace_back("group_volume", join_doubles({a.group_volume}));
    return kv;
}

LieAlgebraSpec algebra_from_fields(const KeyValues& kv) {
    std::map<std::string, std::string> f(kv.begin(), kv.end());
    auto need = [&](const std::string& k) {
        auto it = f.find(k);
        if (it == f.end()) throw InputError("algebra field missing: " + k);
        return it->second;
    };
    LieAlgebraSpec a;
    a.name = need("name");
    a.dim = std::stoi(need("dim"));
    {
        std::stringstream ss(need("basis_labels"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            auto b = tok.find_first_not_of(" \t");
            auto e = tok.find_last_not_of(" \t");
            if (b != std::string::npos) a.basis_labels.push_back(tok.substr(b, e - b + 1));
        }
    }
    a.structure_constants = split_doubles(need("structure_constants"));
    auto ipv = split_doubles(need("inner_product"));
    if (static_cast<int>(ipv.size()) != a.dim * a.dim) throw InputError("inner_product has wrong length");
    a.inner_product = Mat(a.dim, a.dim);
    for (int i = 0; i < a.dim; ++i)
        for (int j = 0; j < a.dim; ++j) a.inner_product(i, j) = ipv[i * a.dim + j];
    auto vol = split_doubles(need("group_volume"));
    if (vol.size() != 1) throw InputError("group_volume must be a single number");
    a.group_volume = vol[0];
    a.validate();
    return a;
}

}  // namespace nal
