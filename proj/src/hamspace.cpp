#include "nal/hamspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "nal/errors.hpp"

namespace nal {

double RadialModel::mu2(double S) const {
    if (kind == Kind::U1Linear) return 0.25 * (S - a) * (S - a);
    return S * S / 16.0;
}

std::pair<double, double> RadialModel::s_range(double r) const {
    double root = std::sqrt(std::max(r, 0.0));
    if (kind == Kind::U1Linear) return {std::max(0.0, a - 2.0 * root), a + 2.0 * root};
    return {0.0, 4.0 * root};
}

std::string param(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    return fallback;
}

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

Vec eval_vec(const ExprVec& v, const double* x) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i].eval(x).real();
    return out;
}

ExprMat expr_identity(int n) {
    ExprMat m(n, ExprVec(n, Expr(0.0)));
    for (int i = 0; i < n; ++i) m[i][i] = Expr(1.0);
    return m;
}

ExprMat expr_mul(const ExprMat& a, const ExprMat& b) {
    int n = static_cast<int>(a.size()), k = static_cast<int>(b.size()), m = static_cast<int>(b[0].size());
    ExprMat c(n, ExprVec(m, Expr(0.0)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            ExprVec terms;
            for (int l = 0; l < k; ++l)
                if (!a[i][l].is_zero() && !b[l][j].is_zero()) terms.push_back(a[i][l] * b[l][j]);
            c[i][j] = sum(terms);
        }
    return c;
}

ExprMat expr_lincomb(const std::vector<std::pair<Expr, const ExprMat*>>& parts, int n) {
    ExprMat out(n, ExprVec(n, Expr(0.0)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            ExprVec terms;
            for (const auto& [c, m] : parts)
                if (!(*m)[i][j].is_zero() && !c.is_zero()) terms.push_back(c * (*m)[i][j]);
            out[i][j] = sum(terms);
        }
    return out;
}

ExprVec expr_apply(const ExprMat& m, const ExprVec& v) {
    ExprVec out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        ExprVec terms;
        for (std::size_t j = 0; j < v.size(); ++j)
            if (!m[i][j].is_zero() && !v[j].is_zero()) terms.push_back(m[i][j] * v[j]);
        out[i] = sum(terms);
    }
    return out;
}

// Complex matrix acting on C^n, realized on (x1, y1, ..., xn, yn).
Mat realify(const Eigen::MatrixXcd& m) {
    int n = static_cast<int>(m.rows());
    Mat r = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double p = m(j, k).real(), q = m(j, k).imag();
            r(2 * j, 2 * k) = p;
            r(2 * j, 2 * k + 1) = -q;
            r(2 * j + 1, 2 * k) = q;
            r(2 * j + 1, 2 * k + 1) = p;
        }
    return r;
}

Chart complex_chart(const std::string& id, int n) {
    Chart c;
    c.id = id;
    for (int j = 1; j <= n; ++j) {
        c.coords.push_back("x" + std::to_string(j));
        c.coords.push_back("y" + std::to_string(j));
    }
    return c;
}

EquivariantForm standard_omega(const Chart& c, int gdim) {
    int n = c.dim();
    EquivariantForm w(c.id, n, gdim);
    for (int j = 0; j < n / 2; ++j) w.add_term((Mask(1) << (2 * j)) | (Mask(1) << (2 * j + 1)), PhiMonomial(gdim, 0), Expr(1.0));
    return w;
}

VectorFieldFamily linear_family(const Chart& c, const std::vector<Mat>& gens) {
    VectorFieldFamily v;
    v.chart_id = c.id;
    v.ambient_dim = c.dim();
    for (const Mat& g : gens) {
        ExprVec comp(c.dim());
        for (int k = 0; k < c.dim(); ++k) {
            ExprVec terms;
            for (int l = 0; l < c.dim(); ++l)
                if (g(k, l) != 0.0) terms.push_back(Expr(g(k, l)) * Expr::var(l));
            comp[k] = sum(terms);
        }
        v.comps.push_back(comp);
    }
    return v;
}

}  // namespace

Mat HamiltonianSpace::omega_matrix(const double* x) const {
    int n = dim();
    Mat m = Mat::Zero(n, n);
    for (const auto& [k, c] : omega.terms()) {
        if (popcount(k.mask) != 2) continue;
        int i = std::countr_zero(k.mask);
        int j = std::countr_zero(k.mask & (k.mask - 1));
        double v = c.eval(x).real();
        m(i, j) += v;
        m(j, i) -= v;
    }
    return m;
}

Vec HamiltonianSpace::moment(const double* x) const { return eval_vec(moment_star, x); }

double HamiltonianSpace::mu2(const double* x) const {
    Vec m = moment(x);
    return ip(algebra, m, m);
}

Mat HamiltonianSpace::moment_jacobian(const double* x) const {
    Mat j(gdim(), dim());
    for (int a = 0; a < gdim(); ++a)
        for (int k = 0; k < dim(); ++k) j(a, k) = moment_star[a].diff(k).eval(x).real();
    return j;
}

Mat HamiltonianSpace::metric(const double* x) const {
    if (euclidean_metric) return Mat::Identity(dim(), dim());
    Mat w = omega_matrix(x);
    Eigen::SelfAdjointEigenSolver<Mat> es(w.transpose() * w);
    return es.operatorSqrt();
}

Mat HamiltonianSpace::complex_structure(const double* x) const {
    Mat w = omega_matrix(x);
    return w.fullPivLu().solve(metric(x));
}

Vec HamiltonianSpace::v_mu(const double* x) const { return action.at(x, moment(x)); }

bool HamiltonianSpace::in_chart(const double* x) const {
    if (chart_radius_coords.empty()) return true;
    double s = 0.0;
    for (int k : chart_radius_coords) s += x[k] * x[k];
    return std::sqrt(s) < chart_radius;
}

Mat HamiltonianSpace::act_matrix(const Vec& xi) const {
    if (linear_generators.empty()) throw InputError("finite group action available for linear actions only");
    Mat a = Mat::Zero(dim(), dim());
    for (int k = 0; k < gdim(); ++k) a += xi(k) * linear_generators[k];
    return a.exp();
}

Vec HamiltonianSpace::act(const Vec& xi, const Vec& x) const { return act_matrix(xi) * x; }

std::vector<std::vector<double>> HamiltonianSpace::sample_points(int count, unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> pts;
    while (static_cast<int>(pts.size()) < count) {
        std::vector<double> p(dim());
        for (int k = 0; k < dim(); ++k) p[k] = sample_halfwidth(k) * u(rng);
        if (in_chart(p.data())) pts.push_back(std::move(p));
    }
    return pts;
}

MomentReport check_moment_condition(const HamiltonianSpace& s, int n_samples, unsigned seed) {
    if (n_samples < 1) throw InputError("n_samples must be positive");
    MomentReport rep;
    auto pts = s.sample_points(n_samples, seed);
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> nd;
    int n = s.dim(), g = s.gdim();
    std::vector<std::vector<Expr>> dmu(g, ExprVec(n));
    for (int a = 0; a < g; ++a)
        for (int k = 0; k < n; ++k) dmu[a][k] = s.moment_star[a].diff(k);
    for (const auto& p : pts) {
        Mat w = s.omega_matrix(p.data());
        Mat v = s.action.matrix_at(p.data());
        Mat dm(g, n);
        for (int a = 0; a < g; ++a)
            for (int k = 0; k < n; ++k) dm(a, k) = dmu[a][k].eval(p.data()).real();
        Vec phi(g);
        for (int a = 0; a < g; ++a) phi(a) = nd(rng);
        if (g > 0) phi.normalize();
        // iota_{V phi} omega + d<mu*, phi>
        Vec vp = v * phi;
        Vec res = w.transpose() * vp + dm.transpose() * (s.algebra.inner_product * phi);
        rep.max_residual = std::max(rep.max_residual, res.norm());
        ++rep.samples;
    }
    rep.passed = rep.max_residual < 1e-10;
    return rep;
}

double closedness_residual(const HamiltonianSpace& s, int n_samples, unsigned seed) {
    EquivariantForm dw = exterior_d(s.omega);
    double worst = 0.0;
    CVec phi = CVec::Zero(s.gdim());
    for (const auto& p : s.sample_points(n_samples, seed)) worst = std::max(worst, pointwise_norm(dw, p.data(), phi));
    return worst;
}

double min_abs_det_omega(const HamiltonianSpace& s, int n_samples, unsigned seed) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& p : s.sample_points(n_samples, seed))
        worst = std::min(worst, std::abs(s.omega_matrix(p.data()).determinant()));
    return worst;
}

double compatibility_residual(const HamiltonianSpace& s, int n_samples, unsigned seed) {
    double worst = 0.0;
    int n = s.dim();
    for (const auto& p : s.sample_points(n_samples, seed)) {
        Mat w = s.omega_matrix(p.data());
        Mat g = s.metric(p.data());
        Mat j = s.complex_structure(p.data());
        worst = std::max(worst, (j * j + Mat::Identity(n, n)).norm());
        worst = std::max(worst, (w * j - g).norm());
        worst = std::max(worst, (g - g.transpose()).norm());
        if (Eigen::SelfAdjointEigenSolver<Mat>(g).eigenvalues().minCoeff() <= 0.0) worst = std::max(worst, 1.0);
    }
    return worst;
}

Vec lambda_at(const HamiltonianSpace& s, const double* x) { return s.metric(x) * s.v_mu(x); }

EquivariantForm lambda_form(const HamiltonianSpace& s) {
    if (!s.euclidean_metric) throw InputError("lambda_form: symbolic lambda needs a Euclidean metric");
    int n = s.dim();
    EquivariantForm l(s.chart.id, n, s.gdim());
    for (int k = 0; k < n; ++k) {
        ExprVec terms;
        for (int a = 0; a < s.gdim(); ++a)
            if (!s.action.comps[a][k].is_zero()) terms.push_back(s.moment_star[a] * s.action.comps[a][k]);
        l.add_term(Mask(1) << k, PhiMonomial(s.gdim(), 0), sum(terms));
    }
    return l;
}

InvarianceReport group_invariance(const HamiltonianSpace& s, int n_samples, unsigned seed) {
    InvarianceReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (const auto& p : s.sample_points(n_samples, seed + 3)) {
        Vec xi(s.gdim());
        for (int a = 0; a < s.gdim(); ++a) xi(a) = 2.0 * nd(rng);
        Mat A = s.act_matrix(xi);
        Vec x = Eigen::Map<const Vec>(p.data(), s.dim());
        Vec gx = A * x;
        rep.omega = std::max(rep.omega, (A.transpose() * s.omega_matrix(gx.data()) * A - s.omega_matrix(x.data())).norm());
        rep.mu2 = std::max(rep.mu2, std::abs(s.mu2(gx.data()) - s.mu2(x.data())));
        rep.lambda = std::max(rep.lambda, (A.transpose() * lambda_at(s, gx.data()) - lambda_at(s, x.data())).norm());
    }
    return rep;
}

HamiltonianSpace weighted_cn_u1(const std::vector<int>& weights, double a) {
    if (weights.empty()) throw InputError("weighted_cn_u1: need at least one weight");
    if (!(a > 0.0)) throw InputError("weighted_cn_u1: a must be positive");
    for (int w : weights)
        if (w <= 0) throw InputError("weighted_cn_u1: weights must be positive integers");
    int n = static_cast<int>(weights.size());
    HamiltonianSpace s;
    s.algebra = builtin_algebra("u1");
    s.chart = complex_chart("R" + std::to_string(2 * n), n);
    s.omega = standard_omega(s.chart, 1);
    Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) gen(j, j) = cplx(0.0, weights[j]);
    s.linear_generators = {realify(gen)};
    s.action = linear_family(s.chart, s.linear_generators);
    ExprVec terms;
    for (int j = 0; j < n; ++j) {
        Expr x = Expr::var(2 * j), y = Expr::var(2 * j + 1);
        terms.push_back(Expr(0.5 * weights[j]) * (x * x + y * y));
    }
    terms.push_back(Expr(-0.5 * a));
    s.moment_star = {sum(terms)};
    RadialModel rm;
    rm.kind = RadialModel::Kind::U1Linear;
    rm.a = a;
    for (int w : weights) rm.weights.push_back(w);
    s.radial = rm;
    s.zero_regular = true;
    s.generic_stabilizer = std::accumulate(weights.begin(), weights.end(), 0, [](int g, int w) { return std::gcd(g, w); });
    s.sample_halfwidth = Vec::Constant(2 * n, std::sqrt(2.0 * a + 2.0));
    std::ostringstream nm;
    nm << "weighted_cn_u1(" << n << ",(";
    for (int j = 0; j < n; ++j) nm << (j ? "," : "") << weights[j];
    nm << ")," << a << ")";
    s.name = nm.str();
    return s;
}

HamiltonianSpace cn_u1(int n, double a) {
    if (n < 1 || n > 6) throw InputError("cn_u1: n must be in 1..6");
    HamiltonianSpace s = weighted_cn_u1(std::vector<int>(n, 1), a);
    std::ostringstream nm;
    nm << "cn_u1(" << n << "," << a << ")";
    s.name = nm.str();
    return s;
}

HamiltonianSpace c2_su2() {
    HamiltonianSpace s;
    s.name = "c2_su2";
    s.algebra = builtin_algebra("su2");
    s.chart = complex_chart("R4", 2);
    s.omega = standard_omega(s.chart, 3);
    const cplx I(0.0, 1.0);
    std::vector<Eigen::Matrix2cd> sigma(3);
    sigma[0] << 0, 1, 1, 0;
    sigma[1] << 0, -I, I, 0;
    sigma[2] << 1, 0, 0, -1;
    ExprVec z_re = {Expr::var(0), Expr::var(2)}, z_im = {Expr::var(1), Expr::var(3)};
    for (int k = 0; k < 3; ++k) {
        Eigen::MatrixXcd e = -0.5 * I * sigma[k];
        s.linear_generators.push_back(realify(e));
        // mu*_k = -z^dagger sigma_k z / 4
        ExprVec terms;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                cplx c = sigma[k](p, q);
                if (c == 0.0) continue;
                // Re(conj(z_p) c z_q)
                Expr re = z_re[p] * z_re[q] + z_im[p] * z_im[q];
                Expr im = z_re[p] * z_im[q] - z_im[p] * z_re[q];
                if (c.real() != 0.0) terms.push_back(Expr(-0.25 * c.real()) * re);
                if (c.imag() != 0.0) terms.push_back(Expr(0.25 * c.imag()) * im);
            }
        s.moment_star.push_back(sum(terms));
    }
    s.action = linear_family(s.chart, s.linear_generators);
    RadialModel rm;
    rm.kind = RadialModel::Kind::SU2Quadratic;
    rm.weights = {1.0, 1.0};
    s.radial = rm;
    s.zero_regular = false;
    s.sample_halfwidth = Vec::Constant(4, 1.5);
    return s;
}

HamiltonianSpace corrupt_moment(const HamiltonianSpace& s, double delta) {
    HamiltonianSpace c = s;
    c.name = s.name + "+corrupt";
    c.moment_star[0] = c.moment_star[0] + Expr(delta) * Expr::var(0);
    return c;
}

void StandardLocalModel::validate() const {
    double v = g.validate();
    (void)v;
    int d = g.dim;
    if (beta.size() != d) throw InputError("standard model: beta has wrong length");
    if (k_basis.rows() != d || h_basis.rows() != d) throw InputError("standard model: subalgebra bases have wrong length");
    for (int c = 0; c < k_basis.cols(); ++c)
        if (bracket(g, k_basis.col(c), beta).norm() > 1e-12) throw InputError("standard model: beta is not fixed by k");
    if (h_basis.cols() > 0) {
        Mat proj = k_basis * (k_basis.transpose() * g.inner_product * k_basis).inverse() * k_basis.transpose() * g.inner_product;
        if ((proj * h_basis - h_basis).norm() > 1e-10) throw InputError("standard model: h is not contained in k");
    }
    int m2 = static_cast<int>(omega_x.rows());
    if (m2 % 2) throw InputError("standard model: X must have even dimension");
    if (m2 > 0) {
        if ((omega_x + omega_x.transpose()).norm() > 1e-12) throw InputError("standard model: omega_X not antisymmetric");
        if (std::abs(omega_x.determinant()) < 1e-12) throw InputError("standard model: omega_X degenerate");
    }
    if (static_cast<int>(x_generators.size()) != h_basis.cols() && m2 > 0)
        throw InputError("standard model: need one X generator per h basis vector");
    for (const Mat& M : x_generators)
        if ((M.transpose() * omega_x + omega_x * M).norm() > 1e-12) throw InputError("standard model: H does not preserve omega_X");
}

StandardModelSpaces build_standard_model(const StandardLocalModel& m) {
    m.validate();
    const LieAlgebraSpec& G = m.g;
    int d = G.dim, kd = static_cast<int>(m.k_basis.cols()), hd = static_cast<int>(m.h_basis.cols());
    int xd = static_cast<int>(m.omega_x.rows());
    int n = d + kd + xd;

    // u = -tr(ad^2)/2 must satisfy ad^3 = -u ad (Rodrigues-type algebras).
    Mat Q = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Q(i, j) = -0.5 * (G.ad(Vec::Unit(d, i)) * G.ad(Vec::Unit(d, j))).trace();
    {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> nd;
        for (int t = 0; t < 10; ++t) {
            Vec z(d);
            for (int i = 0; i < d; ++i) z(i) = nd(rng);
            Mat ad = G.ad(z);
            double u = z.dot(Q * z);
            if ((ad * ad * ad + u * ad).norm() > 1e-10 * (1.0 + ad.norm() * u))
                throw InputError("standard model: exponential chart needs ad^3 = -|xi|^2 ad");
        }
    }

    Chart chart;
    chart.id = "std_model";
    for (int i = 0; i < d; ++i) chart.coords.push_back("g" + std::to_string(i + 1));
    for (int i = 0; i < kd; ++i) chart.coords.push_back("n" + std::to_string(i + 1));
    for (int i = 0; i < xd / 2; ++i) {
        chart.coords.push_back("x" + std::to_string(i + 1));
        chart.coords.push_back("y" + std::to_string(i + 1));
    }
    ExprVec zeta(d);
    for (int i = 0; i < d; ++i) zeta[i] = Expr::var(i);
    ExprMat ad(d, ExprVec(d, Expr(0.0)));
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) {
            ExprVec terms;
            for (int i = 0; i < d; ++i)
                if (G.c(i, j, k) != 0.0) terms.push_back(Expr(G.c(i, j, k)) * zeta[i]);
            ad[k][j] = sum(terms);
        }
    ExprVec uterms;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (Q(i, j) != 0.0) uterms.push_back(Expr(Q(i, j)) * zeta[i] * zeta[j]);
    Expr u = sum(uterms);
    ExprMat ad2 = expr_mul(ad, ad);
    ExprMat I = expr_identity(d);
    Expr sinc = series(SeriesFn::SinOverTheta, 0, u);
    Expr omc = series(SeriesFn::OneMinusCos, 0, u);
    Expr tms = series(SeriesFn::ThetaMinusSin, 0, u);
    Expr bern = series(SeriesFn::BernoulliEven, 0, u);
    // theta = g^{-1} dg = T d zeta
    ExprMat T = expr_lincomb({{Expr(1.0), &I}, {-omc, &ad}, {tms, &ad2}}, d);
    ExprMat Tinv = expr_lincomb({{Expr(1.0), &I}, {Expr(0.5), &ad}, {bern, &ad2}}, d);
    ExprMat Adg = expr_lincomb({{Expr(1.0), &I}, {sinc, &ad}, {omc, &ad2}}, d);
    ExprMat Adginv = expr_lincomb({{Expr(1.0), &I}, {-sinc, &ad}, {omc, &ad2}}, d);

    // beta + nu as a g-valued expression
    ExprVec bn(d);
    for (int i = 0; i < d; ++i) {
        ExprVec terms{Expr(m.beta(i))};
        for (int a = 0; a < kd; ++a)
            if (m.k_basis(i, a) != 0.0) terms.push_back(Expr(m.k_basis(i, a)) * Expr::var(d + a));
        bn[i] = sum(terms);
    }

    std::vector<EquivariantForm> theta;
    for (int k = 0; k < d; ++k) {
        EquivariantForm t(chart.id, n, 0);
        for (int l = 0; l < d; ++l) t.add_term(Mask(1) << l, PhiMonomial(0), T[k][l]);
        theta.push_back(t);
    }
    EquivariantForm omega(chart.id, n, 0);
    const Mat& ipm = G.inner_product;
    for (int a = 0; a < kd; ++a)
        for (int k = 0; k < d; ++k) {
            double c = m.k_basis.col(a).dot(ipm.col(k));
            if (c == 0.0) continue;
            omega = omega + wedge(EquivariantForm::dx(chart.id, n, 0, d + a), theta[k]) * cplx(c);
        }
    // -1/2 <[beta+nu, e_j], e_k> theta^j theta^k
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            if (j == k) continue;
            ExprVec terms;
            for (int i = 0; i < d; ++i)
                for (int l = 0; l < d; ++l) {
                    double c = G.c(i, j, l) * ipm(l, k);
                    if (c != 0.0 && !bn[i].is_zero()) terms.push_back(Expr(c) * bn[i]);
                }
            Expr coef = sum(terms);
            if (coef.is_zero()) continue;
            omega = omega + wedge(theta[j], theta[k]) * (Expr(-0.5) * coef);
        }
    for (int i = 0; i < xd; ++i)
        for (int j = i + 1; j < xd; ++j)
            if (m.omega_x(i, j) != 0.0)
                omega.add_term((Mask(1) << (d + kd + i)) | (Mask(1) << (d + kd + j)), PhiMonomial(0), Expr(m.omega_x(i, j)));

    auto with_phi_dim = [&](const EquivariantForm& f, int g) {
        EquivariantForm r(f.chart_id(), f.ambient_dim(), g);
        for (const auto& [k, c] : f.terms()) r.add_term(k.mask, PhiMonomial(g, 0), c);
        return r;
    };

    Vec half = Vec::Zero(n);
    double nu_scale = m.beta.norm() > 0 ? 0.5 * std::sqrt(ip(G, m.beta, m.beta)) : 1.0;
    for (int i = 0; i < d; ++i) half(i) = 1.0;
    for (int i = 0; i < kd; ++i) half(d + i) = nu_scale;
    for (int i = 0; i < xd; ++i) half(d + kd + i) = 1.0;

    StandardModelSpaces out;
    HamiltonianSpace& gs = out.g_space;
    gs.name = "standard_model";
    gs.algebra = G;
    gs.chart = chart;
    gs.omega = with_phi_dim(omega, d);
    gs.action.chart_id = chart.id;
    gs.action.ambient_dim = n;
    // Left multiplication: the flow exp(t xi) g, so theta(V xi) = Ad_{g^{-1}} xi.
    for (int a = 0; a < d; ++a) {
        ExprVec e(d, Expr(0.0));
        e[a] = Expr(1.0);
        ExprVec dz = expr_apply(Tinv, expr_apply(Adginv, e));
        ExprVec comp(n, Expr(0.0));
        for (int i = 0; i < d; ++i) comp[i] = dz[i];
        gs.action.comps.push_back(comp);
    }
    gs.moment_star = expr_apply(Adg, bn);
    gs.euclidean_metric = false;
    gs.zero_regular = false;
    gs.sample_halfwidth = half;
    for (int i = 0; i < d; ++i) gs.chart_radius_coords.push_back(i);
    gs.chart_radius = M_PI;

    HamiltonianSpace& hs = out.h_space;
    hs = gs;
    hs.name = "standard_model_h";
    LieAlgebraSpec H;
    H.name = "h";
    H.dim = hd;
    for (int b = 0; b < hd; ++b) H.basis_labels.push_back("h" + std::to_string(b + 1));
    H.inner_product = m.h_basis.transpose() * ipm * m.h_basis;
    H.structure_constants.assign(static_cast<std::size_t>(hd) * hd * hd, 0.0);
    if (hd > 0) {
        auto solver = m.h_basis.colPivHouseholderQr();
        for (int i = 0; i < hd; ++i)
            for (int j = 0; j < hd; ++j) {
                Vec c = solver.solve(bracket(G, m.h_basis.col(i), m.h_basis.col(j)));
                for (int k = 0; k < hd; ++k) H.structure_constants[(i * hd + j) * hd + k] = c(k);
            }
        H.group_volume = (hd == d) ? G.group_volume : std::pow(2.0 * M_PI, hd) * std::sqrt(H.inner_product.determinant());
    } else {
        H.group_volume = 1.0;
    }
    hs.algebra = H;
    hs.omega = with_phi_dim(omega, hd);
    hs.action = VectorFieldFamily{chart.id, n, {}};
    // k-coordinates of a g vector
    Mat kproj = (m.k_basis.transpose() * ipm * m.k_basis).inverse() * m.k_basis.transpose() * ipm;
    for (int b = 0; b < hd; ++b) {
        ExprVec e(d);
        for (int i = 0; i < d; ++i) e[i] = Expr(m.h_basis(i, b));
        // g -> g h^{-1}, differentiated along exp(-t eta): theta(V eta) = eta
        ExprVec dz = expr_apply(Tinv, e);
        ExprVec comp(n, Expr(0.0));
        for (int i = 0; i < d; ++i) comp[i] = dz[i];
        // nu -> Ad_h nu, with the same sign convention
        for (int a = 0; a < kd; ++a) {
            ExprVec terms;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < kd; ++j)
                    for (int l = 0; l < d; ++l) {
                        double c = 0.0;
                        for (int p = 0; p < d; ++p) c += m.h_basis(p, b) * m.k_basis(i, j) * G.c(p, i, l);
                        c *= -kproj(a, l);
                        if (c != 0.0) terms.push_back(Expr(c) * Expr::var(d + j));
                    }
            comp[d + a] = sum(terms);
        }
        const Mat& M = m.x_generators.empty() ? Mat() : m.x_generators[b];
        for (int i = 0; i < xd; ++i) {
            ExprVec terms;
            for (int j = 0; j < xd; ++j)
                if (M(i, j) != 0.0) terms.push_back(Expr(M(i, j)) * Expr::var(d + kd + j));
            comp[d + kd + i] = sum(terms);
        }
        hs.action.comps.push_back(comp);
    }
    // mu_H eta = <nu, eta> + 1/2 omega_X(x, eta x), raised with the h inner product.
    Mat hinv = hd > 0 ? Mat(H.inner_product.inverse()) : Mat();
    ExprVec pairing(hd);
    for (int b = 0; b < hd; ++b) {
        ExprVec terms;
        for (int a = 0; a < kd; ++a) {
            double c = m.k_basis.col(a).dot(ipm * m.h_basis.col(b));
            if (c != 0.0) terms.push_back(Expr(c) * Expr::var(d + a));
        }
        if (xd > 0) {
            Mat q = 0.5 * m.omega_x * m.x_generators[b];
            for (int i = 0; i < xd; ++i)
                for (int j = 0; j < xd; ++j)
                    if (q(i, j) != 0.0) terms.push_back(Expr(q(i, j)) * Expr::var(d + kd + i) * Expr::var(d + kd + j));
        }
        pairing[b] = sum(terms);
    }
    hs.moment_star.assign(hd, Expr(0.0));
    for (int b = 0; b < hd; ++b) {
        ExprVec terms;
        for (int c = 0; c < hd; ++c)
            if (hinv(b, c) != 0.0) terms.push_back(Expr(hinv(b, c)) * pairing[c]);
        hs.moment_star[b] = sum(terms);
    }
    return out;
}

StandardLocalModel standard_model_preset(const KeyValues& params) {
    StandardLocalModel m;
    std::string group = param(params, "group", "u1");
    m.g = builtin_algebra(group);
    int d = m.g.dim;
    std::vector<double> b = parse_list(param(params, "beta", "0"));
    if (b.size() == 1 && d > 1 && b[0] == 0.0) b.assign(d, 0.0);
    if (static_cast<int>(b.size()) != d) throw InputError("standard_model: beta needs " + std::to_string(d) + " entries");
    m.beta = Eigen::Map<Vec>(b.data(), d);
    // k = centralizer of beta, orthonormal in the inner product
    Mat adb = m.g.ad(m.beta);
    Eigen::JacobiSVD<Mat> svd(adb, Eigen::ComputeFullV);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-12) ++rank;
    m.k_basis = svd.matrixV().rightCols(d - rank);
    if (m.k_basis.cols() == d) m.k_basis = Mat::Identity(d, d);
    std::string h = param(params, "h", "k");
    if (h == "k")
        m.h_basis = m.k_basis;
    else if (h == "trivial")
        m.h_basis = Mat(d, 0);
    else
        throw InputError("standard_model: h must be 'k' or 'trivial'");
    std::vector<double> w = parse_list(param(params, "x_weights", ""));
    int xm = static_cast<int>(w.size());
    m.omega_x = Mat::Zero(2 * xm, 2 * xm);
    for (int j = 0; j < xm; ++j) {
        m.omega_x(2 * j, 2 * j + 1) = 1.0;
        m.omega_x(2 * j + 1, 2 * j) = -1.0;
    }
    if (xm > 0) {
        if (m.h_basis.cols() != 1) throw InputError("standard_model: X weights need a one-dimensional h");
        Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(xm, xm);
        for (int j = 0; j < xm; ++j) gen(j, j) = cplx(0.0, w[j]);
        m.x_generators = {realify(gen)};
    }
    return m;
}

HamiltonianSpace custom_space(const KeyValues& kv) {
    HamiltonianSpace s;
    s.algebra = builtin_algebra(param(kv, "algebra", "u1"));
    std::string coords = param(kv, "coords");
    std::replace(coords.begin(), coords.end(), ',', ' ');
    std::istringstream cs(coords);
    for (std::string c; cs >> c;) s.chart.coords.push_back(c);
    if (s.chart.coords.empty()) throw InputError("custom space: coords missing");
    if (s.chart.coords.size() % 2) throw InputError("custom space: odd number of coordinates");
    s.chart.id = "custom";
    int n = s.dim(), g = s.gdim();
    s.omega = parse_form(param(kv, "omega"), s.chart, s.algebra);
    s.action.chart_id = s.chart.id;
    s.action.ambient_dim = n;
    for (int a = 0; a < g; ++a) {
        std::string comps = param(kv, "action_" + std::to_string(a + 1));
        std::vector<Expr> field;
        std::size_t start = 0;
        while (start <= comps.size()) {
            std::size_t end = comps.find(',', start);
            if (end == std::string::npos) end = comps.size();
            field.push_back(parse_scalar(comps.substr(start, end - start), s.chart));
            start = end + 1;
        }
        if (static_cast<int>(field.size()) != n)
            throw InputError("custom space: action_" + std::to_string(a + 1) + " needs " + std::to_string(n) + " components");
        s.action.comps.push_back(field);
        s.moment_star.push_back(parse_scalar(param(kv, "moment_" + std::to_string(a + 1)), s.chart));
    }
    double hw = std::stod(param(kv, "halfwidth", "2"));
    s.sample_halfwidth = Vec::Constant(n, hw);
    std::vector<double> x0(n, 0.3), x1(n, -0.7);
    Mat J = Mat::Zero(n, n);
    for (int j = 0; j < n / 2; ++j) {
        J(2 * j, 2 * j + 1) = 1.0;
        J(2 * j + 1, 2 * j) = -1.0;
    }
    s.euclidean_metric = (s.omega_matrix(x0.data()) - J).norm() < 1e-14 && (s.omega_matrix(x1.data()) - J).norm() < 1e-14;
    s.name = "custom";
    return s;
}

HamiltonianSpace catalog(const std::string& name, const KeyValues& params) {
    std::string delta = param(params, "corrupt_delta");
    if (!delta.empty()) {
        KeyValues rest;
        for (const auto& kv : params)
            if (kv.first != "corrupt_delta") rest.push_back(kv);
        return corrupt_moment(catalog(name, rest), std::stod(delta));
    }
    if (name == "custom") return custom_space(params);
    if (name == "cn_u1") return cn_u1(std::stoi(param(params, "n", "1")), std::stod(param(params, "a", "1")));
    if (name == "weighted_cn_u1") {
        std::vector<int> w;
        for (double v : parse_list(param(params, "weights", "1")))
            w.push_back(static_cast<int>(std::lround(v)));
        return weighted_cn_u1(w, std::stod(param(params, "a", "1")));
    }
    if (name == "c2_su2") return c2_su2();
    if (name == "standard_model") return build_standard_model(standard_model_preset(params)).g_space;
    throw InputError("unknown catalog space: " + name);
}

}  // namespace nal
