#include "nal/reduced.hpp"

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "nal/errors.hpp"
#include "nal/parallel.hpp"

namespace nal {

namespace {

// phi-free form compiled to a single program.
class CompiledForm {
public:
    explicit CompiledForm(const EquivariantForm& f) : n_(f.ambient_dim()) {
        std::vector<Expr> exprs;
        for (const auto& [k, c] : f.terms()) {
            for (int e : k.mono)
                if (e != 0) throw InputError("expected a phi-free form");
            masks_.push_back(k.mask);
            exprs.push_back(c);
        }
        prog_ = Program(exprs);
    }
    Dense eval(const double* x) const {
        thread_local std::vector<cplx> regs, out;
        Dense d(std::size_t(1) << n_, 0.0);
        out.resize(masks_.size());
        if (!masks_.empty()) prog_.eval(x, out.data(), regs);
        for (std::size_t i = 0; i < masks_.size(); ++i) d[masks_[i]] += out[i];
        return d;
    }
    // Antisymmetric matrix of the degree-2 part.
    Mat two_form(const double* x) const {
        Dense d = eval(x);
        Mat m = Mat::Zero(n_, n_);
        for (Mask k = 0; k < d.size(); ++k) {
            if (popcount(k) != 2) continue;
            int i = std::countr_zero(k), j = std::countr_zero(k & (k - 1));
            m(i, j) += d[k].real();
            m(j, i) -= d[k].real();
        }
        return m;
    }
    Vec one_form(const double* x) const {
        Dense d = eval(x);
        Vec v = Vec::Zero(n_);
        for (int i = 0; i < n_; ++i) v(i) = d[Mask(1) << i].real();
        return v;
    }

private:
    int n_;
    std::vector<Mask> masks_;
    Program prog_;
};

PhiMonomial zero_mono(int g) { return PhiMonomial(g, 0); }

EquivariantForm constant_form(const HamiltonianSpace& s, cplx c) {
    return EquivariantForm::scalar(s.chart.id, s.dim(), s.gdim(), Expr(c));
}

const RadialModel& u1_radial(const HamiltonianSpace& s) {
    if (!s.radial) throw InputError("zero_level needs a radial moment map");
    const RadialModel& rm = *s.radial;
    if (rm.kind == RadialModel::Kind::SU2Quadratic)
        throw NotRegularError("0 is not a regular value: the level set is the origin, where dmu vanishes");
    if (s.gdim() != 1) throw InputError("zero_level supports circle actions");
    if (!(rm.a > 0.0)) throw NotRegularError("0 is not a regular value: a <= 0");
    return rm;
}

}  // namespace

double ZeroLevelData::volume() const {
    CompensatedSum<double> acc;
    for (double w : weights) acc.add(w);
    return acc.value();
}

std::vector<EquivariantForm> curvature(const ZeroLevelData& level) { return level.curvature; }

EquivariantForm horizontal_projection(const EquivariantForm& beta, const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    EquivariantForm r = beta;
    for (int a = 0; a < s.gdim(); ++a) r = r - wedge(level.connection[a], contract_field(r, s.action.comps[a]));
    return r;
}

EquivariantForm cartan_map(const EquivariantForm& alpha, const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    int g = s.gdim();
    std::vector<std::vector<EquivariantForm>> powers(g);
    auto power = [&](int a, int k) -> const EquivariantForm& {
        auto& p = powers[a];
        if (p.empty()) p.push_back(constant_form(s, 1.0));
        while (static_cast<int>(p.size()) <= k) p.push_back(wedge(p.back(), level.curvature[a] * cplx(0.0, 1.0)));
        return p[k];
    };
    EquivariantForm r(s.chart.id, s.dim(), g);
    for (const auto& [k, c] : alpha.terms()) {
        EquivariantForm piece(s.chart.id, s.dim(), g);
        piece.add_term(k.mask, zero_mono(g), c);
        for (int a = 0; a < g; ++a)
            if (k.mono[a] > 0) piece = wedge(piece, power(a, k.mono[a]));
        r = r + piece;
    }
    return horizontal_projection(r, level);
}

EquivariantForm vertical_volume(const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    EquivariantForm v = constant_form(s, std::sqrt(s.algebra.inner_product.determinant()));
    for (int a = 0; a < s.gdim(); ++a) v = wedge(v, level.connection[a]);
    return v;
}

ZeroLevelData zero_level(const HamiltonianSpace& s, int mesh_density) {
    const RadialModel& rm = u1_radial(s);
    if (!s.euclidean_metric) throw InputError("zero_level needs the Euclidean metric");
    ZeroLevelData L;
    L.space = &s;
    L.level_S = rm.a;
    L.mesh_order = std::max(2, mesh_density / 2);
    L.mesh_angles = std::max(4, mesh_density);
    L.nodes = radial_level_nodes(rm, rm.a, L.mesh_order, L.mesh_angles);
    L.stabilizer_order = s.generic_stabilizer;
    L.reduced_dim = s.dim() - 2 * s.gdim();
    L.min_singular_dmu = std::numeric_limits<double>::infinity();
    for (const auto& nd : L.nodes) {
        L.weights.push_back(nd.weight * std::sqrt((nd.frame.transpose() * nd.frame).determinant()));
        Eigen::JacobiSVD<Mat> svd(s.moment_jacobian(nd.x.data()));
        L.min_singular_dmu = std::min(L.min_singular_dmu, svd.singularValues().minCoeff());
    }
    if (L.min_singular_dmu <= 1e-6)
        throw NotRegularError("dmu is not onto on mu^{-1}(0): min singular value " + std::to_string(L.min_singular_dmu));

    int n = s.dim();
    const auto& V = s.action.comps[0];
    std::vector<Expr> sq;
    for (int k = 0; k < n; ++k)
        if (!V[k].is_zero()) sq.push_back(V[k] * V[k]);
    Expr gram = sum(sq);
    EquivariantForm A(s.chart.id, n, 1);
    for (int k = 0; k < n; ++k)
        if (!V[k].is_zero()) A.add_term(Mask(1) << k, zero_mono(1), V[k] / gram);
    L.connection = {A};
    L.curvature = {exterior_d(A)};

    int m = L.reduced_dim / 2;
    EquivariantForm ref = wedge(exp_form_part(horizontal_projection(s.omega, L)).form_part(2 * m), vertical_volume(L));
    CompiledForm cref(ref);
    const LevelNode& nd = L.nodes[L.nodes.size() / 2];
    double v = nd.orient * pullback_top(cref.eval(nd.x.data()), nd.frame).real();
    if (v == 0.0) throw InputError("degenerate reference orientation on mu^{-1}(0)");
    L.orientation = v > 0 ? 1.0 : -1.0;
    return L;
}

double connection_residual(const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    double worst = 0.0;
    for (int a = 0; a < s.gdim(); ++a) {
        CompiledForm A(level.connection[a]);
        for (const auto& nd : level.nodes) {
            Vec Ax = A.one_form(nd.x.data());
            Mat Vm = s.action.matrix_at(nd.x.data());
            for (int b = 0; b < s.gdim(); ++b)
                worst = std::max(worst, std::abs(Ax.dot(Vm.col(b)) - (a == b ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double connection_equivariance_residual(const ZeroLevelData& level, int samples, unsigned seed) {
    const HamiltonianSpace& s = *level.space;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int a = 0; a < s.gdim(); ++a) {
        CompiledForm A(level.connection[a]);
        for (int i = 0; i < samples; ++i) {
            const LevelNode& p = level.nodes[rng() % level.nodes.size()];
            Vec xi(s.gdim());
            for (int b = 0; b < s.gdim(); ++b) xi(b) = ang(rng);
            Mat G = s.act_matrix(xi);
            Vec x = Eigen::Map<const Vec>(p.x.data(), s.dim());
            Vec v(s.dim());
            for (int k = 0; k < s.dim(); ++k) v(k) = nd(rng);
            Vec gx = G * x;
            worst = std::max(worst, std::abs(A.one_form(gx.data()).dot(G * v) - A.one_form(x.data()).dot(v)));
        }
    }
    return worst;
}

double horizontality_residual(const EquivariantForm& beta, const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    double worst = 0.0;
    for (int a = 0; a < s.gdim(); ++a) {
        EquivariantForm c = contract_field(beta, s.action.comps[a]);
        if (c.is_zero()) continue;
        CompiledForm cf(c);
        for (const auto& nd : level.nodes) {
            Dense d = cf.eval(nd.x.data());
            double norm = 0.0;
            for (const auto& v : d) norm += std::norm(v);
            worst = std::max(worst, std::sqrt(norm));
        }
    }
    return worst;
}

IntegralResult integrate_on_level(const EquivariantForm& beta, const ZeroLevelData& level, const QuadratureSpec& q) {
    EquivariantForm top = beta.form_part(level.space->dim() - 1);
    if (top.is_zero()) return IntegralResult{};
    CompiledForm cf(top);
    QuadratureSpec qq = q;
    qq.simplex_order = std::max(q.simplex_order, level.mesh_order);
    qq.angle_points = std::max(q.angle_points, level.mesh_angles);
    IntegralResult r = integrate_level_set(*level.space, level.level_S, [&](const double* x) { return cf.eval(x); }, qq);
    r.value *= level.orientation;
    return r;
}

KirwanResult kirwan_integral(const EquivariantForm& alpha, const ZeroLevelData& level, double eps, const QuadratureSpec& q) {
    if (!(eps > 0.0)) throw InputError("epsilon must be positive");
    const HamiltonianSpace& s = *level.space;
    EquivariantForm kappa = cartan_map(alpha, level);
    EquivariantForm base = wedge(kappa, exp_form_part(horizontal_projection(s.omega, level)));
    EquivariantForm vol = vertical_volume(level);
    EquivariantForm ff(s.chart.id, s.dim(), s.gdim());
    for (int a = 0; a < s.gdim(); ++a)
        for (int b = 0; b < s.gdim(); ++b)
            ff = ff + wedge(level.curvature[a], level.curvature[b]) * cplx(s.algebra.inner_product(a, b));
    double scale = level.stabilizer_order / s.algebra.group_volume;
    int kmax = level.reduced_dim / 4;
    KirwanResult res;
    EquivariantForm ffk = constant_form(s, 1.0);
    double fact = 1.0;
    cplx eps_k = 1.0;
    res.value = 0.0;
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) {
            ffk = wedge(ffk, ff);
            fact *= 2.0 * k;
            eps_k *= eps;
        }
        EquivariantForm beta = wedge(wedge(base, ffk), vol) * cplx(1.0 / fact);
        IntegralResult r = integrate_on_level(beta, level, q);
        res.coefficients.push_back(scale * r.value);
        res.error += scale * r.error * std::abs(eps_k);
        res.value += scale * r.value * eps_k;
    }
    return res;
}

ChernReport chern_number(const ZeroLevelData& level) {
    const HamiltonianSpace& s = *level.space;
    const RadialModel& rm = *s.radial;
    if (rm.pairs() != 2 || s.gdim() != 1) throw InputError("chern_number needs a two-dimensional reduced space");
    CompiledForm F(level.curvature[0]);
    double a = rm.a, w1 = rm.weights[0], w2 = rm.weights[1];
    auto run = [&](int order, int angles) {
        std::vector<double> vn, vw;
        gauss_legendre01(order, vn, vw);
        CompensatedSum<double> f_acc, o_acc;
        Mat om = s.omega_matrix(std::vector<double>(4, 0.0).data());
        double h = 2.0 * M_PI / angles;
        for (int i = 0; i < order; ++i)
            for (int j = 0; j < angles; ++j) {
                double v = vn[i], th = h * (j + 0.5);
                double rho2 = std::sqrt(a * (1.0 - v * v) / w2);
                double x[4] = {v * std::sqrt(a / w1), 0.0, rho2 * std::cos(th), rho2 * std::sin(th)};
                Vec dv(4), dth(4);
                double drho = -a * v / (w2 * rho2);
                dv << std::sqrt(a / w1), 0.0, drho * std::cos(th), drho * std::sin(th);
                dth << 0.0, 0.0, -rho2 * std::sin(th), rho2 * std::cos(th);
                double w = vw[i] * h;
                f_acc.add(w * dv.dot(F.two_form(x) * dth));
                o_acc.add(w * dv.dot(om * dth));
            }
        double sign = o_acc.value() > 0 ? 1.0 : -1.0;
        return sign * f_acc.value();
    };
    ChernReport rep;
    rep.covering = static_cast<int>(std::lround(w1)) / level.stabilizer_order;
    int order = 8, angles = 8;
    double prev = run(order, angles);
    for (int round = 0; round < 8; ++round) {
        order *= 2;
        angles *= 2;
        double cur = run(order, angles);
        rep.error = std::abs(cur - prev) / (2.0 * M_PI * rep.covering);
        prev = cur;
        if (rep.error < 1e-13) break;
    }
    rep.value = prev / (2.0 * M_PI * rep.covering);
    return rep;
}

namespace {

// Model two-form on mu^{-1}(0) x g in coordinates (u_1..u_{p-1}, theta_1..theta_p, nu).
struct ModelForm {
    const HamiltonianSpace& s;
    const ZeroLevelData& L;
    CompiledForm A, F;
    ModelForm(const HamiltonianSpace& sp, const ZeroLevelData& lv)
        : s(sp), L(lv), A(lv.connection[0]), F(lv.curvature[0]) {}

    LevelNode node(const Vec& q) const {
        const RadialModel& rm = *s.radial;
        int p = rm.pairs();
        std::vector<double> u(p), th(p);
        double rest = 1.0;
        for (int k = 0; k + 1 < p; ++k) {
            u[k] = q(k);
            rest -= q(k);
        }
        u[p - 1] = rest;
        for (int j = 0; j < p; ++j) th[j] = q(p - 1 + j);
        return radial_level_point(rm, L.level_S, u, th);
    }
    Mat matrix(const Vec& q) const {
        int d = s.dim() - 1;
        double nu = q(d);
        LevelNode nd = node(q);
        Mat fr = nd.frame;
        Mat m = Mat::Zero(d + 1, d + 1);
        m.topLeftCorner(d, d) = fr.transpose() * (s.omega_matrix(nd.x.data()) + nu * F.two_form(nd.x.data())) * fr;
        Vec a = fr.transpose() * A.one_form(nd.x.data());
        m.block(d, 0, 1, d) = a.transpose();
        m.block(0, d, d, 1) = -a;
        return m;
    }
};

double pf_real(const Mat& m) {
    std::vector<cplx> a(m.size());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) a[i * m.cols() + j] = m(i, j);
    return pfaffian(a, static_cast<int>(m.rows())).real();
}

}  // namespace

NormalFormReport normal_form_check(const HamiltonianSpace& s, const ZeroLevelData& level, double declared_radius,
                                   int samples, unsigned seed) {
    if (level.space != &s) throw InputError("normal_form_check: level data belongs to another space");
    if (s.gdim() != 1) throw InputError("normal_form_check supports circle actions");
    const RadialModel& rm = *s.radial;
    int p = rm.pairs(), d = s.dim() - 1;
    ModelForm model(s, level);
    CompiledForm PO(horizontal_projection(s.omega, level));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    NormalFormReport rep;
    rep.declared_radius = declared_radius;
    rep.samples = samples;
    std::vector<Vec> qs;
    while (static_cast<int>(qs.size()) < samples) {
        Vec q(d + 1);
        std::vector<double> e(p);
        double tot = 0.0;
        for (auto& v : e) tot += (v = -std::log(uni(rng)));
        bool ok = true;
        for (int k = 0; k < p; ++k) {
            e[k] /= tot;
            if (p > 1 && e[k] < 0.05) ok = false;
        }
        for (int k = 0; k + 1 < p; ++k) q(k) = e[k];
        for (int j = 0; j < p; ++j) q(p - 1 + j) = 2.0 * M_PI * uni(rng);
        q(d) = declared_radius * (2.0 * uni(rng) - 1.0);
        if (ok) qs.push_back(q);
    }
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const Vec& q = qs[i];
        LevelNode nd = model.node(q);
        Mat m = model.matrix(q);
        Vec V = s.action.matrix_at(nd.x.data()).col(0);
        Vec X = Vec::Zero(d + 1);
        X.head(d) = nd.frame.colPivHouseholderQr().solve(V);
        Vec r = m.transpose() * X;
        r(d) += 1.0;
        rep.moment_residual = std::max(rep.moment_residual, r.cwiseAbs().maxCoeff());
        Vec q0 = q;
        q0(d) = 0.0;
        Mat m0 = model.matrix(q0);
        Mat pw = nd.frame.transpose() * PO.two_form(nd.x.data()) * nd.frame;
        rep.restriction_residual = std::max(rep.restriction_residual, (m0.topLeftCorner(d, d) - pw).cwiseAbs().maxCoeff());
        if (i < 50) {
            double h = 1e-4;
            int D = d + 1;
            std::vector<Mat> dm(D);
            for (int k = 0; k < D; ++k) {
                Vec qp = q, qm = q, qp2 = q, qm2 = q;
                qp(k) += h;
                qm(k) -= h;
                qp2(k) += 2 * h;
                qm2(k) -= 2 * h;
                dm[k] = (8.0 * (model.matrix(qp) - model.matrix(qm)) - (model.matrix(qp2) - model.matrix(qm2))) / (12.0 * h);
            }
            for (int a = 0; a < D; ++a)
                for (int b = a + 1; b < D; ++b)
                    for (int c = b + 1; c < D; ++c) {
                        double v = dm[a](b, c) + dm[b](c, a) + dm[c](a, b);
                        rep.closedness_residual = std::max(rep.closedness_residual, std::abs(v));
                    }
        }
    }
    // Scan |nu| outward until the model Pfaffian changes sign or collapses at some sample.
    int n_scan = std::min<int>(64, static_cast<int>(qs.size()));
    double nu_max = std::max(1.0, 2.0 * declared_radius), step = 0.005;
    std::vector<double> pf0(n_scan);
    for (int i = 0; i < n_scan; ++i) {
        Vec q = qs[i];
        q(d) = 0.0;
        pf0[i] = pf_real(model.matrix(q));
    }
    double collar = nu_max;
    for (double sgn : {1.0, -1.0}) {
        for (double nu = step; nu <= nu_max + 1e-12; nu += step) {
            bool bad = false;
            for (int i = 0; i < n_scan && !bad; ++i) {
                Vec q = qs[i];
                q(d) = sgn * nu;
                double v = pf_real(model.matrix(q));
                if (v / pf0[i] < 1e-8) bad = true;
            }
            if (bad) {
                collar = std::min(collar, nu - step);
                break;
            }
        }
    }
    rep.collar_radius = collar;
    rep.passed = rep.moment_residual < 1e-10 && rep.closedness_residual < 1e-6 && rep.restriction_residual < 1e-10 &&
                 rep.collar_radius >= declared_radius;
    if (rep.collar_radius < declared_radius)
        rep.note = "model degenerates before the declared collar radius; valid up to |nu| = " + std::to_string(collar);
    return rep;
}

}  // namespace nal
