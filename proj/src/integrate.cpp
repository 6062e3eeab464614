#include "nal/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <spdlog/spdlog.h>

#include "nal/critical.hpp"
#include "nal/errors.hpp"
#include "nal/parallel.hpp"

namespace nal {

namespace {

int max_phi_degree_of(const EquivariantForm& a) { return std::max(0, a.max_phi_degree()); }

}  // namespace

BasicIntegrand::BasicIntegrand(const HamiltonianSpace& s, const EquivariantForm& alpha, double t, double eps)
    : s_(s), t_(t), eps_(eps), n_(s.dim()), g_(s.gdim()), table_(s.algebra, eps, max_phi_degree_of(alpha)) {
    if (!(eps > 0.0)) throw InputError("epsilon must be positive");
    if (t < 0.0) throw InputError("t must be nonnegative");
    if (alpha.chart_id() != s.chart.id) throw InputError("alpha lives on a different chart");
    if (t != 0.0 && !s.euclidean_metric) throw InputError("t > 0 needs the Euclidean metric");
    ExprVec outs;
    for (const auto& [k, c] : alpha.terms()) {
        int id = -1;
        for (std::size_t i = 0; i < monos_.size(); ++i)
            if (monos_[i] == k.mono) id = static_cast<int>(i);
        if (id < 0) {
            id = static_cast<int>(monos_.size());
            monos_.push_back(k.mono);
        }
        terms_.push_back({k.mask, id, static_cast<int>(outs.size())});
        outs.push_back(c);
    }
    for (const auto& [k, c] : s.omega.terms()) {
        if (popcount(k.mask) != 2) continue;
        int i = std::countr_zero(k.mask);
        int j = std::countr_zero(k.mask & (k.mask - 1));
        omega_slots_.emplace_back(i * n_ + j, static_cast<int>(outs.size()));
        outs.push_back(c);
    }
    mu_slot_ = static_cast<int>(outs.size());
    for (const auto& m : s.moment_star) outs.push_back(m);
    w_slot_ = static_cast<int>(outs.size());
    ExprVec w(n_);
    for (int k = 0; k < n_; ++k) {
        ExprVec parts;
        for (int a = 0; a < g_; ++a)
            if (!s.action.comps[a][k].is_zero()) parts.push_back(s.moment_star[a] * s.action.comps[a][k]);
        w[k] = sum(parts);
        outs.push_back(w[k]);
    }
    dw_slot_ = static_cast<int>(outs.size());
    if (t_ != 0.0)
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) outs.push_back(w[k].diff(l));
    v_slot_ = static_cast<int>(outs.size());
    for (int k = 0; k < n_; ++k)
        for (int a = 0; a < g_; ++a) outs.push_back(s.action.comps[a][k]);
    prog_ = Program(outs);
    ip_inv_ = g_ > 0 ? Mat(s.algebra.inner_product.inverse()) : Mat();
}

void BasicIntegrand::eval_point(const double* x, std::vector<cplx>& out) const {
    thread_local std::vector<cplx> regs;
    out.resize(prog_.n_outputs());
    prog_.eval(x, out.data(), regs);
}

void BasicIntegrand::two_form(const std::vector<cplx>& out, std::vector<cplx>& om) const {
    om.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    for (const auto& [ij, slot] : omega_slots_) {
        int i = ij / n_, j = ij % n_;
        om[i * n_ + j] += out[slot];
        om[j * n_ + i] -= out[slot];
    }
    if (t_ != 0.0) {
        // d lambda with lambda_k = W_k: coefficient of dx_i ^ dx_j is d_i W_j - d_j W_i
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) {
                cplx v = t_ * (out[dw_slot_ + j * n_ + i] - out[dw_slot_ + i * n_ + j]);
                om[i * n_ + j] += v;
                om[j * n_ + i] -= v;
            }
    }
}

Vec BasicIntegrand::shift_from(const std::vector<cplx>& out) const {
    Vec m(g_);
    for (int a = 0; a < g_; ++a) m(a) = out[mu_slot_ + a].real();
    if (t_ != 0.0) {
        Vec w = Vec::Zero(g_);
        for (int a = 0; a < g_; ++a)
            for (int k = 0; k < n_; ++k) w(a) += out[w_slot_ + k].real() * out[v_slot_ + k * g_ + a].real();
        m += t_ * ip_inv_ * w;
    }
    return m;
}

Vec BasicIntegrand::shift(const double* x) const {
    std::vector<cplx> out;
    eval_point(x, out);
    return shift_from(out);
}

cplx BasicIntegrand::top(const double* x) const {
    thread_local std::vector<cplx> out, om;
    eval_point(x, out);
    two_form(out, om);
    Vec m = shift_from(out);
    thread_local std::vector<cplx> sgi;
    sgi.resize(monos_.size());
    for (std::size_t i = 0; i < monos_.size(); ++i) sgi[i] = table_.shifted(monos_[i], m);
    Mask full = (n_ >= 32) ? ~Mask(0) : ((Mask(1) << n_) - 1);
    thread_local std::vector<std::pair<Mask, cplx>> pf_cache;
    pf_cache.clear();
    cplx total = 0.0;
    for (const Term& t : terms_) {
        Mask J = full & ~t.mask;
        if (popcount(J) % 2) continue;
        cplx c = out[t.coeff_slot];
        if (c == 0.0 || sgi[t.mono_id] == 0.0) continue;
        cplx pf;
        auto it = std::find_if(pf_cache.begin(), pf_cache.end(), [&](const auto& e) { return e.first == J; });
        if (it != pf_cache.end()) {
            pf = it->second;
        } else {
            pf = exp_component(om, n_, J);
            pf_cache.emplace_back(J, pf);
        }
        total += static_cast<double>(wedge_sign(t.mask, J)) * c * sgi[t.mono_id] * pf;
    }
    return total;
}

Dense BasicIntegrand::full(const double* x) const {
    std::vector<cplx> out, om;
    eval_point(x, out);
    two_form(out, om);
    Vec m = shift_from(out);
    std::vector<TwoFormEntry> entries;
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            if (om[i * n_ + j] != 0.0) entries.push_back({i, j, om[i * n_ + j]});
    Dense e = exp_two_form(entries, n_);
    Dense res(e.size(), 0.0);
    for (const Term& t : terms_) {
        cplx f = out[t.coeff_slot] * table_.shifted(monos_[t.mono_id], m);
        if (f == 0.0) continue;
        for (Mask J = 0; J < e.size(); ++J) {
            if ((J & t.mask) || e[J] == 0.0) continue;
            res[J | t.mask] += static_cast<double>(wedge_sign(t.mask, J)) * f * e[J];
        }
    }
    return res;
}

void gauss_legendre01(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    auto zeros = boost::math::legendre_p_zeros<double>(order);
    std::vector<std::pair<double, double>> nw;
    for (double z : zeros) {
        double dp = boost::math::legendre_p_prime(order, z);
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        nw.emplace_back(z, w);
        if (z != 0.0) nw.emplace_back(-z, w);
    }
    std::sort(nw.begin(), nw.end());
    for (auto [z, w] : nw) {
        nodes.push_back(0.5 * (z + 1.0));
        weights.push_back(0.5 * w);
    }
}

namespace {

using Clock = std::chrono::steady_clock;

// Inner grid over (u in simplex, theta in torus) for the radial substitution.
struct InnerGrid {
    int pairs = 1;
    std::vector<std::vector<double>> u;      // full barycentric vectors (size pairs)
    std::vector<double> uw;
    std::vector<std::vector<double>> theta;  // size pairs
    std::vector<double> tw;
};

InnerGrid make_grid(int pairs, int order, int angles) {
    InnerGrid g;
    g.pairs = pairs;
    int d = pairs - 1;
    std::vector<double> gn, gw;
    gauss_legendre01(order, gn, gw);
    if (d == 0) {
        g.u.push_back({1.0});
        g.uw.push_back(1.0);
    } else {
        std::vector<int> idx(d, 0);
        while (true) {
            std::vector<double> u(pairs);
            double rest = 1.0, w = 1.0;
            for (int k = 0; k < d; ++k) {
                u[k] = rest * gn[idx[k]];
                w *= gw[idx[k]] * rest;
                rest *= (1.0 - gn[idx[k]]);
            }
            u[d] = rest;
            g.u.push_back(u);
            g.uw.push_back(w);
            int k = 0;
            while (k < d && ++idx[k] == order) idx[k++] = 0;
            if (k == d) break;
        }
    }
    std::vector<int> ti(pairs, 0);
    double h = 2.0 * M_PI / angles;
    while (true) {
        std::vector<double> th(pairs);
        for (int j = 0; j < pairs; ++j) th[j] = h * (ti[j] + 0.25);
        g.theta.push_back(th);
        g.tw.push_back(std::pow(h, pairs));
        int k = 0;
        while (k < pairs && ++ti[k] == angles) ti[k++] = 0;
        if (k == pairs) break;
    }
    return g;
}

void radial_point(const RadialModel& rm, double S, const std::vector<double>& u, const std::vector<double>& th, double* x) {
    for (int j = 0; j < rm.pairs(); ++j) {
        double sj = S * u[j] / rm.weights[j];
        double rho = std::sqrt(std::max(sj, 0.0));
        x[2 * j] = rho * std::cos(th[j]);
        x[2 * j + 1] = rho * std::sin(th[j]);
    }
}

double radial_jacobian(const RadialModel& rm, double S) {
    int n = rm.pairs();
    double w = 1.0;
    for (double v : rm.weights) w *= v;
    return std::pow(0.5, n) * std::pow(S, n - 1) / w;
}

cplx inner_sum(const RadialModel& rm, const InnerGrid& g, const TopFn& f, double S) {
    std::vector<double> x(2 * rm.pairs());
    CompensatedSum<cplx> acc;
    for (std::size_t i = 0; i < g.u.size(); ++i) {
        CompensatedSum<cplx> at;
        for (std::size_t k = 0; k < g.theta.size(); ++k) {
            radial_point(rm, S, g.u[i], g.theta[k], x.data());
            at.add(g.tw[k] * f(x.data()));
        }
        acc.add(g.uw[i] * at.value());
    }
    return acc.value() * radial_jacobian(rm, S);
}

struct Panel {
    double a, b;
    cplx kron, gauss;
    double err() const { return std::abs(kron - gauss); }
};

IntegralResult integrate_radial(const HamiltonianSpace& s, const TopFn& f, double r, const QuadratureSpec& q) {
    auto t0 = Clock::now();
    const RadialModel& rm = *s.radial;
    if (s.dim() != 2 * rm.pairs()) throw InputError("radial model does not match chart dimension");
    auto [s_lo, s_hi] = rm.s_range(r);
    IntegralResult res;
    if (!(s_hi > s_lo)) return res;

    // Inner grid escalation at sample S values.
    int order = 2, angles = 2;
    int pairs = rm.pairs();
    std::vector<double> probes;
    for (int k = 1; k <= 5; ++k) probes.push_back(s_lo + (s_hi - s_lo) * (k - 0.37) / 5.0);
    auto eval_probes = [&](int o, int a) {
        InnerGrid g = make_grid(pairs, o, a);
        std::vector<cplx> v(probes.size());
        parallel_for(probes.size(), q.workers, [&](std::size_t i) { v[i] = inner_sum(rm, g, f, probes[i]); });
        return v;
    };
    auto diff = [](const std::vector<cplx>& a, const std::vector<cplx>& b) {
        double d = 0.0, m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            d = std::max(d, std::abs(a[i] - b[i]));
            m = std::max(m, std::abs(b[i]));
        }
        return std::make_pair(d, m);
    };
    std::vector<cplx> base = eval_probes(order, angles);
    double inner_err = 0.0;
    for (int round = 0; round < 12; ++round) {
        bool changed = false;
        if (pairs > 1 && order < 24) {
            int o2 = std::min(24, order * 2);
            auto v = eval_probes(o2, angles);
            auto [d, m] = diff(base, v);
            order = o2;
            base = v;
            inner_err = std::max(inner_err, d);
            if (d > 0.1 * q.tolerance * m + q.abs_floor) changed = true;
        }
        if (angles < 128) {
            int a2 = angles * 2;
            auto v = eval_probes(order, a2);
            auto [d, m] = diff(base, v);
            if (d > 0.1 * q.tolerance * m + q.abs_floor) {
                angles = a2;
                base = v;
                changed = true;
            }
            inner_err = std::max(inner_err, d);
        }
        if (!changed) break;
    }
    angles = std::max(angles, std::min(q.angle_points, 2 * angles));
    order = std::max(order, pairs > 1 ? q.simplex_order : 1);
    InnerGrid grid = make_grid(pairs, order, angles);
    long per_node = static_cast<long>(grid.u.size() * grid.theta.size());

    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    using GL = boost::math::quadrature::gauss<double, 10>;
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = GL::weights();
    auto eval_panels = [&](std::vector<Panel>& panels) {
        std::vector<cplx> vals(panels.size() * 21);
        parallel_for(vals.size(), q.workers, [&](std::size_t idx) {
            const Panel& p = panels[idx / 21];
            int k = static_cast<int>(idx % 21);
            double mid = 0.5 * (p.a + p.b), half = 0.5 * (p.b - p.a);
            double xi = k <= 10 ? -xk[10 - k] : xk[k - 10];
            vals[idx] = inner_sum(rm, grid, f, mid + half * xi);
        });
        for (std::size_t pi = 0; pi < panels.size(); ++pi) {
            Panel& p = panels[pi];
            double half = 0.5 * (p.b - p.a);
            cplx kr = 0.0, ga = 0.0;
            for (int k = 0; k < 21; ++k) {
                int j = std::abs(k - 10);
                cplx v = vals[pi * 21 + k];
                kr += wk[j] * v;
                if (j % 2 == 1) ga += wg[j / 2] * v;
            }
            p.kron = kr * half;
            p.gauss = ga * half;
        }
        res.nodes += static_cast<long>(panels.size()) * 21 * per_node;
    };

    std::vector<double> cuts{s_lo};
    int init = 8;
    for (int k = 1; k < init; ++k) cuts.push_back(s_lo + (s_hi - s_lo) * k / init);
    if (rm.kind == RadialModel::Kind::U1Linear && rm.a > s_lo && rm.a < s_hi) cuts.push_back(rm.a);
    cuts.push_back(s_hi);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Panel> panels;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k + 1] - cuts[k] > 1e-14) panels.push_back({cuts[k], cuts[k + 1], 0.0, 0.0});
    eval_panels(panels);

    while (true) {
        std::sort(panels.begin(), panels.end(), [](const Panel& a, const Panel& b) { return a.a < b.a; });
        CompensatedSum<cplx> tot;
        double err = 0.0;
        for (const auto& p : panels) {
            tot.add(p.kron);
            err += p.err();
        }
        double target = std::max(q.tolerance * std::abs(tot.value()), q.abs_floor);
        if (err <= target) {
            res.value = tot.value();
            res.error = err + inner_err * (s_hi - s_lo);
            break;
        }
        if (static_cast<int>(panels.size()) >= q.max_panels) {
            res.value = tot.value();
            res.error = err;
            res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
            throw AccuracyError("radial quadrature did not reach the target tolerance", std::abs(res.value), err);
        }
        double share = target / panels.size();
        std::vector<Panel> keep, fresh;
        for (const auto& p : panels) {
            if (p.err() > share) {
                double m = 0.5 * (p.a + p.b);
                fresh.push_back({p.a, m, 0.0, 0.0});
                fresh.push_back({m, p.b, 0.0, 0.0});
            } else {
                keep.push_back(p);
            }
        }
        eval_panels(fresh);
        keep.insert(keep.end(), fresh.begin(), fresh.end());
        panels = std::move(keep);
    }
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

IntegralResult integrate_box(const HamiltonianSpace& s, const TopFn& f, double r, const QuadratureSpec& q) {
    auto t0 = Clock::now();
    int n = s.dim();
    Vec box = s.sample_halfwidth;
    auto run = [&](int order) {
        std::vector<double> gn, gw;
        gauss_legendre01(order, gn, gw);
        long total = 1;
        for (int k = 0; k < n; ++k) total *= order;
        std::vector<cplx> vals(total);
        parallel_for(static_cast<std::size_t>(total), q.workers, [&](std::size_t idx) {
            std::vector<double> x(n);
            double w = 1.0;
            std::size_t rest = idx;
            for (int k = 0; k < n; ++k) {
                int i = static_cast<int>(rest % order);
                rest /= order;
                x[k] = box(k) * (2.0 * gn[i] - 1.0);
                w *= 2.0 * box(k) * gw[i];
            }
            vals[idx] = (s.in_chart(x.data()) && s.mu2(x.data()) <= r) ? w * f(x.data()) : cplx(0.0);
        });
        CompensatedSum<cplx> acc;
        for (const auto& v : vals) acc.add(v);
        return std::make_pair(acc.value(), total);
    };
    auto [v1, n1] = run(q.box_order);
    auto [v2, n2] = run(2 * q.box_order);
    IntegralResult res;
    res.value = v2;
    res.error = std::abs(v2 - v1);
    res.nodes = n1 + n2;
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    if (res.error > std::max(q.tolerance * std::abs(v2), q.abs_floor))
        throw AccuracyError("box quadrature with rejection did not reach the target tolerance", std::abs(v2), res.error);
    return res;
}

}  // namespace

IntegralResult integrate_top(const HamiltonianSpace& s, const TopFn& f, double r, const QuadratureSpec& q) {
    if (!(r > 0.0)) throw InputError("r must be positive");
    std::string scheme = q.scheme;
    if (scheme == "auto") scheme = s.radial ? "radial" : "box";
    if (scheme == "radial") {
        if (!s.radial) throw InputError("radial quadrature needs a radial moment map");
        return integrate_radial(s, f, r, q);
    }
    if (scheme == "box") return integrate_box(s, f, r, q);
    throw InputError("unknown quadrature scheme: " + scheme);
}

IntegralResult integrate_over_Mr(const HamiltonianSpace& s, const EquivariantForm& form, double r, const QuadratureSpec& q) {
    int n = s.dim();
    Mask full = (Mask(1) << n) - 1;
    ExprVec tops;
    for (const auto& [k, c] : form.terms()) {
        if (k.mask != full) continue;
        if (monomial_degree(k.mono) != 0) throw InputError("integrate_over_Mr: form depends on phi");
        tops.push_back(c);
    }
    Expr top = sum(tops);
    if (top.is_zero()) return IntegralResult{};
    Program prog({top});
    return integrate_top(
        s,
        [&](const double* x) {
            thread_local std::vector<cplx> regs;
            cplx v;
            prog.eval(x, &v, regs);
            return v;
        },
        r, q);
}

LevelNode radial_level_point(const RadialModel& rm, double S, const std::vector<double>& u, const std::vector<double>& th) {
    int pairs = rm.pairs(), n = 2 * pairs, d = n - 1;
    LevelNode node;
    node.x.resize(n);
    radial_point(rm, S, u, th, node.x.data());
    node.u = u;
    node.theta = th;
    node.frame = Mat::Zero(n, d);
    node.dS = Vec::Zero(n);
    for (int j = 0; j < pairs; ++j) {
        double sj = S * u[j] / rm.weights[j];
        double rho = std::sqrt(sj);
        double c = std::cos(th[j]), sn = std::sin(th[j]);
        double dr = 0.5 / rho;
        node.dS(2 * j) = dr * c * u[j] / rm.weights[j];
        node.dS(2 * j + 1) = dr * sn * u[j] / rm.weights[j];
        for (int k = 0; k + 1 < pairs; ++k) {
            double dsj = S / rm.weights[j] * ((j == k ? 1.0 : 0.0) - (j == pairs - 1 ? 1.0 : 0.0));
            node.frame(2 * j, k) = dr * c * dsj;
            node.frame(2 * j + 1, k) = dr * sn * dsj;
        }
        node.frame(2 * j, pairs - 1 + j) = -rho * sn;
        node.frame(2 * j + 1, pairs - 1 + j) = rho * c;
    }
    Mat full(n, n);
    full.col(0) = node.dS;
    full.rightCols(d) = node.frame;
    node.orient = full.determinant() > 0 ? 1.0 : -1.0;
    return node;
}

std::vector<LevelNode> radial_level_nodes(const RadialModel& rm, double S, int order, int angles) {
    InnerGrid g = make_grid(rm.pairs(), order, angles);
    std::vector<LevelNode> out;
    out.reserve(g.u.size() * g.theta.size());
    for (std::size_t iu = 0; iu < g.u.size(); ++iu)
        for (std::size_t it = 0; it < g.theta.size(); ++it) {
            out.push_back(radial_level_point(rm, S, g.u[iu], g.theta[it]));
            out.back().weight = g.uw[iu] * g.tw[it];
        }
    return out;
}

cplx pullback_top(const Dense& form, const Mat& frame) {
    int n = static_cast<int>(frame.rows()), d = static_cast<int>(frame.cols());
    cplx v = 0.0;
    Mat sub(d, d);
    for (Mask m = 0; m < form.size(); ++m) {
        if (popcount(m) != d || form[m] == 0.0) continue;
        int r = 0;
        for (int i = 0; i < n; ++i)
            if (m & (Mask(1) << i)) sub.row(r++) = frame.row(i);
        v += form[m] * (d == 0 ? 1.0 : sub.determinant());
    }
    return v;
}

IntegralResult integrate_level_set(const HamiltonianSpace& s, double S, const FormFn& f, const QuadratureSpec& q) {
    if (!s.radial) throw InputError("level-set integration needs a radial moment map");
    if (!(S > 0.0)) throw InputError("level set S must be positive");
    auto t0 = Clock::now();
    const RadialModel& rm = *s.radial;
    int pairs = rm.pairs();
    auto run = [&](int order, int angles) {
        auto nodes = radial_level_nodes(rm, S, order, angles);
        std::vector<cplx> vals(nodes.size());
        parallel_for(nodes.size(), q.workers, [&](std::size_t i) {
            const LevelNode& nd = nodes[i];
            vals[i] = nd.orient * nd.weight * pullback_top(f(nd.x.data()), nd.frame);
        });
        CompensatedSum<cplx> acc;
        for (const auto& v : vals) acc.add(v);
        return std::make_pair(acc.value(), static_cast<long>(vals.size()));
    };
    IntegralResult res;
    int order = std::max(2, q.simplex_order), angles = std::max(4, q.angle_points);
    auto [v1, n1] = run(order, angles);
    res.nodes = n1;
    res.value = v1;
    res.error = std::abs(v1);
    for (int round = 0; round < 5; ++round) {
        if (pairs > 1) order *= 2;
        angles *= 2;
        auto [v2, n2] = run(order, angles);
        res.nodes += n2;
        res.error = std::abs(v2 - res.value);
        res.value = v2;
        if (res.error <= std::max(q.tolerance * std::abs(v2), q.abs_floor)) break;
    }
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

IntegralResult integrate_boundary(const HamiltonianSpace& s, const FormFn& f, double r, const QuadratureSpec& q) {
    if (!s.radial) throw InputError("boundary integration needs a radial moment map");
    auto [s_lo, s_hi] = s.radial->s_range(r);
    IntegralResult res = integrate_level_set(s, s_hi, f, q);
    if (s_lo > 0.0) {
        IntegralResult lo = integrate_level_set(s, s_lo, f, q);
        res.value -= lo.value;
        res.error += lo.error;
        res.nodes += lo.nodes;
        res.wall_time += lo.wall_time;
    }
    return res;
}

double integral_constant(const LieAlgebraSpec& g) { return g.group_volume * std::pow(2.0 * M_PI, g.dim); }

double closedness_defect(const HamiltonianSpace& s, const EquivariantForm& alpha, int n_samples, unsigned seed) {
    EquivariantForm da = equivariant_D(alpha, s.action);
    if (da.is_zero()) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (const auto& p : s.sample_points(n_samples, seed)) {
        CVec phi(s.gdim());
        for (int a = 0; a < s.gdim(); ++a) phi(a) = nd(rng);
        worst = std::max(worst, pointwise_norm(da, p.data(), phi));
    }
    return worst;
}

IntegralResult basic_integral(const BasicIntegralRequest& req) {
    if (!req.space) throw InputError("basic_integral: missing space");
    const HamiltonianSpace& s = *req.space;
    if (!(req.epsilon > 0.0)) throw InputError("epsilon must be positive");
    if (!(req.r > 0.0)) throw InputError("r must be positive");
    if (req.check_regular) {
        std::vector<double> crit;
        if (req.critical_values) {
            crit = *req.critical_values;
        } else {
            CriticalOptions o;
            o.r_max = req.r + 1e-2;
            o.n_seeds = 64 * s.dim();
            o.workers = req.quadrature.workers;
            crit = critical_values(find_critical_points(s, o)).values;
        }
        for (double v : crit)
            if (std::abs(v - req.r) <= 1e-3)
                throw NotRegularError("r = " + std::to_string(req.r) + " is within 1e-3 of critical value " + std::to_string(v));
    }
    if (req.check_closed) {
        double d = closedness_defect(s, req.alpha, 50);
        if (d > 1e-8) throw InputError("alpha_closed: |D alpha| = " + std::to_string(d));
    }
    BasicIntegrand bi(s, req.alpha, req.t, req.epsilon);
    IntegralResult r = integrate_top(s, [&](const double* x) { return bi.top(x); }, req.r, req.quadrature);
    double K = integral_constant(s.algebra);
    r.value /= K;
    r.error /= K;
    return r;
}

}  // namespace nal
