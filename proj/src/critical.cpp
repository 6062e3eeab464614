#include "nal/critical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <spdlog/spdlog.h>

#include "nal/errors.hpp"
#include "nal/parallel.hpp"

namespace nal {

namespace {

// W = V(mu*) and its Jacobian, compiled once per space.
class CritEval {
public:
    explicit CritEval(const HamiltonianSpace& s) : s_(s), n_(s.dim()) {
        ExprVec w(n_);
        for (int k = 0; k < n_; ++k) {
            ExprVec terms;
            for (int a = 0; a < s.gdim(); ++a)
                if (!s.action.comps[a][k].is_zero()) terms.push_back(s.moment_star[a] * s.action.comps[a][k]);
            w[k] = sum(terms);
        }
        ExprVec outs = w;
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) outs.push_back(w[k].diff(l));
        prog_ = Program(outs);
    }

    void eval(const double* x, Vec& w, Mat& j) const {
        thread_local std::vector<cplx> regs, out;
        out.resize(prog_.n_outputs());
        prog_.eval(x, out.data(), regs);
        w.resize(n_);
        j.resize(n_, n_);
        for (int k = 0; k < n_; ++k) w(k) = out[k].real();
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) j(k, l) = out[n_ + k * n_ + l].real();
    }

    double f(const double* x) const {
        Vec w;
        Mat j;
        eval(x, w, j);
        return w.squaredNorm();
    }

    int dim() const { return n_; }
    const HamiltonianSpace& space() const { return s_; }

private:
    const HamiltonianSpace& s_;
    int n_;
    Program prog_;
};

Vec pinv_solve(const Mat& j, const Vec& rhs) {
    Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    double cut = sv.size() ? 1e-10 * sv(0) : 0.0;
    Vec y = svd.matrixU().transpose() * rhs;
    for (int i = 0; i < sv.size(); ++i) y(i) = sv(i) > cut && sv(i) > 0.0 ? y(i) / sv(i) : 0.0;
    return svd.matrixV() * y;
}

// Gauss-Newton with backtracking on |W|^2.
bool newton(const CritEval& ev, Vec& x, int max_iter, double step_tol) {
    Vec w;
    Mat j;
    for (int it = 0; it < max_iter; ++it) {
        ev.eval(x.data(), w, j);
        double f0 = w.squaredNorm();
        if (f0 == 0.0) return true;
        Vec d = -pinv_solve(j, w);
        double alpha = 1.0;
        Vec xn = x + d;
        double fn = ev.f(xn.data());
        while (fn > f0 && alpha > 1e-6) {
            alpha *= 0.5;
            xn = x + alpha * d;
            fn = ev.f(xn.data());
        }
        if (fn > f0) return f0 < 1e-16;
        double step = (xn - x).norm();
        x = xn;
        if (step < step_tol) return fn < 1e-16;
    }
    return ev.f(x.data()) < 1e-16;
}

void descend(const CritEval& ev, Vec& x, int iters) {
    Vec w;
    Mat j;
    for (int it = 0; it < iters; ++it) {
        ev.eval(x.data(), w, j);
        double f0 = w.squaredNorm();
        Vec g = 2.0 * j.transpose() * w;
        double g2 = g.squaredNorm();
        if (g2 < 1e-30) return;
        double alpha = std::min(1.0, 1.0 / std::sqrt(g2));
        while (alpha > 1e-12) {
            Vec xn = x - alpha * g;
            if (ev.f(xn.data()) <= f0 - 1e-4 * alpha * g2) {
                x = xn;
                break;
            }
            alpha *= 0.5;
        }
        if (alpha <= 1e-12) return;
    }
}

Vec seed_box(const HamiltonianSpace& s, double r_max) {
    if (s.radial) {
        const RadialModel& rm = *s.radial;
        double s_hi = rm.s_range(r_max).second;
        Vec box(s.dim());
        for (int j = 0; j < rm.pairs(); ++j) {
            double b = std::sqrt(s_hi / rm.weights[j]) * 1.05 + 1e-3;
            box(2 * j) = box(2 * j + 1) = b;
        }
        return box;
    }
    return s.sample_halfwidth;
}

struct Dsu {
    std::vector<int> p;
    explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int i) { return p[i] == i ? i : p[i] = find(p[i]); }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) p[std::max(a, b)] = std::min(a, b);
    }
};

bool path_connected(const CritEval& ev, const Vec& a, const Vec& b, double value, double radius) {
    double dist = (b - a).norm();
    int m = std::max(2, static_cast<int>(std::ceil(dist / (0.5 * radius))));
    Vec prev = a;
    for (int k = 1; k <= m; ++k) {
        Vec y = a + (b - a) * (static_cast<double>(k) / m);
        if (!newton(ev, y, 60, 1e-13)) return false;
        if (std::abs(ev.space().mu2(y.data()) - value) > 1e-6) return false;
        if ((y - prev).norm() > radius) return false;
        prev = y;
    }
    return (prev - b).norm() < radius;
}

}  // namespace

bool project_to_critical(const HamiltonianSpace& s, std::vector<double>& x, int max_iter) {
    CritEval ev(s);
    Vec v = Eigen::Map<Vec>(x.data(), s.dim());
    bool ok = newton(ev, v, max_iter, 1e-14);
    for (int k = 0; k < s.dim(); ++k) x[k] = v(k);
    return ok;
}

std::vector<CriticalComponent> find_critical_points(const HamiltonianSpace& s, const CriticalOptions& opt) {
    int n = s.dim();
    int n_seeds = opt.n_seeds > 0 ? opt.n_seeds : 256 * n;
    CritEval ev(s);
    Vec box = seed_box(s, opt.r_max);

    boost::random::sobol qrng(n);
    qrng.discard(static_cast<boost::uintmax_t>(opt.seed) * n);
    boost::random::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> seeds;
    long draws = 0;
    while (static_cast<int>(seeds.size()) < n_seeds && draws < 200L * n_seeds) {
        Vec x(n);
        for (int k = 0; k < n; ++k) x(k) = box(k) * u(qrng);
        ++draws;
        if (s.mu2(x.data()) <= opt.r_max && s.in_chart(x.data())) seeds.push_back(x);
    }

    std::vector<Vec> finals(seeds.size());
    std::vector<char> ok(seeds.size(), 0);
    parallel_for(seeds.size(), opt.workers, [&](std::size_t i) {
        Vec x = seeds[i];
        descend(ev, x, 30);
        if (newton(ev, x, 200, 1e-14) && s.in_chart(x.data())) {
            finals[i] = x;
            ok[i] = 1;
        }
    });

    struct Pt {
        Vec x;
        double value;
        double resid;
    };
    std::vector<Pt> pts;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!ok[i]) continue;
        double v = s.mu2(finals[i].data());
        if (std::abs(v - opt.r_max) < 1e-3)
            throw NotRegularError("critical value " + std::to_string(v) + " lies within 1e-3 of r_max");
        if (v > opt.r_max) continue;
        pts.push_back({finals[i], v, std::sqrt(ev.f(finals[i].data()))});
    }
    if (pts.empty()) {
        spdlog::warn("find_critical_points: no seed converged");
        return {};
    }

    // Value groups.
    std::vector<int> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return pts[a].value < pts[b].value; });
    std::vector<std::vector<int>> groups;
    for (int idx : order) {
        if (groups.empty() || pts[idx].value - pts[groups.back().back()].value > 1e-6)
            groups.push_back({idx});
        else
            groups.back().push_back(idx);
    }

    std::vector<CriticalComponent> comps;
    for (const auto& grp : groups) {
        std::vector<int> members = grp;
        std::sort(members.begin(), members.end());
        int m = static_cast<int>(members.size());
        double value = 0.0;
        for (int i : members) value += pts[i].value;
        value /= m;
        Dsu dsu(m);
        struct Pair {
            double d;
            int i, j;
        };
        std::vector<Pair> pairs;
        pairs.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) pairs.push_back({(pts[members[i]].x - pts[members[j]].x).norm(), i, j});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.d != b.d) return a.d < b.d;
            return std::make_pair(a.i, a.j) < std::make_pair(b.i, b.j);
        });
        std::set<std::pair<int, int>> failed;
        for (const auto& p : pairs) {
            int ri = dsu.find(p.i), rj = dsu.find(p.j);
            if (ri == rj) continue;
            if (p.d < opt.cluster_radius) {
                dsu.unite(ri, rj);
                continue;
            }
            auto key = std::minmax(ri, rj);
            if (failed.count(key)) continue;
            if (path_connected(ev, pts[members[p.i]].x, pts[members[p.j]].x, value, opt.cluster_radius))
                dsu.unite(ri, rj);
            else
                failed.insert(key);
        }
        std::map<int, std::vector<int>> clusters;
        for (int i = 0; i < m; ++i) clusters[dsu.find(i)].push_back(members[i]);
        for (const auto& [root, idxs] : clusters) {
            CriticalComponent c;
            c.point_count = static_cast<int>(idxs.size());
            double v = 0.0, tol = 0.0;
            for (int i : idxs) {
                v += pts[i].value;
                tol = std::max(tol, pts[i].resid);
                if (static_cast<int>(c.representative_points.size()) < opt.max_representatives)
                    c.representative_points.emplace_back(pts[i].x.data(), pts[i].x.data() + n);
            }
            c.critical_value = v / idxs.size();
            if (c.critical_value < 1e-14) c.critical_value = 0.0;
            c.moment_norm = std::sqrt(c.critical_value);
            c.beta_star = s.moment(c.representative_points.front().data());
            c.tolerance = std::max(tol, 1e-15);
            comps.push_back(std::move(c));
        }
    }
    std::stable_sort(comps.begin(), comps.end(), [](const CriticalComponent& a, const CriticalComponent& b) {
        if (std::abs(a.critical_value - b.critical_value) > 1e-6) return a.critical_value < b.critical_value;
        return a.representative_points.front() < b.representative_points.front();
    });
    return comps;
}

CriticalValues critical_values(const std::vector<CriticalComponent>& comps) {
    CriticalValues out;
    std::vector<double> vals;
    for (const auto& c : comps) vals.push_back(c.critical_value);
    std::sort(vals.begin(), vals.end());
    for (double v : vals) {
        if (!out.values.empty() && v - out.values.back() <= 1e-6) continue;
        if (!out.values.empty() && v - out.values.back() < 1e-4)
            throw InputError("critical values closer than 1e-4; refine the clustering tolerance");
        out.values.push_back(v);
    }
    std::size_t k = out.values.size();
    for (std::size_t i = 0; i < k; ++i) {
        double r = out.values[i];
        double lo, hi;
        if (i == 0)
            lo = r > 0.0 ? 0.5 * r : std::nan("");
        else
            lo = 0.5 * (out.values[i - 1] + r);
        if (i + 1 < k) {
            hi = 0.5 * (r + out.values[i + 1]);
        } else {
            double gap = i > 0 ? r - out.values[i - 1] : (r > 0.0 ? r : 1.0);
            hi = r + 0.5 * gap;
        }
        out.probes.emplace_back(lo, hi);
    }
    return out;
}

namespace {

Mat null_space(const Mat& a, int cols, double rel = 1e-9) {
    if (a.rows() == 0 || a.cols() == 0) return Mat::Identity(cols, cols);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    double scale = std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rel * scale) ++rank;
    return svd.matrixV().rightCols(cols - rank);
}

}  // namespace

LocalModelReport local_model_check(const HamiltonianSpace& s, const CriticalComponent& c, unsigned seed) {
    if (!s.euclidean_metric && s.radial == std::nullopt && s.linear_generators.empty())
        throw InputError("local_model_check: slice decomposition needs a linear catalog space");
    LocalModelReport rep;
    int n = s.dim(), gd = s.gdim();
    const auto& p = c.representative_points.front();
    const double* x0 = p.data();
    Vec beta = s.moment(x0);
    Mat V = s.action.matrix_at(x0);
    Mat g = s.metric(x0);
    Mat W = s.omega_matrix(x0);
    rep.criticality = (V * beta).norm();

    Mat h = null_space(V, gd);
    Mat k = null_space(s.algebra.ad(beta), gd, 1e-12);
    rep.dim_h = static_cast<int>(h.cols());
    rep.dim_k = static_cast<int>(k.cols());
    Mat vk = V * k;
    Mat cons(2 * vk.cols(), n);
    if (vk.cols() > 0) {
        cons.topRows(vk.cols()) = vk.transpose() * g;
        cons.bottomRows(vk.cols()) = vk.transpose() * W;
    }
    Mat B = null_space(cons, n);
    rep.dim_x = static_cast<int>(B.cols());

    // Linearized action on X: rho(xi) = B^T g DV_xi(p) B.
    std::vector<Mat> dv(gd, Mat(n, n));
    for (int a = 0; a < gd; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dv[a](i, j) = s.action.comps[a][i].diff(j).eval(x0).real();
    auto rho = [&](const Vec& xi) {
        Mat m = Mat::Zero(n, n);
        for (int a = 0; a < gd; ++a) m += xi(a) * dv[a];
        return Mat(B.transpose() * g * m * B);
    };
    Mat wx = B.transpose() * W * B;
    Mat rb = rho(beta);
    int hd = rep.dim_h;
    std::vector<Mat> rh;
    for (int b = 0; b < hd; ++b) rh.push_back(rho(h.col(b)));
    Mat ip_h = h.transpose() * s.algebra.inner_product * h;
    Mat ip_h_inv = hd > 0 ? Mat(ip_h.inverse()) : Mat();

    if (rep.dim_x > 0) {
        Eigen::JacobiSVD<Mat> svd(rb);
        double smax = std::max(1.0, svd.singularValues()(0));
        for (int i = 0; i < svd.singularValues().size(); ++i) {
            double sv = svd.singularValues()(i);
            if (sv > 1e-9 * smax)
                rep.beta_alpha.push_back(sv);
            else
                ++rep.kernel_beta;
        }
    }
    std::sort(rep.beta_alpha.begin(), rep.beta_alpha.end());

    auto q_of = [&](const Vec& x) {
        Vec q(hd);
        for (int b = 0; b < hd; ++b) q(b) = 0.5 * x.dot(wx * rh[b] * x);
        return q;
    };
    auto q_norm = [&](const Vec& q) { return hd > 0 ? std::sqrt(q.dot(ip_h_inv * q)) : 0.0; };

    // Nearby critical points (perturb and project), expressed in slice coordinates.
    {
        CritEval ev(s);
        std::mt19937_64 rng(seed + 17);
        std::normal_distribution<double> nd;
        for (int t = 0; t < 12; ++t) {
            Vec q = Eigen::Map<const Vec>(x0, n);
            for (int i = 0; i < n; ++i) q(i) += 1e-3 * nd(rng);
            if (!newton(ev, q, 100, 1e-15)) continue;
            if (std::abs(s.mu2(q.data()) - c.critical_value) > 1e-8) continue;
            Vec d = q - Eigen::Map<const Vec>(x0, n);
            double dn = d.norm();
            if (dn < 1e-9) continue;
            Vec x = B.transpose() * g * d;
            rep.slice_beta_residual = std::max(rep.slice_beta_residual, (rb * x).norm() / (dn * dn));
            rep.slice_q_residual = std::max(rep.slice_q_residual, q_norm(q_of(x)) / (dn * dn * dn));
            ++rep.slice_samples;
        }
    }

    // Separation: solutions of (beta + Q_x) x = 0 outside Z have |Q_x| >= min beta_alpha.
    if (rep.dim_x > 0 && !rep.beta_alpha.empty() && hd > 0) {
        double bmin = rep.beta_alpha.front();
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> ur(0.1, 3.0);
        int m = rep.dim_x;
        rep.separation_min_q = std::numeric_limits<double>::infinity();
        for (int t = 0; t < 64; ++t) {
            Vec x(m);
            for (int i = 0; i < m; ++i) x(i) = nd(rng);
            x *= ur(rng) * std::sqrt(2.0 * bmin) / x.norm();
            bool conv = false;
            for (int it = 0; it < 100; ++it) {
                Vec q = q_of(x);
                Vec qs = ip_h_inv * q;
                Mat A = rb;
                for (int b = 0; b < hd; ++b) A += qs(b) * rh[b];
                Vec F = A * x;
                if (F.norm() < 1e-13) {
                    conv = true;
                    break;
                }
                Mat J = A;
                for (int b = 0; b < hd; ++b) {
                    Mat sym = 0.5 * (wx * rh[b] + (wx * rh[b]).transpose());
                    Vec dq = sym * x;  // gradient of q_b
                    for (int e = 0; e < hd; ++e) J += (rh[e] * x) * (ip_h_inv(e, b) * dq).transpose();
                }
                Vec step = pinv_solve(J, F);
                x -= step;
                if (step.norm() < 1e-15) break;
            }
            if (!conv) continue;
            Vec q = q_of(x);
            bool in_z = (rb * x).norm() < 1e-8 && q_norm(q) < 1e-8;
            if (in_z || x.norm() < 1e-8) continue;
            ++rep.separation_solutions;
            rep.separation_min_q = std::min(rep.separation_min_q, q_norm(q));
        }
        if (rep.separation_solutions > 0) rep.separation_ok = rep.separation_min_q >= bmin * (1.0 - 1e-6);
        if (rep.separation_solutions == 0) rep.separation_min_q = 0.0;
    }

    double tol = std::max(1e-8, 10.0 * c.tolerance);
    rep.passed = rep.criticality < tol && rep.slice_beta_residual < 1e3 && rep.slice_q_residual < 1e3 && rep.separation_ok;
    if (rep.dim_h == 0) rep.note = "free orbit: Q vanishes identically";
    if (rep.beta_alpha.empty() && rep.dim_x > 0) rep.note = "beta acts trivially on X: Z is the zero set of Q";
    return rep;
}

}  // namespace nal
