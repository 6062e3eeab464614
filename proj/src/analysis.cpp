#include "nal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <spdlog/spdlog.h>

#include "nal/errors.hpp"

namespace nal {

std::vector<double> default_epsilon_grid(int n, double lo, double hi) {
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw InputError("bad epsilon grid specification");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
    return g;
}

std::vector<double> default_t_grid() { return {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}; }

namespace {

void check_ascending(const std::vector<double>& g, const char* what, bool positive) {
    if (g.empty()) throw InputError(std::string(what) + " is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (positive && !(g[i] > 0.0)) throw InputError(std::string(what) + " must be positive");
        if (!positive && g[i] < 0.0) throw InputError(std::string(what) + " must be nonnegative");
        if (i > 0 && !(g[i] > g[i - 1])) throw InputError(std::string(what) + " must be strictly ascending");
    }
}

double shift_magnitude(const HamiltonianSpace& s, double r, double t, double eps) {
    if (t == 0.0 || !s.euclidean_metric) return 0.0;
    EquivariantForm one = EquivariantForm::scalar(s.chart.id, s.dim(), s.gdim(), Expr(1.0));
    BasicIntegrand shift_only(s, one, 1.0, 1.0);
    BasicIntegrand base(s, one, 0.0, 1.0);
    double worst = 0.0;
    for (const auto& p : s.sample_points(200, 19)) {
        if (s.mu2(p.data()) > r) continue;
        worst = std::max(worst, (shift_only.shift(p.data()) - base.shift(p.data())).norm());
    }
    return t * worst / eps;
}

std::vector<double> critical_list(const HamiltonianSpace& s, const SweepOptions& opt, double r) {
    if (opt.critical_values) return *opt.critical_values;
    CriticalOptions co;
    co.r_max = r + 1e-2;
    co.n_seeds = 64 * s.dim();
    co.workers = opt.quadrature.workers;
    return critical_values(find_critical_points(s, co)).values;
}

IntegralResult bi_at(const HamiltonianSpace& s, const EquivariantForm& alpha, double r, double t, double eps,
                     const QuadratureSpec& q, const std::vector<double>& crit) {
    BasicIntegralRequest req;
    req.space = &s;
    req.alpha = alpha;
    req.r = r;
    req.t = t;
    req.epsilon = eps;
    req.quadrature = q;
    req.critical_values = crit;
    req.check_closed = false;
    return basic_integral(req);
}

}  // namespace

TLimit t_limit(const std::function<IntegralResult(double)>& f, const std::vector<double>& t_grid, double tol,
               double t_cap) {
    check_ascending(t_grid, "t grid", false);
    TLimit L;
    std::vector<double> errs;
    std::vector<double> ts = t_grid;
    while (ts.back() > 0.0 && ts.back() * 2.0 <= t_cap) ts.push_back(ts.back() * 2.0);
    for (double t : ts) {
        IntegralResult r = f(t);
        L.t.push_back(t);
        L.values.push_back(r.value);
        errs.push_back(r.error);
        std::size_t k = L.values.size();
        if (k >= 2) {
            double d = std::abs(L.values[k - 1] - L.values[k - 2]);
            L.diffs.push_back(d);
            if (d <= tol + errs[k - 1] + errs[k - 2]) {
                L.converged = true;
                L.value = L.values.back();
                L.error = d + errs.back();
                break;
            }
        }
    }
    if (!L.converged) {
        L.value = L.values.back();
        L.error = L.diffs.empty() ? std::numeric_limits<double>::infinity() : L.diffs.back();
    }
    // log diff against t^2 over diffs above the floor
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < L.diffs.size(); ++k)
        if (L.diffs[k] > 1e-300) {
            xs.push_back(L.t[k + 1] * L.t[k + 1]);
            ys.push_back(std::log(L.diffs[k]));
        }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= ys.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        L.gaussian_slope = sxx > 0 ? sxy / sxx : 0.0;
    }
    return L;
}

SweepResult epsilon_sweep(const HamiltonianSpace& s, const EquivariantForm& alpha, double r, const TPolicy& policy,
                          const std::vector<double>& grid, const SweepOptions& opt) {
    check_ascending(grid, "epsilon grid", true);
    if (!(r > 0.0)) throw InputError("r must be positive");
    if (!policy.extrapolate && policy.t < 0.0) throw InputError("t must be nonnegative");
    if (policy.extrapolate) check_ascending(policy.t_grid, "t grid", false);
    std::vector<double> crit;
    if (opt.check_regular) {
        crit = critical_list(s, opt, r);
        for (double v : crit)
            if (std::abs(v - r) <= 1e-3)
                throw NotRegularError("r = " + std::to_string(r) + " is within 1e-3 of critical value " + std::to_string(v));
    }
    if (opt.check_closed) {
        double d = closedness_defect(s, alpha, 50);
        if (d > 1e-8) throw InputError("alpha_closed: |D alpha| = " + std::to_string(d));
    }
    SweepResult res;
    res.epsilon_grid = grid;
    res.provenance = s.name + " r=" + std::to_string(r) +
                     (policy.extrapolate ? " t=extrapolated" : " t=" + std::to_string(policy.t));
    for (double eps : grid) {
        if (policy.extrapolate) {
            TLimit L = t_limit([&](double t) { return bi_at(s, alpha, r, t, eps, opt.quadrature, crit); }, policy.t_grid,
                               policy.plateau_tol);
            L.shift_magnitude = shift_magnitude(s, r, policy.t_grid.back(), eps);
            if (!L.converged)
                throw ConvergenceError("no plateau in t at eps = " + std::to_string(eps) +
                                       "; Gaussian shift magnitude " + std::to_string(L.shift_magnitude));
            res.values.push_back(L.value);
            res.errors.push_back(L.error);
            res.t_used.push_back(L.t.back());
            res.limits.push_back(std::move(L));
        } else {
            IntegralResult v = bi_at(s, alpha, r, policy.t, eps, opt.quadrature, crit);
            res.values.push_back(v.value);
            res.errors.push_back(v.error);
            res.t_used.push_back(policy.t);
        }
    }
    return res;
}

cplx FitReport::poly(double eps) const {
    cplx v = 0.0, p = 1.0;
    for (const auto& c : poly_coeffs) {
        v += c * p;
        p *= eps;
    }
    return v;
}

namespace {

constexpr int kTailTerms = 4;

struct VarPro {
    const std::vector<double>& eps;
    const std::vector<cplx>& y;
    std::vector<double> w;
    int degree;
    double c_lo, c_hi;

    VarPro(const std::vector<double>& e, const std::vector<cplx>& v, int d) : eps(e), y(v), degree(d) {
        for (const auto& val : y) w.push_back(std::abs(val) > 1e-8 ? 1.0 / std::abs(val) : 1.0);
        c_lo = *std::min_element(eps.begin(), eps.end());
        c_hi = 20.0 * *std::max_element(eps.begin(), eps.end());
    }

    Mat design(double c, double q, bool with_tail) const {
        int m = static_cast<int>(eps.size());
        int cols = degree + 1 + (with_tail ? kTailTerms : 0);
        Mat A(m, cols);
        for (int i = 0; i < m; ++i) {
            double e = eps[i];
            for (int k = 0; k <= degree; ++k) A(i, k) = std::pow(e, k);
            if (with_tail)
                for (int j = 0; j < kTailTerms; ++j) A(i, degree + 1 + j) = std::pow(e, q + 0.5 * j) * std::exp(-c / e);
        }
        return A;
    }

    // Weighted least squares for real and imaginary parts over the same real design.
    double solve(const Mat& A, std::vector<cplx>& coef, std::vector<double>* resid) const {
        int m = static_cast<int>(A.rows()), k = static_cast<int>(A.cols());
        Mat Aw = A;
        for (int i = 0; i < m; ++i) Aw.row(i) *= w[i];
        Vec scale(k);
        for (int j = 0; j < k; ++j) {
            scale(j) = Aw.col(j).norm();
            if (scale(j) == 0.0) scale(j) = 1.0;
            Aw.col(j) /= scale(j);
        }
        Eigen::JacobiSVD<Mat> svd(Aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-13);
        Vec yr(m), yi(m);
        for (int i = 0; i < m; ++i) {
            yr(i) = w[i] * y[i].real();
            yi(i) = w[i] * y[i].imag();
        }
        Vec cr = svd.solve(yr).cwiseQuotient(scale);
        Vec ci = svd.solve(yi).cwiseQuotient(scale);
        coef.resize(k);
        for (int j = 0; j < k; ++j) coef[j] = cplx(cr(j), ci(j));
        double ss = 0.0;
        if (resid) resid->assign(m, 0.0);
        for (int i = 0; i < m; ++i) {
            cplx fit = 0.0;
            for (int j = 0; j < k; ++j) fit += A(i, j) * coef[j];
            double r = w[i] * std::abs(fit - y[i]);
            ss += r * r;
            if (resid) (*resid)[i] = r;
        }
        return ss;
    }

    double objective(double c, double q) const {
        std::vector<cplx> coef;
        return solve(design(c, q, true), coef, nullptr);
    }
};

double gsl_objective(const gsl_vector* v, void* params) {
    const VarPro* vp = static_cast<const VarPro*>(params);
    double c = std::exp(gsl_vector_get(v, 0));
    double q = gsl_vector_get(v, 1);
    c = std::clamp(c, vp->c_lo, vp->c_hi);
    q = std::clamp(q, -4.0, 4.0);
    return vp->objective(c, q);
}

struct TailFit {
    double c = 0.0, q = 0.0, ss = 0.0;
    std::vector<cplx> coef;
    std::vector<double> resid;
};

TailFit fit_degree(const std::vector<double>& eps, const std::vector<cplx>& y, int degree) {
    VarPro vp(eps, y, degree);
    double best = std::numeric_limits<double>::infinity(), bc = vp.c_lo, bq = 0.0;
    const int nc = 80;
    for (int i = 0; i < nc; ++i) {
        double c = vp.c_lo * std::pow(vp.c_hi / vp.c_lo, double(i) / (nc - 1));
        for (double q = -2.0; q <= 2.0 + 1e-12; q += 0.25) {
            double f = vp.objective(c, q);
            if (f < best) {
                best = f;
                bc = c;
                bq = q;
            }
        }
    }
    gsl_set_error_handler_off();
    const gsl_multimin_fminimizer_type* T = gsl_multimin_fminimizer_nmsimplex2;
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(T, 2);
    gsl_vector* x = gsl_vector_alloc(2);
    gsl_vector* step = gsl_vector_alloc(2);
    gsl_vector_set(x, 0, std::log(bc));
    gsl_vector_set(x, 1, bq);
    gsl_vector_set(step, 0, 0.1);
    gsl_vector_set(step, 1, 0.1);
    gsl_multimin_function fn{&gsl_objective, 2, &vp};
    gsl_multimin_fminimizer_set(m, &fn, x, step);
    for (int it = 0; it < 4000; ++it) {
        if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-11) == GSL_SUCCESS) break;
    }
    TailFit tf;
    tf.c = std::clamp(std::exp(gsl_vector_get(m->x, 0)), vp.c_lo, vp.c_hi);
    tf.q = std::clamp(gsl_vector_get(m->x, 1), -4.0, 4.0);
    if (m->fval > best) {
        tf.c = bc;
        tf.q = bq;
    }
    gsl_vector_free(x);
    gsl_vector_free(step);
    gsl_multimin_fminimizer_free(m);
    tf.ss = vp.solve(vp.design(tf.c, tf.q, true), tf.coef, &tf.resid);
    return tf;
}

}  // namespace

FitReport fit_poly_plus_tail(const std::vector<double>& eps, const std::vector<cplx>& values, int poly_degree_max,
                             double fit_tolerance) {
    if (eps.size() != values.size()) throw InputError("fit: grid and values differ in length");
    if (poly_degree_max < 0) throw InputError("fit: negative polynomial degree");
    FitReport rep;
    int n = static_cast<int>(eps.size());
    if (n < poly_degree_max + 4 + 2 || n < 2) {
        rep.skipped = true;
        rep.note = "fit skipped: " + std::to_string(n) + " grid points";
        spdlog::warn("{}", rep.note);
        return rep;
    }
    check_ascending(eps, "epsilon grid", true);
    std::vector<TailFit> fits;
    int chosen = -1;
    // A rate pinned at the smallest grid eps means exp(-c/eps) is not small anywhere on the grid.
    double rate_floor = 1.05 * eps.front();
    for (int d = 0; d <= poly_degree_max; ++d) {
        if (n < d + 1 + kTailTerms + 2) break;
        fits.push_back(fit_degree(eps, values, d));
        double mr = *std::max_element(fits.back().resid.begin(), fits.back().resid.end());
        rep.degree_max_residual.push_back(mr);
        if (mr <= fit_tolerance && fits.back().c > rate_floor) {
            chosen = d;
            break;
        }
    }
    bool ok = chosen >= 0;
    if (!ok)
        chosen = static_cast<int>(std::min_element(rep.degree_max_residual.begin(), rep.degree_max_residual.end()) -
                                  rep.degree_max_residual.begin());
    const TailFit& tf = fits[chosen];
    rep.degree = chosen;
    rep.within_tolerance = ok;
    rep.poly_coeffs.assign(tf.coef.begin(), tf.coef.begin() + chosen + 1);
    rep.tail_amplitudes.assign(tf.coef.begin() + chosen + 1, tf.coef.end());
    rep.tail_rate = tf.c;
    rep.tail_power = tf.q;
    rep.residuals = tf.resid;
    rep.max_residual = rep.degree_max_residual[chosen];

    // Log-log slope of the non-polynomial remainder on the smallest-eps third.
    int third = std::max(3, n / 3);
    std::vector<double> lx, ly;
    for (int i = 0; i < third; ++i) {
        double d = std::abs(values[i] - rep.poly(eps[i]));
        if (d > 0.0) {
            lx.push_back(std::log(eps[i]));
            ly.push_back(std::log(d));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
        mx /= lx.size();
        my /= ly.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
        rep.loglog_slope = sxx > 0 ? sxy / sxx : 0.0;
    } else {
        rep.loglog_slope = std::numeric_limits<double>::infinity();
    }

    if (!ok) {
        // A remainder decaying like a power of eps is not an exponential tail.
        if (rep.loglog_slope <= poly_degree_max + 1.0)
            throw DecompositionError("remainder after the polynomial decays like eps^" +
                                     std::to_string(rep.loglog_slope) + "; max residual " +
                                     std::to_string(rep.max_residual));
        rep.note = "fit residual above tolerance at some grid points";
    }

    if (n - 3 >= chosen + 1 + kTailTerms + 2) {
        std::vector<double> e2(eps.begin(), eps.end() - 3);
        std::vector<cplx> v2(values.begin(), values.end() - 3);
        TailFit t2 = fit_degree(e2, v2, chosen);
        for (int k = 0; k <= chosen; ++k) {
            double scale = std::max(1.0, std::abs(rep.poly_coeffs[k]));
            rep.coefficient_drift = std::max(rep.coefficient_drift, std::abs(t2.coef[k] - rep.poly_coeffs[k]) / scale);
        }
    }
    return rep;
}

RateFit fit_exponential_rate(const std::vector<double>& eps, const std::vector<double>& mags) {
    if (eps.size() != mags.size()) throw InputError("rate fit: grid and values differ in length");
    std::vector<int> idx;
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (mags[i] > 0.0 && std::isfinite(mags[i])) idx.push_back(static_cast<int>(i));
    RateFit rf;
    rf.used = static_cast<int>(idx.size());
    if (rf.used < 4) throw InputError("rate fit needs at least 4 nonzero values");
    Mat A(rf.used, 3);
    Vec b(rf.used);
    for (int k = 0; k < rf.used; ++k) {
        double e = eps[idx[k]];
        A(k, 0) = 1.0;
        A(k, 1) = std::log(e);
        A(k, 2) = -1.0 / e;
        b(k) = std::log(mags[idx[k]]);
    }
    Vec x = A.colPivHouseholderQr().solve(b);
    rf.intercept = x(0);
    rf.power = x(1);
    rf.rate = x(2);
    rf.rms = std::sqrt((A * x - b).squaredNorm() / rf.used);
    return rf;
}

ContributionRecord contribution(const HamiltonianSpace& s, const EquivariantForm& alpha, int index,
                                const CriticalValues& cv, const std::vector<double>& eps_grid,
                                const std::vector<double>& t_grid, const QuadratureSpec& q, double plateau_tol,
                                bool check_probes) {
    if (index < 0 || index >= static_cast<int>(cv.values.size())) throw InputError("contribution index out of range");
    check_ascending(eps_grid, "epsilon grid", true);
    check_ascending(t_grid, "t grid", false);
    ContributionRecord rec;
    rec.index = index;
    rec.critical_value = cv.values[index];
    rec.r_lo = cv.probes[index].first;
    rec.r_hi = cv.probes[index].second;
    rec.eps = eps_grid;
    const std::vector<double>& crit = cv.values;
    double ri = rec.critical_value;
    auto limit_at = [&](double r, double eps) {
        TLimit L = t_limit([&](double t) { return bi_at(s, alpha, r, t, eps, q, crit); }, t_grid, plateau_tol);
        L.shift_magnitude = shift_magnitude(s, r, t_grid.back(), eps);
        if (!L.converged)
            throw ConvergenceError("no plateau in t for r = " + std::to_string(r) + ", eps = " + std::to_string(eps) +
                                   "; Gaussian shift magnitude " + std::to_string(L.shift_magnitude));
        return L;
    };
    for (double eps : eps_grid) {
        TLimit hi = limit_at(rec.r_hi, eps);
        cplx v = hi.value;
        double err = hi.error;
        if (!std::isnan(rec.r_lo)) {
            TLimit lo = limit_at(rec.r_lo, eps);
            v -= lo.value;
            err += lo.error;
            rec.lo_limits.push_back(std::move(lo));
        }
        rec.hi_limits.push_back(std::move(hi));
        rec.values.push_back(v);
        rec.errors.push_back(err);
        if (check_probes) {
            double hi2 = rec.r_hi - 0.3 * (rec.r_hi - ri);
            cplx v2 = limit_at(hi2, eps).value;
            if (!std::isnan(rec.r_lo)) v2 -= limit_at(rec.r_lo + 0.3 * (ri - rec.r_lo), eps).value;
            rec.probe_shift = std::max(rec.probe_shift, std::abs(v2 - v));
        }
    }
    if (ri > 0.0 && eps_grid.size() >= 4) {
        std::vector<double> mags;
        for (const auto& v : rec.values) mags.push_back(std::abs(v));
        try {
            rec.rate = fit_exponential_rate(eps_grid, mags);
        } catch (const InputError&) {
        }
    }
    return rec;
}

DampingReport damping_check(const HamiltonianSpace& sp, const EquivariantForm& alpha, double r, double s,
                            const std::vector<double>& eps_grid, const SweepOptions& opt) {
    if (!(s > 0.0) || s > r) throw InputError("damping_check needs 0 < s <= r");
    check_ascending(eps_grid, "epsilon grid", true);
    DampingReport rep;
    rep.bound = -0.5 * s * (1.0 - 0.15);
    rep.eps = eps_grid;
    if (s == r) {
        rep.differences.assign(eps_grid.size(), 0.0);
        rep.noise.assign(eps_grid.size(), 0.0);
        rep.inconclusive = true;
        rep.note = "r = s: difference is identically zero";
        return rep;
    }
    TPolicy fixed;
    SweepOptions o = opt;
    if (!o.critical_values && o.check_regular) o.critical_values = critical_list(sp, opt, r);
    SweepResult a = epsilon_sweep(sp, alpha, r, fixed, eps_grid, o);
    o.check_closed = false;
    SweepResult b = epsilon_sweep(sp, alpha, s, fixed, eps_grid, o);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        double d = std::abs(a.values[i] - b.values[i]);
        double noise = a.errors[i] + b.errors[i] + 1e-14 * (std::abs(a.values[i]) + std::abs(b.values[i]));
        rep.differences.push_back(d);
        rep.noise.push_back(noise);
        if (d > 10.0 * noise) {
            xs.push_back(1.0 / eps_grid[i]);
            ys.push_back(std::log(d));
        }
    }
    rep.used = static_cast<int>(xs.size());
    if (rep.used < 3) {
        rep.inconclusive = true;
        rep.note = "difference below the quadrature noise floor";
        return rep;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
    rep.passed = rep.slope <= rep.bound;
    return rep;
}

GlobalConvergenceReport global_convergence_check(const HamiltonianSpace& s, const EquivariantForm& alpha,
                                                 const std::vector<double>& r_grid, double eps,
                                                 const SweepOptions& opt, double bound_c) {
    check_ascending(r_grid, "r grid", true);
    if (r_grid.size() < 3) throw InputError("global_convergence_check needs at least 3 radii");
    if (!(eps > 0.0)) throw InputError("epsilon must be positive");
    GlobalConvergenceReport rep;
    rep.r_grid = r_grid;
    rep.bound_c = bound_c;
    std::vector<double> crit;
    if (opt.check_regular) {
        crit = critical_list(s, opt, r_grid.back());
        for (double r : r_grid)
            for (double v : crit)
                if (std::abs(v - r) <= 1e-3) throw NotRegularError("r = " + std::to_string(r) + " is near a critical value");
    }
    if (opt.check_closed) {
        double d = closedness_defect(s, alpha, 50);
        if (d > 1e-8) throw InputError("alpha_closed: |D alpha| = " + std::to_string(d));
    }
    for (double r : r_grid) rep.values.push_back(bi_at(s, alpha, r, 0.0, eps, opt.quadrature, crit).value);
    for (std::size_t k = 0; k + 1 < r_grid.size(); ++k) {
        double inc = std::abs(rep.values[k + 1] - rep.values[k]);
        rep.increments.push_back(inc);
        double r = r_grid[k];
        rep.normalized.push_back(std::log(std::max(inc, 1e-300)) + r / (2.0 * eps) - 2.0 * bound_c * std::sqrt(r));
    }
    std::size_t m = rep.increments.size();
    bool decaying = true, bounded = true;
    for (std::size_t k = 1; k < m; ++k) {
        if (rep.increments[k] >= rep.increments[k - 1]) decaying = false;
        // polynomial prefactors allowed up to a factor 10 between consecutive radii
        if (rep.normalized[k] > rep.normalized[k - 1] + std::log(10.0)) bounded = false;
    }
    double last = rep.increments[m - 1], prev = rep.increments[m - 2];
    double rho = prev > 0.0 ? last / prev : 0.0;
    rep.limit = rep.values.back();
    if (decaying && rho < 1.0) {
        rep.limit_shift = last * rho / (1.0 - rho);
        cplx dir = rep.values.back() - rep.values[rep.values.size() - 2];
        if (std::abs(dir) > 0.0) rep.limit += dir / std::abs(dir) * rep.limit_shift;
    } else {
        rep.limit_shift = std::numeric_limits<double>::infinity();
    }
    rep.diverged = !decaying;
    rep.converged = decaying && bounded;
    if (rep.diverged) rep.note = "increments do not decay";
    else if (!bounded) rep.note = "increments exceed the exp(-r/(2 eps) + 2c sqrt(r)) envelope";
    return rep;
}

}  // namespace nal
