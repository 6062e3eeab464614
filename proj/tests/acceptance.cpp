// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nal/analysis.hpp"
#include "nal/cli.hpp"
#include "nal/errors.hpp"
#include "nal/reduced.hpp"
#include "oracles.hpp"

using namespace nal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::string digest;  // %.17g rendering of every number the criterion computed
};

class Digest {
public:
    Digest& operator<<(double v) {
        s_ += fmt::format("{:.17g};", v);
        return *this;
    }
    Digest& operator<<(cplx v) { return *this << v.real() << v.imag(); }
    Digest& operator<<(const std::vector<double>& v) {
        for (double x : v) *this << x;
        return *this;
    }
    Digest& operator<<(const std::vector<cplx>& v) {
        for (cplx x : v) *this << x;
        return *this;
    }
    const std::string& str() const { return s_; }

private:
    std::string s_;
};

QuadratureSpec quad(int workers) {
    QuadratureSpec q;
    q.workers = workers;
    return q;
}

SweepOptions sweep_opts(int workers) {
    SweepOptions o;
    o.quadrature = quad(workers);
    return o;
}

double max_norm(const EquivariantForm& f, const HamiltonianSpace& s, int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (const auto& p : s.sample_points(n, seed)) {
        CVec phi(s.gdim());
        for (int a = 0; a < s.gdim(); ++a) phi(a) = nd(rng);
        worst = std::max(worst, pointwise_norm(f, p.data(), phi));
    }
    return worst;
}

EquivariantForm leibniz_defect(const EquivariantForm& a, const EquivariantForm& b, const VectorFieldFamily& v) {
    EquivariantForm r = equivariant_D(wedge(a, b), v) - wedge(equivariant_D(a, v), b);
    for (int k = a.min_form_degree(); k <= a.max_form_degree(); ++k) {
        EquivariantForm ak = a.form_part(k);
        if (ak.is_zero()) continue;
        r = r - wedge(ak, equivariant_D(b, v)) * cplx(k % 2 ? -1.0 : 1.0);
    }
    return r;
}

Outcome foundation(int) {
    std::vector<HamiltonianSpace> spaces{cn_u1(1, 1.0), cn_u1(2, 1.0), cn_u1(3, 0.5), weighted_cn_u1({1, 2}, 1.0),
                                         c2_su2()};
    spaces.push_back(catalog("standard_model", {{"group", "u1"}, {"beta", "0"}, {"h", "k"}, {"x_weights", "1"}}));
    spaces.push_back(catalog("standard_model", {{"group", "su2"}, {"beta", "0,0,1"}, {"h", "trivial"}}));
    spaces.push_back(
        catalog("standard_model", {{"group", "su2"}, {"beta", "0,0,1"}, {"h", "k"}, {"x_weights", "1,-2"}}));
    Digest dg;
    double moment = 0.0;
    for (const auto& s : spaces) {
        MomentReport m = check_moment_condition(s, 1000);
        moment = std::max(moment, m.max_residual);
        dg << m.max_residual;
    }
    HamiltonianSpace s = cn_u1(2, 1.0);
    std::mt19937_64 rng(2024);
    double d2 = 0.0, leib = 0.0;
    for (int k = 0; k < 20; ++k) {
        EquivariantForm a = oracle::random_invariant_form(s, rng);
        EquivariantForm b = oracle::random_invariant_form(s, rng);
        double x = max_norm(equivariant_D(equivariant_D(a, s.action), s.action), s, 40, 100 + k);
        double y = max_norm(leibniz_defect(a, b, s.action), s, 40, 200 + k);
        d2 = std::max(d2, x);
        leib = std::max(leib, y);
        dg << x << y;
    }
    return {moment < 1e-10 && d2 < 1e-10 && leib < 1e-10,
            fmt::format("{} spaces moment {:.2e}, D^2 {:.2e}, Leibniz {:.2e}", spaces.size(), moment, d2, leib),
            dg.str()};
}

Outcome gaussian(int) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ue(0.2, 2.0), um(-1.0, 1.0);
    Digest dg;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        int d = 1 + trial % 3;
        LieAlgebraSpec a = trial % 2 ? oracle::diagonal_torus(d, rng)
                                     : builtin_algebra(d == 3 ? "su2" : "torus(" + std::to_string(d) + ")");
        PhiPolynomial p = oracle::random_phi_poly(d, 4, rng);
        Vec m(d);
        for (int k = 0; k < d; ++k) m(k) = um(rng);
        double eps = ue(rng);
        cplx fast = shifted_gaussian_integral(a, p, m, eps);
        cplx ref = oracle::direct_phi_integral(a, p, m, eps);
        double rel = std::abs(fast - ref) / std::abs(ref);
        worst = std::max(worst, rel);
        dg << fast;
    }
    return {worst < 1e-6, fmt::format("50 cases, max relative error {:.2e}", worst), dg.str()};
}

Outcome stokes(int workers) {
    HamiltonianSpace s = cn_u1(1, 1.0);
    QuadratureSpec q = quad(workers);
    Digest dg;
    bool ok = true;
    double worst = 0.0;
    const char* forms[] = {"x1*(1+y1^2)*dy1", "(x1^3 - y1)*phi*dx1 + x1*y1^2*dy1 + x1*phi^2", "exp(x1)*y1*dx1"};
    for (const char* text : forms) {
        EquivariantForm beta = parse_form(text, s.chart, s.algebra);
        EquivariantForm Db = equivariant_D(beta, s.action);
        for (double ph : {0.0, 0.7}) {
            CVec phi = CVec::Constant(1, ph);
            Mask top = 3;
            IntegralResult in = integrate_top(s, [&](const double* x) { return Db.evaluate(x, phi)[top]; }, 0.16, q);
            IntegralResult bd = integrate_boundary(s, [&](const double* x) { return beta.evaluate(x, phi); }, 0.16, q);
            double diff = std::abs(in.value - bd.value);
            double rel = diff / std::abs(in.value);
            worst = std::max(worst, rel);
            ok = ok && std::abs(in.value) > 1e-3 && (diff <= in.error + bd.error || rel <= 1e-6);
            dg << in.value << bd.value << in.error << bd.error;
        }
    }
    return {ok, fmt::format("3 non-closed forms x 2 phi values, max relative gap {:.2e}", worst), dg.str()};
}

int default_degree(const HamiltonianSpace& s) { return (s.dim() - 2 * s.gdim()) / 2; }

Outcome zero_contribution(int workers) {
    auto grid = default_epsilon_grid(25, 0.02, 0.2);
    Digest dg;
    HamiltonianSpace c1 = cn_u1(1, 1.0);
    SweepResult s1 = epsilon_sweep(c1, parse_form("1", c1.chart, c1.algebra), 0.16, TPolicy{}, grid, sweep_opts(workers));
    FitReport f1 = fit_poly_plus_tail(grid, s1.values, default_degree(c1));
    double e1 = std::abs(f1.poly_coeffs[0] - 1.0);
    for (std::size_t k = 1; k < f1.poly_coeffs.size(); ++k) e1 = std::max(e1, std::abs(f1.poly_coeffs[k]));

    HamiltonianSpace c2 = cn_u1(2, 1.0);
    EquivariantForm one = parse_form("1", c2.chart, c2.algebra);
    SweepResult s2 = epsilon_sweep(c2, one, 0.16, TPolicy{}, grid, sweep_opts(workers));
    FitReport f2 = fit_poly_plus_tail(grid, s2.values, default_degree(c2));
    KirwanResult k2 = kirwan_integral(one, zero_level(c2), 0.1, quad(workers));
    double scale = 0.0;
    for (cplx c : k2.coefficients) scale = std::max(scale, std::abs(c));
    double e2 = 0.0;
    for (std::size_t k = 0; k < std::max(f2.poly_coeffs.size(), k2.coefficients.size()); ++k) {
        cplx a = k < f2.poly_coeffs.size() ? f2.poly_coeffs[k] : 0.0;
        cplx b = k < k2.coefficients.size() ? k2.coefficients[k] : 0.0;
        e2 = std::max(e2, std::abs(a - b) / scale);
    }
    dg << s1.values << f1.poly_coeffs << s2.values << f2.poly_coeffs << k2.coefficients;
    return {!f1.skipped && !f2.skipped && e1 < 1e-3 && e2 < 5e-3,
            fmt::format("C: P0 = {:.8f} (|P - 1| {:.1e}); C^2: P0 = {:.8f} vs area {:.8f} (rel {:.1e})",
                        f1.poly_coeffs[0].real(), e1, f2.poly_coeffs[0].real(), k2.value.real(), e2),
            dg.str()};
}

Outcome kirwan_class(int workers) {
    auto grid = default_epsilon_grid(25, 0.02, 0.2);
    HamiltonianSpace s = cn_u1(2, 1.0);
    EquivariantForm phi = parse_form("phi", s.chart, s.algebra);
    SweepResult sw = epsilon_sweep(s, phi, 0.16, TPolicy{}, grid, sweep_opts(workers));
    FitReport f = fit_poly_plus_tail(grid, sw.values, default_degree(s));
    ZeroLevelData L = zero_level(s);
    KirwanResult k = kirwan_integral(phi, L, 0.1, quad(workers));
    ChernReport ch = chern_number(L);
    double scale = 0.0;
    for (cplx c : k.coefficients) scale = std::max(scale, std::abs(c));
    double e = 0.0;
    for (std::size_t j = 0; j < std::max(f.poly_coeffs.size(), k.coefficients.size()); ++j) {
        cplx a = j < f.poly_coeffs.size() ? f.poly_coeffs[j] : 0.0;
        cplx b = j < k.coefficients.size() ? k.coefficients[j] : 0.0;
        e = std::max(e, std::abs(a - b) / scale);
    }
    double integrality = std::abs(ch.value - std::round(ch.value));
    Digest dg;
    dg << sw.values << f.poly_coeffs << k.coefficients << ch.value;
    return {!f.skipped && e < 1e-2 && integrality < 1e-6 && std::round(ch.value) != 0.0,
            fmt::format("P0 = {:.6f}i vs Kirwan {:.6f}i (rel {:.1e}); Chern {:.10f}", f.poly_coeffs[0].imag(),
                        k.value.imag(), e, ch.value),
            dg.str()};
}

Outcome damping(int workers) {
    HamiltonianSpace s = cn_u1(1, 1.0);
    DampingReport d = damping_check(s, parse_form("1", s.chart, s.algebra), 0.36, 0.16,
                                    default_epsilon_grid(25, 0.02, 0.2), sweep_opts(workers));
    Digest dg;
    dg << d.differences << d.slope;
    return {d.passed && !d.inconclusive,
            fmt::format("slope {:.4f} vs bound {:.4f} over {} points", d.slope, d.bound, d.used), dg.str()};
}

Outcome contributions(int workers) {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    CriticalOptions co;
    co.workers = workers;
    CriticalValues cv = critical_values(find_critical_points(s, co));
    QuadratureSpec q = quad(workers);
    auto grid = default_epsilon_grid(12, 0.02, 0.2);
    ContributionRecord c1 = contribution(s, one, 1, cv, grid, default_t_grid(), q);
    double rate_err = std::abs(c1.rate.rate - 0.125) / 0.125;

    std::vector<double> check_eps{0.03, 0.05, 0.1};
    ContributionRecord c0 = contribution(s, one, 0, cv, check_eps, default_t_grid(), q, 1e-8, false);
    ContributionRecord c1s = contribution(s, one, 1, cv, check_eps, default_t_grid(), q, 1e-8, false);
    double worst = 0.0;
    bool sum_ok = true;
    Digest dg;
    for (std::size_t i = 0; i < check_eps.size(); ++i) {
        double eps = check_eps[i];
        TLimit big = t_limit(
            [&](double t) {
                BasicIntegralRequest req;
                req.space = &s;
                req.alpha = one;
                req.r = 0.36;
                req.t = t;
                req.epsilon = eps;
                req.critical_values = cv.values;
                req.quadrature = q;
                return basic_integral(req);
            },
            default_t_grid(), 1e-8);
        double gap = std::abs(c0.values[i] + c1s.values[i] - big.value);
        double tol = c0.errors[i] + c1s.errors[i] + big.error + 1e-9;
        worst = std::max(worst, gap);
        sum_ok = sum_ok && big.converged && gap <= tol;
        dg << big.value;
    }
    dg << c1.values << c1.rate.rate << c0.values << c1s.values;
    return {rate_err < 0.2 && sum_ok && c1.probe_shift < 1e-6,
            fmt::format("C1 rate {:.4f} (target 0.125, rel {:.1e}); |C0 + C1 - BI(0.36)| max {:.1e}", c1.rate.rate,
                        rate_err, worst),
            dg.str()};
}

double distance_to(const std::vector<double>& p, double radius) {
    double n = 0.0;
    for (double v : p) n += v * v;
    return std::abs(std::sqrt(n) - radius);
}

Outcome critical_sets(int workers) {
    struct Case {
        HamiltonianSpace s;
        std::vector<std::pair<double, double>> expect;  // (critical value, radius of the component)
    };
    std::vector<Case> cases{{cn_u1(1, 1.0), {{0.0, 1.0}, {0.25, 0.0}}},
                            {cn_u1(2, 1.0), {{0.0, 1.0}, {0.25, 0.0}}},
                            {c2_su2(), {{0.0, 0.0}}}};
    bool ok = true;
    double worst = 0.0;
    int reps = 0;
    Digest dg;
    for (const auto& c : cases) {
        CriticalOptions o;
        o.workers = workers;
        auto comps = find_critical_points(c.s, o);
        if (comps.size() != c.expect.size()) {
            ok = false;
            continue;
        }
        for (std::size_t i = 0; i < comps.size(); ++i) {
            worst = std::max(worst, std::abs(comps[i].critical_value - c.expect[i].first));
            for (const auto& p : comps[i].representative_points) {
                worst = std::max(worst, distance_to(p, c.expect[i].second));
                dg << p;
            }
            LocalModelReport lm = local_model_check(c.s, comps[i]);
            ok = ok && lm.passed;
            reps += static_cast<int>(comps[i].representative_points.size());
            dg << comps[i].critical_value << lm.slice_beta_residual << lm.slice_q_residual;
        }
    }
    return {ok && worst < 1e-6,
            fmt::format("3 spaces, {} representatives, max deviation {:.1e}, local models pass", reps, worst),
            dg.str()};
}

Outcome global_convergence(int workers) {
    HamiltonianSpace s = cn_u1(1, 1.0);
    EquivariantForm one = parse_form("1", s.chart, s.algebra);
    GlobalConvergenceReport a = global_convergence_check(s, one, {0.36, 0.64, 1.0, 2.0}, 0.05, sweep_opts(workers));
    GlobalConvergenceReport b = global_convergence_check(s, one, {0.36, 0.64, 1.0, 2.0, 3.0}, 0.05, sweep_opts(workers));
    double stability = std::abs(a.limit - b.limit);
    Digest dg;
    dg << a.values << a.increments << a.normalized << b.values << a.limit << b.limit;
    return {a.converged && b.converged && a.limit_shift < 1e-4 && stability < 1e-4,
            fmt::format("limit {:.10f}, shift {:.1e}, change with r = 3 added {:.1e}", a.limit.real(), a.limit_shift,
                        stability),
            dg.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Command outputs written to disk by two runs with workers 1 and one with workers 4.
bool cli_outputs_identical(std::string& detail) {
    fs::path root = fs::temp_directory_path() / "nal_acceptance";
    const char* cmds[][2] = {{"check", "cn1_check.ini"},
                             {"critical", "c2su2_critical.ini"},
                             {"sweep", "cn1_contribution.ini"},
                             {"compare", "cn2_compare.ini"}};
    int files = 0;
    for (auto& [cmd, file] : cmds) {
        std::vector<std::string> outs;
        std::vector<std::string> names;
        for (int run = 0; run < 3; ++run) {
            fs::path dir = root / std::to_string(run);
            fs::remove_all(dir);
            RunConfig c = load_config(std::string(NAL_SOURCE_DIR) + "/configs/" + file);
            c.out_dir = dir.string();
            c.quadrature.workers = run == 2 ? 4 : 1;
            CommandOutcome r = run_command(cmd, c);
            if (r.exit_code != 0) {
                detail = fmt::format("{} exited {}", cmd, r.exit_code);
                return false;
            }
            std::string all;
            for (const auto& f : r.files) all += f + "\n" + slurp(dir / f);
            outs.push_back(all);
            names = r.files;
        }
        if (outs[0] != outs[1] || outs[0] != outs[2]) {
            detail = fmt::format("{} outputs differ", cmd);
            return false;
        }
        files += static_cast<int>(names.size());
    }
    fs::remove_all(root);
    detail = fmt::format("{} CLI files identical", files);
    return true;
}

struct Criterion {
    int id;
    std::function<Outcome(int)> run;
    double limit_s;
};

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    std::vector<Criterion> criteria{{1, foundation, 30},       {2, gaussian, 60},       {3, stokes, 60},
                                    {4, zero_contribution, 300}, {5, kirwan_class, 300}, {6, damping, 300},
                                    {7, contributions, 600},    {8, critical_sets, 120}, {9, global_convergence, 300}};
    bool all = true;
    std::vector<std::array<std::string, 3>> digests;
    for (const auto& c : criteria) {
        std::array<std::string, 3> d;
        Outcome first;
        double secs = 0.0;
        bool threw = false;
        for (int run = 0; run < 3; ++run) {
            int workers = run == 2 ? 4 : 1;
            auto t0 = std::chrono::steady_clock::now();
            Outcome o;
            try {
                o = c.run(workers);
            } catch (const std::exception& e) {
                o = {false, std::string("exception: ") + e.what(), ""};
                threw = true;
            }
            double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (run == 0) {
                first = o;
                secs = dt;
            }
            d[run] = o.digest;
            if (threw) break;
        }
        bool ok = first.pass && secs < c.limit_s;
        all = all && ok;
        std::printf("CRITERION %2d %s  %7.2fs  %s\n", c.id, ok ? "PASS" : "FAIL", secs, first.detail.c_str());
        std::fflush(stdout);
        digests.push_back(d);
    }

    auto t0 = std::chrono::steady_clock::now();
    bool same = true;
    int mismatch = 0;
    for (std::size_t i = 0; i < digests.size(); ++i)
        if (digests[i][0].empty() || digests[i][0] != digests[i][1] || digests[i][0] != digests[i][2]) {
            same = false;
            mismatch = criteria[i].id;
        }
    std::string cli_detail;
    bool cli_same = cli_outputs_identical(cli_detail);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail = same ? "criteria 1-9 identical over 2 runs and workers 1/4; " + cli_detail
                              : fmt::format("criterion {} differs across runs or workers", mismatch);
    bool ok10 = same && cli_same;
    all = all && ok10;
    std::printf("CRITERION 10 %s  %7.2fs  %s\n", ok10 ? "PASS" : "FAIL", secs, detail.c_str());
    return all ? 0 : 1;
}
