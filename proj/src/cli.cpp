#include "nal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "nal/analysis.hpp"
#include "nal/critical.hpp"
#include "nal/errors.hpp"
#include "nal/reduced.hpp"

namespace nal {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string g17(double v) { return fmt::format("{:.17g}", v); }

json cjson(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

json vjson(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

json cvjson(const std::vector<cplx>& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back(cjson(z));
    return a;
}

class Output {
public:
    Output(const RunConfig& cfg, std::vector<std::string>& files) : cfg_(cfg), files_(files) {
        dir_ = fs::path(cfg.out_dir);
        fs::create_directories(dir_);
        fs::remove(dir_ / "ERROR");
    }
    bool csv() const { return has("csv"); }
    bool json_out() const { return has("json"); }

    void write(const std::string& name, const std::string& text) {
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        f << text;
        f.flush();
        if (!f) throw InputError("cannot write " + (dir_ / name).string());
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    }
    void write_json(const std::string& name, const json& j) {
        if (json_out()) write(name, j.dump(2) + "\n");
    }
    // Row-at-a-time CSV so partial sweeps survive a failure.
    void begin_csv(const std::string& name, const std::string& header) {
        if (!csv()) return;
        write(name, header + "\n");
    }
    void append_csv(const std::string& name, const std::string& row) {
        if (!csv()) return;
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::app);
        f << row << "\n";
        f.flush();
    }

private:
    bool has(const std::string& f) const {
        return std::find(cfg_.formats.begin(), cfg_.formats.end(), f) != cfg_.formats.end();
    }
    const RunConfig& cfg_;
    std::vector<std::string>& files_;
    fs::path dir_;
};

const char* kSweepHeader = "epsilon,t,value_re,value_im,error_estimate";

std::string sweep_row(double eps, double t, cplx v, double err) {
    return g17(eps) + "," + g17(t) + "," + g17(v.real()) + "," + g17(v.imag()) + "," + g17(err);
}

json header(const std::string& cmd, const RunConfig& cfg, const HamiltonianSpace& s) {
    return json{{"command", cmd},
                {"config_hash", config_hash(cfg)},
                {"space", s.name},
                {"alpha", cfg.alpha},
                {"seed", cfg.seed}};
}

int default_degree(const RunConfig& cfg, const HamiltonianSpace& s) {
    if (cfg.poly_degree_max >= 0) return cfg.poly_degree_max;
    return std::max(0, (s.dim() - 2 * s.gdim()) / 2);
}

std::vector<double> critical_for(const HamiltonianSpace& s, const RunConfig& cfg, double r_max) {
    CriticalOptions co;
    co.r_max = r_max;
    co.n_seeds = 64 * s.dim();
    co.seed = cfg.seed;
    co.workers = cfg.quadrature.workers;
    return critical_values(find_critical_points(s, co)).values;
}

TPolicy policy_of(const RunConfig& cfg) {
    TPolicy p;
    p.extrapolate = cfg.t_extrapolate;
    p.t = cfg.t;
    p.t_grid = cfg.t_grid;
    return p;
}

json fit_json(const FitReport& f) {
    return json{{"skipped", f.skipped},
                {"within_tolerance", f.within_tolerance},
                {"degree", f.degree},
                {"poly_coeffs", cvjson(f.poly_coeffs)},
                {"tail_rate", f.tail_rate},
                {"tail_power", f.tail_power},
                {"tail_amplitudes", cvjson(f.tail_amplitudes)},
                {"max_residual", f.max_residual},
                {"degree_max_residual", vjson(f.degree_max_residual)},
                {"coefficient_drift", f.coefficient_drift},
                {"loglog_slope", f.loglog_slope},
                {"note", f.note}};
}

// ---- commands ----

int cmd_check(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string& msg) {
    json rep = header("check", cfg, s);
    json checks = json::array();
    std::vector<std::string> failed;
    auto add = [&](const std::string& name, double value, double threshold, bool below) {
        bool ok = below ? value < threshold : value > threshold;
        checks.push_back(json{{"name", name}, {"value", value}, {"threshold", threshold}, {"passed", ok}});
        if (!ok) failed.push_back(name);
    };
    add("moment_condition", check_moment_condition(s, 1000, cfg.seed).max_residual, 1e-10, true);
    add("omega_closed", closedness_residual(s, 200, cfg.seed), 1e-10, true);
    add("omega_nondegenerate", min_abs_det_omega(s, 200, cfg.seed), 1e-12, false);
    if (!s.linear_generators.empty()) {
        InvarianceReport inv = group_invariance(s, 100, cfg.seed);
        add("omega_invariant", inv.omega, 1e-10, true);
        add("moment_norm_invariant", inv.mu2, 1e-10, true);
        add("lambda_invariant", inv.lambda, 1e-10, true);
    }
    EquivariantForm alpha = parse_form(cfg.alpha, s.chart, s.algebra);
    add("alpha_closed", closedness_defect(s, alpha, 200, cfg.seed), 1e-8, true);
    add("alpha_invariant", invariance_residual(alpha, s.action, s.algebra, s.sample_points(100, cfg.seed), 4, cfg.seed),
        1e-8, true);
    rep["checks"] = checks;
    rep["passed"] = failed.empty();
    out.write_json("check.json", rep);
    if (failed.empty()) return 0;
    msg = "failed invariants:";
    for (const auto& f : failed) msg += " " + f;
    return 1;
}

int cmd_critical(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string&) {
    CriticalOptions co;
    co.r_max = cfg.critical_r_max;
    co.seed = cfg.seed;
    co.workers = cfg.quadrature.workers;
    auto comps = find_critical_points(s, co);
    CriticalValues cv = critical_values(comps);
    json rep = header("critical", cfg, s);
    json arr = json::array();
    out.begin_csv("critical.csv", "index,critical_value,moment_norm,point_count,local_model_passed");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        LocalModelReport lm = local_model_check(s, c, cfg.seed);
        json reps = json::array();
        for (const auto& p : c.representative_points) reps.push_back(vjson(p));
        arr.push_back(json{{"index", i},
                           {"critical_value", c.critical_value},
                           {"moment_norm", c.moment_norm},
                           {"point_count", c.point_count},
                           {"representatives", reps},
                           {"local_model",
                            {{"passed", lm.passed},
                             {"dim_h", lm.dim_h},
                             {"dim_k", lm.dim_k},
                             {"dim_x", lm.dim_x},
                             {"criticality", lm.criticality},
                             {"slice_beta_residual", lm.slice_beta_residual},
                             {"slice_q_residual", lm.slice_q_residual},
                             {"separation_ok", lm.separation_ok},
                             {"note", lm.note}}}});
        out.append_csv("critical.csv", fmt::format("{},{},{},{},{}", i, g17(c.critical_value), g17(c.moment_norm),
                                                   c.point_count, lm.passed ? 1 : 0));
    }
    rep["components"] = arr;
    rep["critical_values"] = vjson(cv.values);
    json probes = json::array();
    for (const auto& [lo, hi] : cv.probes) probes.push_back(json::array({lo, hi}));
    rep["probes"] = probes;
    out.write_json("critical.json", rep);
    return 0;
}

int cmd_bi(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string&) {
    BasicIntegralRequest req;
    req.space = &s;
    req.alpha = parse_form(cfg.alpha, s.chart, s.algebra);
    req.r = cfg.r;
    req.t = cfg.t;
    req.epsilon = cfg.epsilon;
    req.quadrature = cfg.quadrature;
    req.critical_values = critical_for(s, cfg, cfg.r + 1e-2);
    IntegralResult res = basic_integral(req);
    out.begin_csv("bi.csv", kSweepHeader);
    out.append_csv("bi.csv", sweep_row(cfg.epsilon, cfg.t, res.value, res.error));
    json rep = header("bi", cfg, s);
    rep["r"] = cfg.r;
    rep["t"] = cfg.t;
    rep["epsilon"] = cfg.epsilon;
    rep["value"] = cjson(res.value);
    rep["error_estimate"] = res.error;
    rep["nodes"] = res.nodes;
    out.write_json("bi.json", rep);
    return 0;
}

struct SweepData {
    std::vector<double> eps;
    std::vector<cplx> values;
    std::vector<double> errors;
    json limits = json::array();
};

json limit_json(double eps, const TLimit& L) {
    return json{{"epsilon", eps},          {"t", vjson(L.t)},
                {"diffs", vjson(L.diffs)}, {"converged", L.converged},
                {"gaussian_slope", L.gaussian_slope}, {"shift_magnitude", L.shift_magnitude}};
}

// Sweep one epsilon at a time so the CSV is flushed row by row.
SweepData run_sweep(const RunConfig& cfg, const HamiltonianSpace& s, const EquivariantForm& alpha, Output& out,
                    const std::string& csv_name) {
    SweepOptions opt;
    opt.quadrature = cfg.quadrature;
    opt.critical_values = critical_for(s, cfg, cfg.r + 1e-2);
    TPolicy pol = policy_of(cfg);
    out.begin_csv(csv_name, kSweepHeader);
    SweepData d;
    for (double eps : cfg.epsilon_grid) {
        SweepResult r = epsilon_sweep(s, alpha, cfg.r, pol, {eps}, opt);
        opt.check_closed = false;
        d.eps.push_back(eps);
        d.values.push_back(r.values[0]);
        d.errors.push_back(r.errors[0]);
        if (!r.limits.empty()) d.limits.push_back(limit_json(eps, r.limits[0]));
        out.append_csv(csv_name, sweep_row(eps, r.t_used[0], r.values[0], r.errors[0]));
    }
    return d;
}

int cmd_contribution(const RunConfig& cfg, const HamiltonianSpace& s, const EquivariantForm& alpha, Output& out) {
    CriticalOptions co;
    co.r_max = cfg.critical_r_max;
    co.seed = cfg.seed;
    co.workers = cfg.quadrature.workers;
    CriticalValues cv = critical_values(find_critical_points(s, co));
    int i = cfg.contribution_index;
    if (i >= static_cast<int>(cv.values.size()))
        throw InputError("contribution_index " + std::to_string(i) + " out of range; found " +
                         std::to_string(cv.values.size()) + " critical values");
    if (!cfg.probes.empty()) {
        double ri = cv.values[i];
        if (!(cfg.probes[0] < ri && ri < cfg.probes[1]))
            throw InputError("probes must straddle the critical value " + g17(ri));
        for (double v : cv.values)
            if (v != ri && v > cfg.probes[0] && v < cfg.probes[1]) throw InputError("probes enclose another critical value");
        cv.probes[i] = {cfg.probes[0], cfg.probes[1]};
    }
    double closed = closedness_defect(s, alpha, 50, cfg.seed);
    if (closed > 1e-8) throw InputError("alpha_closed: |D alpha| = " + g17(closed));
    out.begin_csv("contribution.csv", kSweepHeader);
    ContributionRecord all;
    json limits = json::array();
    for (double eps : cfg.epsilon_grid) {
        ContributionRecord rec = contribution(s, alpha, i, cv, {eps}, cfg.t_grid, cfg.quadrature);
        all.r_lo = rec.r_lo;
        all.r_hi = rec.r_hi;
        all.critical_value = rec.critical_value;
        all.eps.push_back(eps);
        all.values.push_back(rec.values[0]);
        all.errors.push_back(rec.errors[0]);
        all.probe_shift = std::max(all.probe_shift, rec.probe_shift);
        json lj{{"epsilon", eps}, {"hi", limit_json(eps, rec.hi_limits[0])}};
        if (!rec.lo_limits.empty()) lj["lo"] = limit_json(eps, rec.lo_limits[0]);
        limits.push_back(lj);
        out.append_csv("contribution.csv", sweep_row(eps, rec.hi_limits[0].t.back(), rec.values[0], rec.errors[0]));
    }
    json rep = header("sweep", cfg, s);
    rep["contribution_index"] = i;
    rep["critical_value"] = all.critical_value;
    rep["probes"] = json::array({std::isnan(all.r_lo) ? json(nullptr) : json(all.r_lo), all.r_hi});
    rep["probe_shift"] = all.probe_shift;
    rep["values"] = cvjson(all.values);
    rep["errors"] = vjson(all.errors);
    rep["t_limits"] = limits;
    if (all.critical_value > 0.0 && all.eps.size() >= 4) {
        std::vector<double> mags;
        for (const auto& v : all.values) mags.push_back(std::abs(v));
        RateFit rf = fit_exponential_rate(all.eps, mags);
        rep["rate_fit"] = json{{"rate", rf.rate}, {"power", rf.power}, {"intercept", rf.intercept}, {"rms", rf.rms}};
    }
    out.write_json("contribution.json", rep);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string&) {
    EquivariantForm alpha = parse_form(cfg.alpha, s.chart, s.algebra);
    if (cfg.contribution_index >= 0) return cmd_contribution(cfg, s, alpha, out);
    SweepData d = run_sweep(cfg, s, alpha, out, "sweep.csv");
    json rep = header("sweep", cfg, s);
    rep["r"] = cfg.r;
    rep["t_policy"] = cfg.t_extrapolate ? "extrapolated" : "fixed";
    rep["epsilon_grid"] = vjson(d.eps);
    rep["values"] = cvjson(d.values);
    rep["errors"] = vjson(d.errors);
    if (cfg.t_extrapolate) rep["t_limits"] = d.limits;
    out.write_json("sweep.json", rep);
    FitReport fit = fit_poly_plus_tail(d.eps, d.values, default_degree(cfg, s), cfg.fit_tolerance);
    rep["fit"] = fit_json(fit);
    out.write_json("sweep.json", rep);
    return 0;
}

int cmd_reduce(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string&) {
    EquivariantForm alpha = parse_form(cfg.alpha, s.chart, s.algebra);
    ZeroLevelData level = zero_level(s);
    KirwanResult kr = kirwan_integral(alpha, level, cfg.epsilon, cfg.quadrature);
    json rep = header("reduce", cfg, s);
    rep["reduced_dim"] = level.reduced_dim;
    rep["stabilizer_order"] = level.stabilizer_order;
    rep["level_volume"] = level.volume();
    rep["min_singular_dmu"] = level.min_singular_dmu;
    rep["connection_residual"] = connection_residual(level);
    rep["connection_equivariance_residual"] = connection_equivariance_residual(level, 50, cfg.seed);
    rep["kirwan"] = json{{"epsilon", cfg.epsilon},
                         {"value", cjson(kr.value)},
                         {"coefficients", cvjson(kr.coefficients)},
                         {"error", kr.error}};
    if (level.reduced_dim == 2) {
        ChernReport ch = chern_number(level);
        rep["chern_number"] = json{{"value", ch.value}, {"error", ch.error}, {"covering", ch.covering}};
    }
    if (level.reduced_dim >= 2) {
        NormalFormReport nf = normal_form_check(s, level, 0.2, 200, cfg.seed);
        rep["normal_form"] = json{{"passed", nf.passed},
                                  {"moment_residual", nf.moment_residual},
                                  {"closedness_residual", nf.closedness_residual},
                                  {"restriction_residual", nf.restriction_residual},
                                  {"collar_radius", nf.collar_radius},
                                  {"declared_radius", nf.declared_radius},
                                  {"note", nf.note}};
    }
    out.write_json("reduce.json", rep);

    json mesh{{"level_S", level.level_S}, {"mesh_order", level.mesh_order}, {"mesh_angles", level.mesh_angles}};
    json nodes = json::array();
    for (std::size_t k = 0; k < level.nodes.size(); ++k)
        nodes.push_back(json{{"x", vjson(level.nodes[k].x)}, {"weight", level.weights[k]}});
    mesh["nodes"] = nodes;
    out.write_json("level_mesh.json", mesh);

    int n = s.dim();
    std::string head = "node";
    for (int k = 0; k < n; ++k) head += ",x" + std::to_string(k + 1);
    for (int a = 0; a < static_cast<int>(level.curvature.size()); ++a)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) head += fmt::format(",F{}_{}_{}", a + 1, i + 1, j + 1);
    out.begin_csv("curvature.csv", head);
    CVec phi0 = CVec::Zero(s.gdim());
    for (std::size_t k = 0; k < level.nodes.size(); ++k) {
        const auto& x = level.nodes[k].x;
        std::string row = std::to_string(k);
        for (double v : x) row += "," + g17(v);
        for (const auto& F : level.curvature) {
            Dense d = F.evaluate(x.data(), phi0);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) row += "," + g17(d[(Mask(1) << i) | (Mask(1) << j)].real());
        }
        out.append_csv("curvature.csv", row);
    }
    return 0;
}

int cmd_compare(const RunConfig& cfg, const HamiltonianSpace& s, Output& out, std::string& msg) {
    EquivariantForm alpha = parse_form(cfg.alpha, s.chart, s.algebra);
    ZeroLevelData level = zero_level(s);
    KirwanResult kr = kirwan_integral(alpha, level, cfg.epsilon, cfg.quadrature);
    SweepData d = run_sweep(cfg, s, alpha, out, "sweep.csv");
    FitReport fit = fit_poly_plus_tail(d.eps, d.values, default_degree(cfg, s), cfg.fit_tolerance);
    if (fit.skipped) throw InputError("compare: " + fit.note);
    std::size_t m = std::max(fit.poly_coeffs.size(), kr.coefficients.size());
    double scale = 0.0;
    for (const auto& c : kr.coefficients) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) scale = 1.0;
    bool pass = true;
    json table = json::array();
    out.begin_csv("compare.csv", "power,fit_re,fit_im,kirwan_re,kirwan_im,relative_difference");
    for (std::size_t k = 0; k < m; ++k) {
        cplx f = k < fit.poly_coeffs.size() ? fit.poly_coeffs[k] : cplx(0.0);
        cplx q = k < kr.coefficients.size() ? kr.coefficients[k] : cplx(0.0);
        double rel = std::abs(f - q) / scale;
        bool ok = rel <= cfg.compare_tolerance;
        pass = pass && ok;
        table.push_back(json{{"power", k}, {"fit", cjson(f)}, {"kirwan", cjson(q)}, {"relative_difference", rel}, {"agree", ok}});
        out.append_csv("compare.csv", fmt::format("{},{},{},{},{},{}", k, g17(f.real()), g17(f.imag()), g17(q.real()),
                                                  g17(q.imag()), g17(rel)));
    }
    json rep = header("compare", cfg, s);
    rep["verdict"] = pass ? "PASS" : "FAIL";
    rep["tolerance"] = cfg.compare_tolerance;
    rep["coefficients"] = table;
    rep["fit"] = fit_json(fit);
    rep["kirwan_error"] = kr.error;
    rep["sweep"] = json{{"r", cfg.r}, {"epsilon_grid", vjson(d.eps)}, {"values", cvjson(d.values)}, {"errors", vjson(d.errors)}};
    out.write_json("compare.json", rep);
    if (!pass) {
        msg = "compare: FAIL, coefficients differ beyond " + g17(cfg.compare_tolerance);
        return 1;
    }
    msg = "compare: PASS";
    return 0;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"check", "critical", "bi", "sweep", "reduce", "compare"};
    return names;
}

CommandOutcome run_command(const std::string& command, const RunConfig& cfg) {
    CommandOutcome res;
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
        res.exit_code = 1;
        res.message = "unknown command: " + command;
        return res;
    }
    std::unique_ptr<Output> out;
    try {
        validate_config(cfg);
        out = std::make_unique<Output>(cfg, res.files);
        HamiltonianSpace s = catalog(cfg.space, cfg.space_params);
        parse_form(cfg.alpha, s.chart, s.algebra);
        spdlog::info("{}: space {} ({}), config {}", command, s.name, cfg.alpha, config_hash(cfg).substr(0, 12));
        if (command == "check") res.exit_code = cmd_check(cfg, s, *out, res.message);
        else if (command == "critical") res.exit_code = cmd_critical(cfg, s, *out, res.message);
        else if (command == "bi") res.exit_code = cmd_bi(cfg, s, *out, res.message);
        else if (command == "sweep") res.exit_code = cmd_sweep(cfg, s, *out, res.message);
        else if (command == "reduce") res.exit_code = cmd_reduce(cfg, s, *out, res.message);
        else res.exit_code = cmd_compare(cfg, s, *out, res.message);
    } catch (const Error& e) {
        res.exit_code = e.exit_code();
        res.message = e.what();
    } catch (const fs::filesystem_error& e) {
        res.exit_code = 1;
        res.message = e.what();
    }
    if (res.exit_code != 0 && out) {
        try {
            out->write("ERROR", fmt::format("exit_code: {}\nmessage: {}\n", res.exit_code, res.message));
        } catch (const Error&) {
        }
    }
    return res;
}

}  // namespace nal
