#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nal/critical.hpp"
#include "nal/integrate.hpp"

namespace nal {

std::vector<double> default_epsilon_grid(int n = 25, double lo = 0.02, double hi = 0.2);
std::vector<double> default_t_grid();  // 0, 0.5, 1, 2, 4, 8, 16

// Large-t limit of t -> f(t) by plateau detection on an ascending grid. Past the grid, t keeps
// doubling up to t_cap before giving up.
struct TLimit {
    cplx value;
    double error = 0.0;
    bool converged = false;
    std::vector<double> t;
    std::vector<cplx> values;
    std::vector<double> diffs;     // |f(t_{k+1}) - f(t_k)|
    double gaussian_slope = 0.0;   // fitted slope of log diff against t^2
    double shift_magnitude = 0.0;  // t_max |G^{-1} <V mu*, V>| / eps over sampled points of M_r
};
TLimit t_limit(const std::function<IntegralResult(double)>& f, const std::vector<double>& t_grid, double tol,
               double t_cap = 256.0);

struct TPolicy {
    bool extrapolate = false;
    double t = 0.0;
    std::vector<double> t_grid = default_t_grid();
    double plateau_tol = 1e-8;
};

struct SweepResult {
    std::vector<double> epsilon_grid;
    std::vector<cplx> values;
    std::vector<double> errors;
    std::vector<double> t_used;  // t of the reported value (last grid t when extrapolating)
    std::vector<TLimit> limits;  // filled when extrapolating
    std::string provenance;
};

struct SweepOptions {
    QuadratureSpec quadrature;
    std::optional<std::vector<double>> critical_values;
    bool check_regular = true;
    bool check_closed = true;
};

SweepResult epsilon_sweep(const HamiltonianSpace& s, const EquivariantForm& alpha, double r, const TPolicy& policy,
                          const std::vector<double>& grid, const SweepOptions& opt = {});

// value(eps) = P(eps) + sum_j A_j eps^{q + j/2} exp(-c/eps), j < 4.
struct FitReport {
    bool skipped = false;
    bool within_tolerance = false;
    int degree = 0;
    std::vector<cplx> poly_coeffs;
    double tail_rate = 0.0;
    double tail_power = 0.0;
    std::vector<cplx> tail_amplitudes;
    std::vector<double> residuals;    // weighted (relative where |value| > 1e-8)
    double max_residual = 0.0;
    std::vector<double> degree_max_residual;  // best max residual per candidate degree
    double coefficient_drift = 0.0;   // change of poly_coeffs when the 3 largest-eps points are dropped
    double loglog_slope = 0.0;        // d log|value - P| / d log eps on the smallest-eps third
    std::string note;
    cplx poly(double eps) const;
};
FitReport fit_poly_plus_tail(const std::vector<double>& eps, const std::vector<cplx>& values, int poly_degree_max,
                             double fit_tolerance = 1e-5);

// log|C| = b + q log eps - c / eps by linear least squares.
struct RateFit {
    double rate = 0.0;
    double power = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
    int used = 0;
};
RateFit fit_exponential_rate(const std::vector<double>& eps, const std::vector<double>& magnitudes);

struct ContributionRecord {
    int index = 0;  // 0 is the mu^{-1}(0) component
    double critical_value = 0.0;
    double r_lo = 0.0, r_hi = 0.0;  // r_lo NaN: nothing below
    std::vector<double> eps;
    std::vector<cplx> values;
    std::vector<double> errors;
    std::vector<TLimit> hi_limits, lo_limits;
    double probe_shift = 0.0;  // max change under perturbed probes
    RateFit rate;              // filled for nonzero critical values
};
ContributionRecord contribution(const HamiltonianSpace& s, const EquivariantForm& alpha, int index,
                                const CriticalValues& cv, const std::vector<double>& eps_grid,
                                const std::vector<double>& t_grid, const QuadratureSpec& q, double plateau_tol = 1e-8,
                                bool check_probes = true);

struct DampingReport {
    bool passed = false;
    bool inconclusive = false;
    double slope = 0.0;
    double intercept = 0.0;
    double bound = 0.0;  // -s/2 (1 - 0.15)
    std::vector<double> eps;
    std::vector<double> differences;
    std::vector<double> noise;
    int used = 0;
    std::string note;
};
DampingReport damping_check(const HamiltonianSpace& sp, const EquivariantForm& alpha, double r, double s,
                            const std::vector<double>& eps_grid, const SweepOptions& opt = {});

struct GlobalConvergenceReport {
    bool converged = false;
    bool diverged = false;
    std::vector<double> r_grid;
    std::vector<cplx> values;
    std::vector<double> increments;
    std::vector<double> normalized;  // log inc + r/(2 eps) - 2 c sqrt(r)
    double bound_c = 1.0;
    cplx limit;
    double limit_shift = 0.0;  // |limit - last value|
    std::string note;
};
GlobalConvergenceReport global_convergence_check(const HamiltonianSpace& s, const EquivariantForm& alpha,
                                                 const std::vector<double>& r_grid, double eps,
                                                 const SweepOptions& opt = {}, double bound_c = 1.0);

}  // namespace nal
