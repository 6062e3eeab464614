#pragma once

#include <string>
#include <vector>

#include "nal/hamspace.hpp"

namespace nal {

struct CriticalComponent {
    std::vector<std::vector<double>> representative_points;
    int point_count = 0;  // converged seeds in the component
    double critical_value = 0.0;
    double moment_norm = 0.0;
    Vec beta_star;
    double tolerance = 0.0;
};

struct CriticalOptions {
    double r_max = 1.0;
    int n_seeds = 0;  // 0: 256 * dim
    unsigned seed = 1;
    double cluster_radius = 1e-2;
    int workers = 1;
    int max_representatives = 16;
};

// Zeros of V mu* found by descent on |V mu*|^2 followed by Gauss-Newton.
std::vector<CriticalComponent> find_critical_points(const HamiltonianSpace& s, const CriticalOptions& opt);

struct CriticalValues {
    std::vector<double> values;
    // Probes r' < r_i < r''; r' is NaN below the first value when that value is 0.
    std::vector<std::pair<double, double>> probes;
};

CriticalValues critical_values(const std::vector<CriticalComponent>& comps);

struct LocalModelReport {
    bool passed = false;
    int dim_h = 0, dim_k = 0, dim_x = 0;
    int kernel_beta = 0;
    std::vector<double> beta_alpha;  // nonzero singular values of beta on X
    double criticality = 0.0;        // |V beta| at the representative
    double slice_beta_residual = 0.0;
    double slice_q_residual = 0.0;
    int slice_samples = 0;
    double separation_min_q = 0.0;  // smallest |Q_x| over solutions outside Z
    int separation_solutions = 0;
    bool separation_ok = true;
    std::string note;
};

LocalModelReport local_model_check(const HamiltonianSpace& s, const CriticalComponent& c, unsigned seed = 5);

// Gauss-Newton projection onto the zero set of V mu*; returns false if not converged.
bool project_to_critical(const HamiltonianSpace& s, std::vector<double>& x, int max_iter = 200);

}  // namespace nal
