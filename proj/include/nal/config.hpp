#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nal/integrate.hpp"

namespace nal {

struct RunConfig {
    std::string space = "cn_u1";
    KeyValues space_params;  // remaining keys of [space], in key order
    std::string alpha = "1";

    double r = 0.16;
    double t = 0.0;
    double epsilon = 0.05;
    std::vector<double> epsilon_grid;
    std::vector<double> t_grid;
    bool t_extrapolate = false;
    int contribution_index = -1;  // sweep a contribution C_i instead of BI
    std::vector<double> probes;   // optional (r', r'') override for the contribution
    int poly_degree_max = -1;     // -1: ceil(dim M_red / 2)
    double fit_tolerance = 1e-5;
    double compare_tolerance = 5e-3;
    double critical_r_max = 1.0;

    QuadratureSpec quadrature;

    std::string out_dir = "out";
    std::vector<std::string> formats{"csv", "json"};
    unsigned seed = 1;

    bool operator==(const RunConfig& o) const;
};

// INI text with sections [space], [alpha], [numerics], [quadrature], [output], [run].
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Normalized INI; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& c);
// SHA-256 of the normalized INI text, hex.
std::string config_hash(const RunConfig& c);
// Checks numeric blocks against module preconditions.
void validate_config(const RunConfig& c);

std::string sha256_hex(const std::string& data);

}  // namespace nal
