#include "nal/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "nal/analysis.hpp"
#include "nal/errors.hpp"

namespace nal {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n\"");
    auto e = s.find_last_not_of(" \t\r\n\"");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: " + key + " is not a number: '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    double d = to_double(key, v);
    if (d != std::floor(d)) throw InputError("config: " + key + " must be an integer");
    return static_cast<int>(d);
}

// "a, b, c" or "log:lo:hi:n" or "lin:lo:hi:n".
std::vector<double> to_grid(const std::string& key, const std::string& v) {
    if (v.rfind("log:", 0) == 0 || v.rfind("lin:", 0) == 0) {
        auto parts = split(v.substr(4), ':');
        if (parts.size() != 3) throw InputError("config: " + key + " range needs lo:hi:n");
        double lo = to_double(key, parts[0]), hi = to_double(key, parts[1]);
        int n = to_int(key, parts[2]);
        if (v[1] == 'o') return default_epsilon_grid(n, lo, hi);
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
        return g;
    }
    std::vector<double> g;
    for (const auto& p : split(v, ',')) g.push_back(to_double(key, p));
    return g;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const { return to_ini(*this) == to_ini(o); }

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    RunConfig c;
    c.epsilon_grid = default_epsilon_grid();
    c.t_grid = default_t_grid();
    static const std::set<std::string> sections{"space", "alpha", "numerics", "quadrature", "output", "run"};
    for (const auto& [sec, body] : tree) {
        if (!sections.count(sec)) throw InputError("config: unknown section [" + sec + "]");
        for (const auto& [key, node] : body) {
            std::string v = trim(node.data());
            std::string k = sec + "." + key;
            if (sec == "space") {
                if (key == "name") c.space = v;
                else c.space_params.emplace_back(key, v);
            } else if (sec == "alpha") {
                if (key == "expr") c.alpha = v;
                else throw InputError("config: unknown key " + k);
            } else if (sec == "numerics") {
                if (key == "r") c.r = to_double(k, v);
                else if (key == "t") c.t = to_double(k, v);
                else if (key == "epsilon") c.epsilon = to_double(k, v);
                else if (key == "epsilon_grid") c.epsilon_grid = to_grid(k, v);
                else if (key == "t_grid") c.t_grid = to_grid(k, v);
                else if (key == "t_policy") {
                    if (v != "fixed" && v != "extrapolated") throw InputError("config: t_policy is fixed or extrapolated");
                    c.t_extrapolate = v == "extrapolated";
                } else if (key == "contribution_index") c.contribution_index = to_int(k, v);
                else if (key == "probes") c.probes = to_grid(k, v);
                else if (key == "poly_degree_max") c.poly_degree_max = to_int(k, v);
                else if (key == "fit_tolerance") c.fit_tolerance = to_double(k, v);
                else if (key == "compare_tolerance") c.compare_tolerance = to_double(k, v);
                else if (key == "critical_r_max") c.critical_r_max = to_double(k, v);
                else throw InputError("config: unknown key " + k);
            } else if (sec == "quadrature") {
                if (key == "scheme") c.quadrature.scheme = v;
                else if (key == "tolerance") c.quadrature.tolerance = to_double(k, v);
                else if (key == "abs_floor") c.quadrature.abs_floor = to_double(k, v);
                else if (key == "angle_points") c.quadrature.angle_points = to_int(k, v);
                else if (key == "simplex_order") c.quadrature.simplex_order = to_int(k, v);
                else if (key == "box_order") c.quadrature.box_order = to_int(k, v);
                else if (key == "max_panels") c.quadrature.max_panels = to_int(k, v);
                else throw InputError("config: unknown key " + k);
            } else if (sec == "output") {
                if (key == "dir") c.out_dir = v;
                else if (key == "formats") {
                    c.formats.clear();
                    for (const auto& f : split(v, ',')) c.formats.push_back(f);
                } else throw InputError("config: unknown key " + k);
            } else if (sec == "run") {
                if (key == "seed") c.seed = static_cast<unsigned>(to_int(k, v));
                else if (key == "workers") c.quadrature.workers = to_int(k, v);
                else if (key == "check_closed" || key == "check_regular") throw InputError("config: " + k + " cannot be disabled");
                else throw InputError("config: unknown key " + k);
            }
        }
    }
    std::sort(c.space_params.begin(), c.space_params.end());
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_ini(const RunConfig& c) {
    std::ostringstream o;
    o << "[space]\nname = " << c.space << "\n";
    KeyValues params = c.space_params;
    std::sort(params.begin(), params.end());
    for (const auto& [k, v] : params) o << k << " = " << v << "\n";
    o << "\n[alpha]\nexpr = " << c.alpha << "\n";
    o << "\n[numerics]\n";
    o << "r = " << num(c.r) << "\nt = " << num(c.t) << "\nepsilon = " << num(c.epsilon) << "\n";
    o << "epsilon_grid = " << join(c.epsilon_grid) << "\n";
    o << "t_grid = " << join(c.t_grid) << "\n";
    o << "t_policy = " << (c.t_extrapolate ? "extrapolated" : "fixed") << "\n";
    o << "contribution_index = " << c.contribution_index << "\n";
    if (!c.probes.empty()) o << "probes = " << join(c.probes) << "\n";
    o << "poly_degree_max = " << c.poly_degree_max << "\n";
    o << "fit_tolerance = " << num(c.fit_tolerance) << "\n";
    o << "compare_tolerance = " << num(c.compare_tolerance) << "\n";
    o << "critical_r_max = " << num(c.critical_r_max) << "\n";
    const QuadratureSpec& q = c.quadrature;
    o << "\n[quadrature]\nscheme = " << q.scheme << "\ntolerance = " << num(q.tolerance)
      << "\nabs_floor = " << num(q.abs_floor) << "\nangle_points = " << q.angle_points
      << "\nsimplex_order = " << q.simplex_order << "\nbox_order = " << q.box_order
      << "\nmax_panels = " << q.max_panels << "\n";
    o << "\n[output]\ndir = " << c.out_dir << "\nformats = ";
    for (std::size_t i = 0; i < c.formats.size(); ++i) o << (i ? ", " : "") << c.formats[i];
    o << "\n\n[run]\nseed = " << c.seed << "\nworkers = " << q.workers << "\n";
    return o.str();
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream o;
    for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return o.str();
}

std::string config_hash(const RunConfig& c) {
    // workers and out_dir excluded
    RunConfig h = c;
    h.quadrature.workers = 1;
    h.out_dir = "out";
    return sha256_hex(to_ini(h));
}

void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& m) { throw InputError("config: " + m); };
    if (!(c.r > 0.0)) fail("numerics.r must be positive");
    if (c.t < 0.0) fail("numerics.t must be nonnegative");
    if (!(c.epsilon > 0.0)) fail("numerics.epsilon must be positive");
    if (c.epsilon_grid.empty()) fail("numerics.epsilon_grid is empty");
    for (std::size_t i = 0; i < c.epsilon_grid.size(); ++i) {
        if (!(c.epsilon_grid[i] > 0.0)) fail("numerics.epsilon_grid must be positive");
        if (i && !(c.epsilon_grid[i] > c.epsilon_grid[i - 1])) fail("numerics.epsilon_grid must be ascending");
    }
    if (c.t_grid.empty()) fail("numerics.t_grid is empty");
    for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
        if (c.t_grid[i] < 0.0) fail("numerics.t_grid must be nonnegative");
        if (i && !(c.t_grid[i] > c.t_grid[i - 1])) fail("numerics.t_grid must be ascending");
    }
    if (!c.probes.empty() && (c.probes.size() != 2 || !(c.probes[0] < c.probes[1])))
        fail("numerics.probes needs r' < r''");
    if (!(c.fit_tolerance > 0.0)) fail("numerics.fit_tolerance must be positive");
    if (!(c.compare_tolerance > 0.0)) fail("numerics.compare_tolerance must be positive");
    if (!(c.critical_r_max > 0.0)) fail("numerics.critical_r_max must be positive");
    const QuadratureSpec& q = c.quadrature;
    if (q.scheme != "auto" && q.scheme != "radial" && q.scheme != "box") fail("quadrature.scheme is auto, radial or box");
    if (!(q.tolerance > 0.0) || q.tolerance >= 1.0) fail("quadrature.tolerance must lie in (0, 1)");
    if (q.angle_points < 1 || q.simplex_order < 1 || q.box_order < 1 || q.max_panels < 1)
        fail("quadrature orders must be positive");
    if (q.workers < 1) fail("run.workers must be at least 1");
    if (c.out_dir.empty()) fail("output.dir is empty");
    for (const auto& f : c.formats)
        if (f != "csv" && f != "json") fail("output.formats accepts csv and json");
}

}  // namespace nal
