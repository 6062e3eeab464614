#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "nal/cli.hpp"
#include "nal/config.hpp"
#include "nal/errors.hpp"

using namespace nal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("nal_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig from_file(const std::string& name, const fs::path& out) {
    RunConfig c = load_config(std::string(NAL_SOURCE_DIR) + "/configs/" + name);
    c.out_dir = out.string();
    return c;
}

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(dir)) names.insert(fs::relative(e.path(), dir).string());
    return names;
}

}  // namespace

TEST_CASE("config round trip") {
    RunConfig c = parse_config(R"(
[space]
name = cn_u1
n = 2
a = 1.5

[alpha]
expr = "phi^2 + 1"

[numerics]
r = 0.2
epsilon_grid = log:0.02:0.2:7
t_grid = 0, 1, 4
t_policy = extrapolated
contribution_index = 1
probes = 0.2, 0.3

[quadrature]
tolerance = 1e-7

[output]
formats = json

[run]
seed = 9
workers = 3
)");
    CHECK(c.space_params.size() == 2);
    CHECK(c.alpha == "phi^2 + 1");
    CHECK(c.epsilon_grid.size() == 7);
    CHECK(c.epsilon_grid.front() == doctest::Approx(0.02));
    CHECK(c.t_extrapolate);
    CHECK(c.quadrature.workers == 3);
    std::string ini = to_ini(c);
    RunConfig back = parse_config(ini);
    CHECK(back == c);
    CHECK(to_ini(back) == ini);
    CHECK(parse_config(to_ini(RunConfig{})) == RunConfig{});
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config("[numerics]\nepsilon_grid = log:0.2:0.02:5\n"), InputError);
    CHECK_THROWS_AS(parse_config("[numerics]\nepsilon_grid = spiral:1:2:3\n"), InputError);
    CHECK_THROWS_AS(parse_config("[numerics]\nbogus = 1\n"), InputError);
    CHECK_THROWS_AS(parse_config("[extra]\nx = 1\n"), InputError);
    CHECK_THROWS_AS(validate_config(parse_config("[numerics]\nepsilon = -0.1\n")), InputError);
    CHECK_NOTHROW(validate_config(parse_config("[numerics]\nepsilon = 0.1\n")));
    CHECK_THROWS_AS(parse_config("[numerics]\nr = abc\n"), InputError);
    CHECK_THROWS_AS(parse_config("[run]\ncheck_closed = false\n"), InputError);
    CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), InputError);
}

TEST_CASE("config hash") {
    RunConfig a;
    RunConfig b = a;
    b.quadrature.workers = 8;
    b.out_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.epsilon = 0.07;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 64);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("check command and its negative controls") {
    fs::path out = scratch("check");
    CommandOutcome ok = run_command("check", from_file("cn1_check.ini", out / "ok"));
    CHECK(ok.exit_code == 0);
    CHECK(fs::exists(out / "ok" / "check.json"));
    CHECK_FALSE(fs::exists(out / "ok" / "ERROR"));

    CommandOutcome bad = run_command("check", from_file("cn1_corrupt.ini", out / "corrupt"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.message.find("moment_condition") != std::string::npos);
    std::string marker = slurp(out / "corrupt" / "ERROR");
    CHECK(marker.find("exit_code: 1") != std::string::npos);

    CommandOutcome open = run_command("check", from_file("cn1_nonclosed.ini", out / "nonclosed"));
    CHECK(open.exit_code == 1);
    CHECK(open.message.find("alpha_closed") != std::string::npos);
    CHECK(open.message.find("moment_condition") == std::string::npos);

    // a later success clears a stale marker
    CHECK(run_command("check", from_file("cn1_check.ini", out / "corrupt")).exit_code == 0);
    CHECK_FALSE(fs::exists(out / "corrupt" / "ERROR"));
    fs::remove_all(out);
}

TEST_CASE("exit codes of the other commands") {
    fs::path out = scratch("codes");
    CommandOutcome crit = run_command("bi", from_file("cn1_bi_critical_r.ini", out / "bi"));
    CHECK(crit.exit_code == 2);
    CHECK(fs::exists(out / "bi" / "ERROR"));

    RunConfig c = from_file("cn1_check.ini", out / "x");
    CHECK(run_command("frobnicate", c).exit_code == 1);
    CHECK_FALSE(fs::exists(out / "x"));

    c.quadrature.max_panels = 2;
    c.quadrature.tolerance = 1e-14;
    c.space_params = {{"a", "1"}, {"n", "2"}};
    c.alpha = "phi";
    c.t = 4.0;
    c.epsilon = 0.02;
    CHECK(run_command("bi", c).exit_code == 3);

    RunConfig su = from_file("c2su2_critical.ini", out / "su");
    CHECK(run_command("reduce", su).exit_code == 2);
    fs::remove_all(out);
}

TEST_CASE("compare reproduces the reduced integral") {
    fs::path out = scratch("compare");
    RunConfig c = from_file("cn2_compare.ini", out);
    CommandOutcome res = run_command("compare", c);
    CHECK(res.exit_code == 0);
    CHECK(res.message.find("PASS") != std::string::npos);
    for (const char* f : {"compare.csv", "compare.json", "sweep.csv"}) CHECK(fs::exists(out / f));
    std::string csv = slurp(out / "compare.csv");
    CHECK(csv.rfind("power,fit_re,fit_im,kirwan_re,kirwan_im,relative_difference\n", 0) == 0);
    fs::remove_all(out);
}

TEST_CASE("artifacts stay in the output directory and are deterministic") {
    fs::path root = scratch("det");
    const char* cmds[][2] = {{"critical", "c2su2_critical.ini"},
                             {"sweep", "cn1_contribution.ini"},
                             {"reduce", "cn2_compare.ini"},
                             {"bi", "cn2_compare.ini"}};
    for (auto& [cmd, file] : cmds) {
        CAPTURE(cmd);
        RunConfig a = from_file(file, root / "a"), b = from_file(file, root / "b"), w = from_file(file, root / "w");
        w.quadrature.workers = 4;
        CommandOutcome ra = run_command(cmd, a);
        REQUIRE(ra.exit_code == 0);
        REQUIRE(run_command(cmd, b).exit_code == 0);
        REQUIRE(run_command(cmd, w).exit_code == 0);
        std::set<std::string> expect(ra.files.begin(), ra.files.end());
        CHECK(listing(root / "a") == expect);
        for (const auto& f : ra.files) {
            CAPTURE(f);
            std::string x = slurp(root / "a" / f);
            CHECK_FALSE(x.empty());
            CHECK(x == slurp(root / "b" / f));
            CHECK(x == slurp(root / "w" / f));
        }
        fs::remove_all(root);
    }
}

TEST_CASE("command-line binary") {
    fs::path out = scratch("bin");
    std::string cfg = std::string(NAL_SOURCE_DIR) + "/configs/cn1_check.ini";
    std::string base = std::string("\"") + NAL_CLI_PATH + "\" -q --config \"" + cfg + "\" --out \"" + out.string() + "\" ";
    auto code = [](const std::string& cmd) {
        int st = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    };
    CHECK(code(base + "check") == 0);
    CHECK(fs::exists(out / "check.json"));
    CHECK(code(base + "--seed 3 --workers 2 critical") == 0);
    CHECK(fs::exists(out / "critical.csv"));
    CHECK(code(base + "nonsense") != 0);
    CHECK(code(std::string("\"") + NAL_CLI_PATH + "\" -q --config /nonexistent.ini check") != 0);
    std::string corrupt = std::string(NAL_SOURCE_DIR) + "/configs/cn1_corrupt.ini";
    CHECK(code(std::string("\"") + NAL_CLI_PATH + "\" -q --config \"" + corrupt + "\" --out \"" + out.string() +
               "\" check") == 1);
    fs::remove_all(out);
}
