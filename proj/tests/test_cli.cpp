#include <doctest.h>

#include <json.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "mcgl/errors.hpp"

using namespace mcgl::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("mcgl_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

int run_tool(const std::string& args, const fs::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && '" MCGL_BIN "' " + args + " >out.txt 2>err.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string f; std::getline(is, f, ',');) out.push_back(f);
    return out;
}

}  // namespace

TEST_CASE("number formatting") {
    CHECK(fmt17(std::nan("")) == "NaN");
    CHECK(fmt17(0.1) == "0.10000000000000001");
    CHECK(fmt17(2.0) == "2");
    for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23})
        CHECK(std::strtod(fmt17(v).c_str(), nullptr) == v);
    CHECK(fmt_short(0.1) == "0.1");
    CHECK(fmt_short(2.0) == "2");
}

TEST_CASE("config hash") {
    CHECK(config_hash("") == "cbf29ce484222325");
    CHECK(config_hash("a") == "af63dc4c8601ec8c");
    RunConfig a, b;
    CHECK(config_hash(a.canonical()) == config_hash(b.canonical()));
    b.eps_list = {0.1};
    CHECK(config_hash(a.canonical()) != config_hash(b.canonical()));
}

TEST_CASE("config file") {
    const fs::path d = scratch("config");
    write(d / "ok.ini",
          "[potential]\nkind = tilted-quartic\ntilt = 0.1\n[run]\neps_list = [0.2, 0.1]\nr_list = [2]\n"
          "n_max = 2\noutput_dir = out\n[tolerances]\nsolver = 1e-10\n[simulate]\nt_end = 1\n");
    const RunConfig c = load_config(d / "ok.ini");
    CHECK(c.potential.coeffs == mcgl::PotentialSpec::tilted_quartic(0.1).coeffs);
    CHECK(c.eps_list == std::vector<double>{0.2, 0.1});
    CHECK(c.r_list == std::vector<double>{2.0});
    CHECK(c.n_max == 2);
    CHECK(c.solver_tol == 1e-10);
    CHECK(c.t_end == 1.0);
    CHECK(c.output_dir == d / "out");

    write(d / "poly.ini", "[potential]\nkind = polynomial\ncoeffs = [2.25, -6, 5.5, -2, 0.25]\n");
    CHECK(load_config(d / "poly.ini").potential.coeffs == mcgl::PotentialSpec::tilted_quartic(0).coeffs);

    write(d / "unknown.ini", "[run]\nepsilon = 0.1\n");
    CHECK_THROWS_AS(load_config(d / "unknown.ini"), mcgl::Error);
    write(d / "empty.ini", "[run]\neps_list = []\n");
    CHECK_THROWS_AS(load_config(d / "empty.ini"), mcgl::Error);
    write(d / "neg.ini", "[tolerances]\nsolver = -1\n");
    CHECK_THROWS_AS(load_config(d / "neg.ini"), mcgl::Error);
    write(d / "bad.ini", "[run]\nn_max = two\n");
    CHECK_THROWS_AS(load_config(d / "bad.ini"), mcgl::Error);
}

TEST_CASE("maxwell-point") {
    const fs::path d = scratch("mp");
    write(d / "t.ini", "[potential]\ntilt = 0.1\n");
    REQUIRE(run_tool("maxwell-point --config t.ini", d) == 0);
    const auto j = nlohmann::json::parse(slurp(d / "maxwell_point.json"));
    CHECK(std::fabs(j["sigma0"].get<double>() - 0.1) < 1e-10);
    CHECK(std::fabs(j["b0"].get<double>()) < 1e-10);
    CHECK(std::fabs(j["alpha0"].get<double>() - 1) < 1e-10);
    CHECK(std::fabs(j["beta0"].get<double>() - 3) < 1e-10);
    CHECK(j["version"] == kVersion);
    CHECK(j["config_hash"].get<std::string>().size() == 16);

    REQUIRE(run_tool("maxwell-point", d) == 0);
    CHECK(std::fabs(nlohmann::json::parse(slurp(d / "maxwell_point.json"))["zeta0"].get<double>() - 2) < 1e-10);

    write(d / "convex.ini", "[potential]\nkind = polynomial\ncoeffs = [1, 0, 1, 0, 1]\n");
    CHECK(run_tool("maxwell-point --config convex.ini", d) == 2);
    CHECK(slurp(d / "err.txt").find("hypothesis") != std::string::npos);
}

TEST_CASE("solve") {
    const fs::path d = scratch("solve");
    REQUIRE(run_tool("solve --eps 0.1 --r 2", d) == 0);
    const auto j = nlohmann::json::parse(slurp(d / "solve_eps0.1_r2.json"));
    CHECK(std::fabs(j["res0"].get<double>()) < 1e-9);
    CHECK(std::fabs(j["res1"].get<double>()) < 1e-9);
    const auto prof = lines(slurp(d / "profile_eps0.1_r2.csv"));
    REQUIRE(prof.size() == 2003);
    CHECK(prof[0].rfind("# mcgl " + std::string(kVersion) + " config=", 0) == 0);
    CHECK(prof[0].substr(prof[0].find("config=") + 7) == j["config_hash"].get<std::string>());
    CHECK(prof[1] == "x,u");
    CHECK(split(prof[2])[0] == "-1");

    CHECK(run_tool("solve --eps 0.1 --r 0.5", d) == 3);
    CHECK(run_tool("solve --eps 3.0 --r 2", d) == 3);
    CHECK(run_tool("solve --eps 0.1", d) != 0);
}

TEST_CASE("sweep") {
    const fs::path d = scratch("sweep");
    write(d / "s.ini", "[run]\neps_list = [0.1, 0.2, 3.0, 0.15]\nr_list = [2, 1.5]\n");
    setenv("MCGL_THREADS", "1", 1);
    REQUIRE(run_tool("sweep --config s.ini --output-dir one", d) == 0);
    setenv("MCGL_THREADS", "4", 1);
    REQUIRE(run_tool("sweep --config s.ini --output-dir four", d) == 0);
    unsetenv("MCGL_THREADS");
    const std::string a = slurp(d / "one" / "convergence.csv"), b = slurp(d / "four" / "convergence.csv");
    CHECK(a == b);
    const auto ls = lines(a);
    REQUIRE(ls.size() == 10);
    CHECK(ls[0][0] == '#');
    CHECK(ls[1] == "eps,r,sigma,b,ln_h1,ln_h2,k1,k2,res0,res1,z1,z2,energy,iters,status");
    const double expect[8][2] = {{3.0, 1.5}, {0.2, 1.5}, {0.15, 1.5}, {0.1, 1.5},
                                 {3.0, 2.0}, {0.2, 2.0}, {0.15, 2.0}, {0.1, 2.0}};
    for (int i = 0; i < 8; ++i) {
        const auto f = split(ls[i + 2]);
        REQUIRE(f.size() == 15);
        CHECK(std::stod(f[0]) == expect[i][0]);
        CHECK(std::stod(f[1]) == expect[i][1]);
        if (expect[i][0] == 3.0) {
            CHECK(f[2] == "NaN");
            CHECK(f[13] == "NaN");
            CHECK(f[14] == "out_of_domain");
        } else {
            CHECK(f[14] == "ok");
            CHECK(std::fabs(std::stod(f[8])) < 1e-9);
        }
    }
}

TEST_CASE("rank, second-variation, limit-check") {
    const fs::path d = scratch("rank");
    REQUIRE(run_tool("rank --eps 0.1 --r 2", d) == 0);
    const auto rk = lines(slurp(d / "rank.csv"));
    REQUIRE(rk.size() >= 4);
    CHECK(rk[1] == "label,energy,status");
    CHECK(split(rk[2])[0] == "maxwell");

    REQUIRE(run_tool("second-variation --eps 0.05 --r 2 --n 2", d) == 0);
    const auto j = nlohmann::json::parse(slurp(d / "second_variation_eps0.05_r2_n2.json"));
    CHECK(j["J"].get<double>() < 0);

    write(d / "l.ini", "[run]\neps_list = [0.05, 0.2, 0.1]\nr_list = [2]\n");
    REQUIRE(run_tool("limit-check --config l.ini", d) == 0);
    const auto lim = lines(slurp(d / "limit.csv"));
    REQUIRE(lim.size() == 5);
    CHECK(lim[1] == "eps,r,sup_dev,interface_x,interface_err,ratio,status");
    double prev = 1e9;
    for (int i = 2; i < 5; ++i) {
        const double s = std::stod(split(lim[i])[2]);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("simulate") {
    const fs::path d = scratch("sim");
    write(d / "s.ini", "[simulate]\nt_end = 1\nn_cells = 64\nsample_interval = 0.1\n");
    REQUIRE(run_tool("simulate --config s.ini --init step", d) == 0);
    const auto tr = lines(slurp(d / "trace.csv"));
    CHECK(tr[1] == "t,mass,energy");
    CHECK(tr.size() >= 12);
    const auto sn = lines(slurp(d / "snapshot.csv"));
    CHECK(sn[1] == "x,u");
    CHECK(sn.size() == 66);

    // The snapshot is valid initial data for another run.
    write(d / "f.ini", "[simulate]\nt_end = 0.1\nn_cells = 64\ninit_file = snapshot.csv\n");
    CHECK(run_tool("simulate --config f.ini --init file --output-dir again", d) == 0);

    const std::string first = slurp(d / "trace.csv");
    REQUIRE(run_tool("simulate --config s.ini --init step", d) == 0);
    CHECK(slurp(d / "trace.csv") == first);

    CHECK(run_tool("simulate --config s.ini --init spinodal", d) == 0);
    CHECK(run_tool("simulate --config s.ini --init bogus", d) == 1);
    CHECK(run_tool("simulate --config s.ini --init file", d) == 1);
}
