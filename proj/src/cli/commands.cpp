#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mcgl/cahn_hilliard.hpp"
#include "mcgl/errors.hpp"
#include "mcgl/phase_plane.hpp"
#include "mcgl/stationary.hpp"

namespace mcgl::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Stamp {
    std::string hash;
};

Stamp stamp(const RunConfig& cfg, const std::string& args) {
    return {config_hash(cfg.canonical() + "args=" + args + '\n')};
}

std::string header(const Stamp& s) { return std::string("# mcgl ") + kVersion + " config=" + s.hash + "\n"; }

json base_json(const Stamp& s) {
    json j;
    j["version"] = kVersion;
    j["config_hash"] = s.hash;
    return j;
}

// JSON has no NaN; a failed quantity is written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path prepare(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return cfg.output_dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed for " + path.string());
}

std::string csv_row(std::initializer_list<double> vals) {
    std::string s;
    bool first = true;
    for (double v : vals) {
        if (!first) s += ',';
        s += fmt17(v);
        first = false;
    }
    return s;
}

SolveOptions options(const RunConfig& cfg) {
    SolveOptions o;
    o.tol = cfg.solver_tol;
    o.quad_tol = cfg.quad_tol;
    o.window = cfg.window;
    return o;
}

std::string status_of(const std::exception& e) {
    std::string kind = "error";
    if (dynamic_cast<const HypothesisError*>(&e)) kind = "invalid_potential";
    else if (dynamic_cast<const DomainError*>(&e)) kind = "out_of_domain";
    else if (dynamic_cast<const SolverError*>(&e)) kind = "solver_failure";
    else if (dynamic_cast<const StiffnessError*>(&e)) kind = "stiffness";
    return kind;
}

// Runs f(i) for i in [0, n) on up to worker_count() threads. Exceptions are
// the callee's business.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned w = std::min<std::size_t>(worker_count(), n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
}

// (r ascending, eps descending)
std::vector<std::pair<double, double>> grid(const RunConfig& cfg) {
    std::vector<std::pair<double, double>> g;
    for (double r : cfg.r_list)
        for (double e : cfg.eps_list) g.emplace_back(r, e);
    std::sort(g.begin(), g.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    });
    return g;
}

}  // namespace

unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MCGL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<long>(v, hw));
    }
    return hw;
}

std::vector<std::vector<double>> read_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const bool numeric = line.find_first_not_of("0123456789+-.eE, \tNaninf") == std::string::npos;
        if (!numeric) {
            if (header_seen || !rows.empty()) throw Error("malformed row in " + path.string() + ": " + line);
            header_seen = true;
            continue;
        }
        rows.push_back(parse_list(line));
    }
    return rows;
}

Written cmd_maxwell_point(const RunConfig& cfg, std::ostream& out) {
    const Stamp st = stamp(cfg, "maxwell-point");
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const SpinodalData sp = spinodal(cfg.potential);
    json j = base_json(st);
    j["sigma0"] = mp.sigma0;
    j["b0"] = mp.b0;
    j["alpha0"] = mp.alpha0;
    j["beta0"] = mp.beta0;
    j["zeta0"] = mp.zeta0;
    j["f_bar"] = eps_bound(mp, cfg.potential).f_bar;
    j["c0"] = c_eps(cfg.potential, mp, 0.0);
    j["spinodal"] = {{"alpha_bar", sp.alpha_bar}, {"beta_bar", sp.beta_bar},
                     {"sigma_lo", sp.sigma_lo}, {"sigma_hi", sp.sigma_hi}};
    const fs::path path = prepare(cfg, "maxwell_point.json");
    const std::string text = j.dump(2) + "\n";
    write_text(path, text);
    out << text;
    return {path};
}

Written cmd_solve(const RunConfig& cfg, double eps, double r, std::ostream& out) {
    const std::string tag = "eps" + fmt_short(eps) + "_r" + fmt_short(r);
    const Stamp st = stamp(cfg, "solve eps=" + fmt17(eps) + " r=" + fmt17(r));
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const SolveReport rep = solve_simple(cfg.potential, mp, eps, r, options(cfg));
    const Profile prof = reconstruct_profile(cfg.potential, rep, eps, cfg.grid_size);

    json j = base_json(st);
    j["eps"] = eps;
    j["r"] = r;
    j["sigma"] = rep.delta.sigma;
    j["b"] = rep.delta.b;
    j["ln_h1"] = rep.ln_h[0];
    j["ln_h2"] = rep.ln_h[1];
    j["k1"] = rep.k[0];
    j["k2"] = rep.k[1];
    j["res0"] = rep.residuals[0];
    j["res1"] = rep.residuals[1];
    j["z1"] = rep.tp.z1;
    j["z2"] = rep.tp.z2;
    j["energy"] = rep.energy;
    j["profile_energy"] = energy_of_profile(cfg.potential, eps, prof);
    j["iterations"] = rep.iterations;
    const fs::path jp = prepare(cfg, "solve_" + tag + ".json");
    write_text(jp, j.dump(2) + "\n");

    std::string csv = header(st) + "x,u\n";
    for (std::size_t i = 0; i < prof.xs.size(); ++i) csv += csv_row({prof.xs[i], prof.us[i]}) + "\n";
    const fs::path cp = prepare(cfg, "profile_" + tag + ".csv");
    write_text(cp, csv);

    out << "solve eps=" << fmt_short(eps) << " r=" << fmt_short(r) << ": ln_h=(" << fmt17(rep.ln_h[0])
        << ", " << fmt17(rep.ln_h[1]) << ") energy=" << fmt17(rep.energy) << " iterations=" << rep.iterations
        << "\n";
    return {jp, cp};
}

Written cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    const Stamp st = stamp(cfg, "sweep");
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const auto g = grid(cfg);
    std::vector<std::string> rows(g.size());
    const SolveOptions opt = options(cfg);
    parallel_for(g.size(), [&](std::size_t i) {
        const auto [r, eps] = g[i];
        try {
            const SolveReport rep = solve_simple(cfg.potential, mp, eps, r, opt);
            rows[i] = csv_row({eps, r, rep.delta.sigma, rep.delta.b, rep.ln_h[0], rep.ln_h[1], rep.k[0],
                               rep.k[1], rep.residuals[0], rep.residuals[1], rep.tp.z1, rep.tp.z2,
                               rep.energy, static_cast<double>(rep.iterations)}) +
                      ",ok";
        } catch (const std::exception& e) {
            rows[i] = csv_row({eps, r, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN}) +
                      "," + status_of(e);
        }
    });
    std::string csv = header(st) + "eps,r,sigma,b,ln_h1,ln_h2,k1,k2,res0,res1,z1,z2,energy,iters,status\n";
    std::size_t ok = 0;
    for (const auto& row : rows) {
        csv += row + "\n";
        ok += row.ends_with(",ok");
    }
    const fs::path path = prepare(cfg, "convergence.csv");
    write_text(path, csv);
    out << "sweep: " << ok << "/" << rows.size() << " solves converged\n";
    return {path};
}

Written cmd_rank(const RunConfig& cfg, double eps, double r, std::ostream& out) {
    const Stamp st = stamp(cfg, "rank eps=" + fmt17(eps) + " r=" + fmt17(r));
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const auto ranking = rank_energies(cfg.potential, mp, eps, r, cfg.n_max, options(cfg));
    std::string csv = header(st) + "label,energy,status\n";
    for (const auto& e : ranking)
        csv += e.label + "," + fmt17(e.ok ? e.energy : kNaN) + "," + (e.ok ? "ok" : "failed") + "\n";
    const fs::path path = prepare(cfg, "rank.csv");
    write_text(path, csv);
    out << "rank eps=" << fmt_short(eps) << " r=" << fmt_short(r) << ": first=" << ranking.front().label
        << (maxwell_first(ranking) ? "" : " (maxwell is not the minimum)") << "\n";
    return {path};
}

Written cmd_second_variation(const RunConfig& cfg, double eps, double r, int n, std::ostream& out) {
    const Stamp st =
        stamp(cfg, "second-variation eps=" + fmt17(eps) + " r=" + fmt17(r) + " n=" + std::to_string(n));
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const SolveReport rep = solve_n_transition(cfg.potential, mp, eps, r, n, options(cfg));
    const Profile prof = reconstruct_profile(cfg.potential, rep, eps, cfg.grid_size);
    const Destabilization d = destabilize_nonmonotone(cfg.potential, eps, rep, prof);
    json j = base_json(st);
    j["eps"] = eps;
    j["r"] = r;
    j["n"] = n;
    j["J"] = num(d.J);
    j["J_err"] = num(d.J_err);
    j["gamma"] = num(d.gamma);
    j["J00"] = num(d.J00);
    j["J01"] = num(d.J01);
    j["J11"] = num(d.J11);
    j["J_discrete"] = num(d.J_discrete);
    j["energy"] = num(rep.energy);
    const fs::path path = prepare(cfg, "second_variation_eps" + fmt_short(eps) + "_r" + fmt_short(r) + "_n" +
                                           std::to_string(n) + ".json");
    write_text(path, j.dump(2) + "\n");
    out << "second variation eps=" << fmt_short(eps) << " r=" << fmt_short(r) << " n=" << n
        << ": J=" << fmt17(d.J) << " gamma=" << fmt17(d.gamma) << "\n";
    return {path};
}

Written cmd_limit_check(const RunConfig& cfg, std::ostream& out) {
    const Stamp st = stamp(cfg, "limit-check");
    const MaxwellPoint mp = maxwell_point(cfg.potential);
    const auto g = grid(cfg);
    std::vector<std::string> rows(g.size());
    const SolveOptions opt = options(cfg);
    parallel_for(g.size(), [&](std::size_t i) {
        const auto [r, eps] = g[i];
        try {
            const SolveReport rep = solve_simple(cfg.potential, mp, eps, r, opt);
            const Profile prof = reconstruct_profile(cfg.potential, rep, eps, cfg.grid_size);
            const auto m = convergence_metrics(prof, limit_profile(mp, r), cfg.exclusion_halfwidth);
            const double ratio = m.interface_err / (eps * std::fabs(std::log(eps)));
            rows[i] = csv_row({eps, r, m.sup_dev, m.interface_x, m.interface_err, ratio}) + ",ok";
        } catch (const std::exception& e) {
            rows[i] = csv_row({eps, r, kNaN, kNaN, kNaN, kNaN}) + "," + status_of(e);
        }
    });
    std::string csv = header(st) + "eps,r,sup_dev,interface_x,interface_err,ratio,status\n";
    for (const auto& row : rows) csv += row + "\n";
    const fs::path path = prepare(cfg, "limit.csv");
    write_text(path, csv);
    out << "limit-check: " << rows.size() << " rows\n";
    return {path};
}

Written cmd_simulate(const RunConfig& cfg, const std::string& init, std::ostream& out) {
    const Stamp st = stamp(cfg, "simulate init=" + init);
    SimConfig sc;
    sc.n_cells = cfg.n_cells;
    sc.eps = cfg.sim_eps;
    sc.potential = cfg.potential;
    sc.dt_init = cfg.dt_init;
    sc.dt_max = cfg.dt_max;
    sc.t_end = cfg.t_end;
    sc.safety = cfg.safety;
    sc.sample_interval = cfg.sample_interval;
    sc.stepper = cfg.stepper == "explicit" ? Stepper::explicit_euler : Stepper::semi_implicit;
    validate(sc);

    const auto xs = cell_centers(sc.n_cells);
    const double r = cfg.sim_r;
    std::vector<double> u(xs.size());
    if (init == "maxwell") {
        const MaxwellPoint mp = maxwell_point(cfg.potential);
        const SolveReport rep = solve_simple(cfg.potential, mp, sc.eps, r, options(cfg));
        const Profile prof = reconstruct_profile(cfg.potential, rep, sc.eps, cfg.grid_size);
        for (std::size_t i = 0; i < xs.size(); ++i) u[i] = profile_at(prof, xs[i]);
    } else if (init == "step") {
        const MaxwellPoint mp = maxwell_point(cfg.potential);
        const LimitProfile lp = limit_profile(mp, r);
        const double x0 = -1.0 + lp.ell1;
        const double w = std::sqrt(2.0) * sc.eps;
        for (std::size_t i = 0; i < xs.size(); ++i)
            u[i] = mp.alpha0 + 0.5 * (mp.beta0 - mp.alpha0) * (1.0 + std::tanh((xs[i] - x0) / w));
    } else if (init == "spinodal") {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (double& v : u) v = r + 1e-3 * d(rng);
    } else if (init == "file") {
        if (cfg.init_file.empty()) throw Error("simulate: init=file needs simulate.init_file");
        const auto rows = read_csv(cfg.init_file);
        if (rows.size() < 2) throw Error("simulate: initial data file has fewer than two rows");
        Profile p;
        for (const auto& row : rows) {
            if (row.size() < 2) throw Error("simulate: initial data rows need x,u");
            p.xs.push_back(row[0]);
            p.us.push_back(row[1]);
        }
        for (std::size_t i = 1; i < p.xs.size(); ++i)
            if (!(p.xs[i] > p.xs[i - 1])) throw Error("simulate: x must be increasing in the initial data");
        for (std::size_t i = 0; i < xs.size(); ++i) u[i] = profile_at(p, xs[i]);
    } else {
        throw Error("simulate: unknown init '" + init + "'");
    }
    if (init != "file") {
        // Exact mass 2r.
        double mean = 0.0;
        for (double v : u) mean += v;
        mean /= static_cast<double>(u.size());
        for (double& v : u) v += r - mean;
    }

    const SimState s = run(sc, u);
    std::string trace = header(st) + "t,mass,energy\n";
    for (const auto& tsm : s.energy_trace) trace += csv_row({tsm.t, tsm.mass, tsm.energy}) + "\n";
    std::string snap = header(st) + "x,u\n";
    for (std::size_t i = 0; i < xs.size(); ++i) snap += csv_row({xs[i], s.u[i]}) + "\n";
    const fs::path tp = prepare(cfg, "trace.csv");
    const fs::path sp = prepare(cfg, "snapshot.csv");
    write_text(tp, trace);
    write_text(sp, snap);
    const Diagnostics dg = diagnostics(sc, s);
    out << "simulate init=" << init << ": t=" << fmt17(s.t) << " steps=" << s.steps
        << " mass drift=" << fmt17(std::fabs(dg.mass - s.mass0) / std::fabs(s.mass0))
        << " energy=" << fmt17(dg.energy) << "\n";
    return {tp, sp};
}

}  // namespace mcgl::cli
