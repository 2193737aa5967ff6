#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mcgl/errors.hpp"

namespace mcgl::cli {

namespace pt = boost::property_tree;

std::string fmt17(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string fmt_short(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string config_hash(const std::string& canonical) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

double parse_double(const std::string& key, std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) throw Error("config: empty value for " + key);
    s = s.substr(b, e - b + 1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw Error("config: cannot parse number '" + s + "' for " + key);
    return v;
}

std::string join(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
    return s + "]";
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
    std::string s = text;
    for (char& c : s)
        if (c == '[' || c == ']' || c == ',') c = ' ';
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_double("list", tok));
    return out;
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os << "potential.kind=" << potential_kind << '\n'
       << "potential.coeffs=" << join(potential.coeffs) << '\n'
       << "potential.domain_floor=" << fmt17(potential.domain_floor) << '\n'
       << "potential.u_max=" << fmt17(potential.u_max) << '\n'
       << "run.eps_list=" << join(eps_list) << '\n'
       << "run.r_list=" << join(r_list) << '\n'
       << "run.n_max=" << n_max << '\n'
       << "run.grid_size=" << grid_size << '\n'
       << "run.window=" << fmt17(window) << '\n'
       << "run.exclusion_halfwidth=" << fmt17(exclusion_halfwidth) << '\n'
       << "run.seed=" << seed << '\n'
       << "tolerances.solver=" << fmt17(solver_tol) << '\n'
       << "tolerances.quadrature=" << fmt17(quad_tol) << '\n'
       << "simulate.n_cells=" << n_cells << '\n'
       << "simulate.eps=" << fmt17(sim_eps) << '\n'
       << "simulate.r=" << fmt17(sim_r) << '\n'
       << "simulate.t_end=" << fmt17(t_end) << '\n'
       << "simulate.dt_init=" << fmt17(dt_init) << '\n'
       << "simulate.dt_max=" << fmt17(dt_max) << '\n'
       << "simulate.safety=" << fmt17(safety) << '\n'
       << "simulate.sample_interval=" << fmt17(sample_interval) << '\n'
       << "simulate.stepper=" << stepper << '\n'
       << "simulate.init=" << init << '\n'
       << "simulate.init_file=" << init_file << '\n';
    return os.str();
}

RunConfig load_config(const std::filesystem::path& path) {
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    RunConfig c;
    static const std::set<std::string> known = {
        "potential.kind", "potential.tilt", "potential.coeffs", "potential.domain_floor",
        "potential.u_max", "run.eps_list", "run.r_list", "run.n_max", "run.grid_size",
        "run.window", "run.exclusion_halfwidth", "run.output_dir", "run.seed",
        "tolerances.solver", "tolerances.quadrature", "simulate.n_cells", "simulate.eps",
        "simulate.r", "simulate.t_end", "simulate.dt_init", "simulate.dt_max", "simulate.safety",
        "simulate.sample_interval", "simulate.stepper", "simulate.init", "simulate.init_file"};
    for (const auto& [sec, body] : tree) {
        if (body.empty()) throw Error("config: key '" + sec + "' outside a section");
        for (const auto& [key, val] : body) {
            const std::string full = sec + "." + key;
            if (!known.count(full)) throw Error("config: unknown key " + full);
        }
    }
    auto get = [&](const std::string& k) { return tree.get_optional<std::string>(pt::ptree::path_type(k, '.')); };
    auto num = [&](const std::string& k, double& dst) {
        if (auto v = get(k)) dst = parse_double(k, *v);
    };
    auto integer = [&](const std::string& k, auto& dst) {
        if (auto v = get(k)) {
            const double d = parse_double(k, *v);
            if (d != std::floor(d)) throw Error("config: " + k + " must be an integer");
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(d);
        }
    };
    auto text = [&](const std::string& k, std::string& dst) {
        if (auto v = get(k)) {
            std::string s = *v;
            const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
            dst = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        }
    };

    double floor_ = 1e-6, umax = 6.0;
    text("potential.kind", c.potential_kind);
    num("potential.tilt", c.tilt);
    num("potential.domain_floor", floor_);
    num("potential.u_max", umax);
    if (c.potential_kind == "tilted-quartic") {
        c.potential = PotentialSpec::tilted_quartic(c.tilt);
        c.potential.domain_floor = floor_;
        c.potential.u_max = umax;
    } else if (c.potential_kind == "polynomial") {
        auto v = get("potential.coeffs");
        if (!v) throw Error("config: polynomial potential needs coeffs");
        c.potential = PotentialSpec::polynomial(parse_list(*v), floor_, umax);
        const auto rep = check_hypotheses(c.potential);
        for (const auto& w : rep.violations) c.warnings.push_back("potential hypothesis: " + w);
    } else {
        throw Error("config: unknown potential kind '" + c.potential_kind + "'");
    }
    if (auto v = get("run.eps_list")) c.eps_list = parse_list(*v);
    if (auto v = get("run.r_list")) c.r_list = parse_list(*v);
    integer("run.n_max", c.n_max);
    integer("run.grid_size", c.grid_size);
    num("run.window", c.window);
    num("run.exclusion_halfwidth", c.exclusion_halfwidth);
    if (auto v = get("run.output_dir")) {
        std::string d;
        text("run.output_dir", d);
        c.output_dir = d;
        if (c.output_dir.is_relative()) c.output_dir = path.parent_path() / c.output_dir;
    }
    integer("run.seed", c.seed);
    num("tolerances.solver", c.solver_tol);
    num("tolerances.quadrature", c.quad_tol);
    integer("simulate.n_cells", c.n_cells);
    num("simulate.eps", c.sim_eps);
    num("simulate.r", c.sim_r);
    num("simulate.t_end", c.t_end);
    num("simulate.dt_init", c.dt_init);
    num("simulate.dt_max", c.dt_max);
    num("simulate.safety", c.safety);
    num("simulate.sample_interval", c.sample_interval);
    text("simulate.stepper", c.stepper);
    text("simulate.init", c.init);
    text("simulate.init_file", c.init_file);
    if (!c.init_file.empty() && std::filesystem::path(c.init_file).is_relative())
        c.init_file = (path.parent_path() / c.init_file).string();
    validate(c);
    return c;
}

void validate(const RunConfig& c) {
    if (c.eps_list.empty() || c.r_list.empty()) throw Error("config: eps_list and r_list must be non-empty");
    if (!(c.solver_tol > 0) || !(c.quad_tol > 0)) throw Error("config: tolerances must be positive");
    if (c.n_max < 1) throw Error("config: n_max must be at least 1");
    if (c.grid_size < 3) throw Error("config: grid_size must be at least 3");
    if (c.stepper != "semi-implicit" && c.stepper != "explicit")
        throw Error("config: stepper must be semi-implicit or explicit");
}

}  // namespace mcgl::cli
