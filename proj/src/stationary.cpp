#include "mcgl/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mcgl/errors.hpp"

namespace mcgl {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double sup_norm(const std::array<double, 2>& v) { return std::max(std::fabs(v[0]), std::fabs(v[1])); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

SolverScaling scaling(const PotentialSpec& p, const MaxwellPoint& mp, double r) {
    if (!(r > mp.alpha0 && r < mp.beta0))
        throw DomainError("r = " + fmt(r) + " outside (" + fmt(mp.alpha0) + ", " + fmt(mp.beta0) + ")");
    SolverScaling s;
    const double L = mp.beta0 - mp.alpha0;
    s.B1 = 1.0 / std::sqrt(2.0 * eval(p, mp.alpha0, 2));
    s.B2 = 1.0 / std::sqrt(2.0 * eval(p, mp.beta0, 2));
    s.c1 = 2.0 * std::numbers::sqrt2 * (mp.beta0 - r) / (s.B1 * L);
    s.c2 = 2.0 * std::numbers::sqrt2 * (r - mp.alpha0) / (s.B2 * L);
    s.mu1 = 1.0 / (s.B1 * L);
    s.mu2 = 1.0 / (s.B2 * L);
    return s;
}

namespace {

Pair pair_from_lnh_impl(const PotentialSpec& p, const SpinodalData& sp, const MaxwellPoint& mp,
                        std::array<double, 2> ln_h) {
    if (!std::isfinite(ln_h[0]) || !std::isfinite(ln_h[1]))
        throw DomainError("pair_from_lnh: non-finite ln h");
    const double h1 = std::exp(ln_h[0]);
    const double h2 = std::exp(ln_h[1]);
    if (!(h1 > 0.0 && h2 > 0.0)) throw DomainError("pair_from_lnh: h underflows");
    const double dh = h1 - h2;

    double sigma;
    if (std::fabs(dh) <= 1e-6) {
        // sigma = sigma0 + d with int_0^d (alpha_s - beta_s) ds = h1 - h2
        static constexpr double x3 = 0.7745966692414834;  // sqrt(3/5)
        auto spread = [&](double s) {
            const auto c = critical_points(p, sp, mp.sigma0 + s);
            return c.alpha_sigma - c.beta_sigma;
        };
        auto G = [&](double d) {
            const double m = 0.5 * d;
            return m * (5.0 / 9.0 * spread(m * (1.0 - x3)) + 8.0 / 9.0 * spread(m) +
                        5.0 / 9.0 * spread(m * (1.0 + x3)));
        };
        double d = dh / (mp.alpha0 - mp.beta0);
        for (int it = 0; it < 8 && d != 0.0; ++it) {
            const double step = (G(d) - dh) / spread(d);
            d -= step;
            if (std::fabs(step) <= 1e-16 * std::fabs(d)) break;
        }
        sigma = mp.sigma0 + d;
    } else {
        auto g = [&](double s) {
            const auto c = critical_points(p, sp, s);
            return gibbs(p, s, c.beta_sigma) - gibbs(p, s, c.alpha_sigma) - dh;
        };
        const double w = sp.sigma_hi - sp.sigma_lo;
        const double lo = sp.sigma_lo + 1e-9 * w, hi = sp.sigma_hi - 1e-9 * w;
        if (!(g(lo) > 0.0 && g(hi) < 0.0))
            throw DomainError("pair_from_lnh: h1 - h2 outside the range of the equal-area function");
        sigma = find_root(g, lo, hi, 0.0);
    }
    const auto c = critical_points(p, sp, sigma);
    const double b = gibbs(p, sigma, c.alpha_sigma) + h1;
    if (!(b < gibbs(p, sigma, c.zeta_sigma)))
        throw DomainError("pair_from_lnh: offsets reach the saddle value");
    return {sigma, b, std::array<double, 2>{h1, h2}};
}

struct System {
    const PotentialSpec& p;
    SpinodalData sp;
    const MaxwellPoint& mp;
    double eps;
    double r;
    int n;
    double quad_tol;

    struct Eval {
        std::array<double, 2> R;
        Pair pair;
    };

    Eval operator()(const std::array<double, 2>& x) const {
        Pair pr = pair_from_lnh_impl(p, sp, mp, x);
        const Orbit o(p, sp, pr);
        const Moments m = moments(o, eps, quad_tol);
        const double ne = n * eps;
        return {{ne * m.I0.value - 2.0, ne * m.I1.value - 2.0 * r}, pr};
    }
};

struct NewtonResult {
    bool ok = false;
    std::array<double, 2> x{};
    System::Eval at{};
    int iterations = 0;
};

NewtonResult newton(const System& sys, std::array<double, 2> x, const SolveOptions& opt,
                    std::vector<std::string>& trace) {
    NewtonResult res;
    System::Eval cur;
    try {
        cur = sys(x);
    } catch (const DomainError& e) {
        trace.push_back("eps=" + fmt(sys.eps) + " initial point rejected: " + e.what());
        return res;
    }
    for (int it = 0; it <= opt.max_iter; ++it) {
        const double nr = sup_norm(cur.R);
        trace.push_back("eps=" + fmt(sys.eps) + " it=" + std::to_string(it) + " ln_h=(" + fmt(x[0]) +
                        ", " + fmt(x[1]) + ") |R|=" + fmt(nr));
        if (nr <= opt.tol) {
            res.ok = true;
            res.x = x;
            res.at = cur;
            res.iterations = it;
            return res;
        }
        if (it == opt.max_iter) break;

        double J[2][2];
        bool jac_ok = true;
        for (int j = 0; j < 2 && jac_ok; ++j) {
            double h = opt.fd_step;
            for (int attempt = 0; attempt < 2; ++attempt) {
                auto xp = x;
                xp[j] += h;
                try {
                    const auto ev = sys(xp);
                    J[0][j] = (ev.R[0] - cur.R[0]) / h;
                    J[1][j] = (ev.R[1] - cur.R[1]) / h;
                    break;
                } catch (const DomainError&) {
                    if (attempt == 1) jac_ok = false;
                    h = -h;
                }
            }
        }
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        if (!jac_ok || !std::isfinite(det) || det == 0.0) {
            trace.push_back("singular Jacobian");
            break;
        }
        std::array<double, 2> dx = {-(J[1][1] * cur.R[0] - J[0][1] * cur.R[1]) / det,
                                    -(-J[1][0] * cur.R[0] + J[0][0] * cur.R[1]) / det};
        const double big = sup_norm(dx);
        if (big > 20.0) {
            dx[0] *= 20.0 / big;
            dx[1] *= 20.0 / big;
        }
        bool accepted = false;
        for (double lam = 1.0; lam >= 1.0 / 1024; lam *= 0.5) {
            const std::array<double, 2> xn = {x[0] + lam * dx[0], x[1] + lam * dx[1]};
            try {
                auto ev = sys(xn);
                if (sup_norm(ev.R) < (1.0 - 1e-4 * lam) * nr) {
                    x = xn;
                    cur = ev;
                    accepted = true;
                    break;
                }
            } catch (const DomainError&) {
            }
        }
        if (!accepted) {
            trace.push_back("line search failed");
            break;
        }
    }
    return res;
}

SolveReport solve_system(const PotentialSpec& p, const MaxwellPoint& mp, double eps, double r,
                         int n, const SolveOptions& opt) {
    if (n < 1) throw DomainError("number of transitions must be positive");
    const EpsBound fb = eps_bound(mp, p);
    require_eps(fb, eps);
    if (!(n * eps < fb.f_bar)) throw DomainError("n eps = " + fmt(n * eps) + " not below f_bar = " + fmt(fb.f_bar));
    const double L = mp.beta0 - mp.alpha0;
    const double lo = mp.alpha0 + opt.window * L, hi = mp.beta0 - opt.window * L;
    if (!(r >= lo && r <= hi))
        throw DomainError("r = " + fmt(r) + " outside the window [" + fmt(lo) + ", " + fmt(hi) + "]");
    const SolverScaling sc = scaling(p, mp, r);

    auto guess = [&](double e, std::array<double, 2> k) {
        const double ne = n * e;
        return std::array<double, 2>{sc.mu1 * k[0] - sc.c1 / ne, sc.mu2 * k[1] - sc.c2 / ne};
    };
    auto k_of = [&](double e, const std::array<double, 2>& x) {
        const double ne = n * e;
        return std::array<double, 2>{(x[0] + sc.c1 / ne) / sc.mu1, (x[1] + sc.c2 / ne) / sc.mu2};
    };

    const SpinodalData sp = spinodal(p);
    std::vector<std::string> trace;
    System sys{p, sp, mp, eps, r, n, opt.quad_tol};
    NewtonResult nr = newton(sys, opt.initial_ln_h ? *opt.initial_ln_h : guess(eps, {0.0, 0.0}), opt, trace);

    if (!nr.ok && opt.continuation) {
        for (int K = 1; K <= 10 && !nr.ok; ++K) {
            const double top = eps / std::pow(0.8, K);
            if (!(n * top < 0.95 * fb.f_bar)) break;
            System s_top{p, sp, mp, top, r, n, opt.quad_tol};
            NewtonResult cur = newton(s_top, guess(top, {0.0, 0.0}), opt, trace);
            if (!cur.ok) continue;
            double e_prev = top;
            bool chain_ok = true;
            for (int j = K - 1; j >= 0; --j) {
                const double e = eps / std::pow(0.8, j);
                System s{p, sp, mp, j == 0 ? eps : e, r, n, opt.quad_tol};
                NewtonResult next = newton(s, guess(s.eps, k_of(e_prev, cur.x)), opt, trace);
                if (!next.ok) {
                    chain_ok = false;
                    break;
                }
                cur = next;
                e_prev = s.eps;
            }
            if (chain_ok) nr = cur;
        }
    }
    if (!nr.ok) {
        std::ostringstream os;
        os << "Newton failed for eps = " << eps << ", r = " << r << ", n = " << n << "; trace:";
        const std::size_t from = trace.size() > 12 ? trace.size() - 12 : 0;
        for (std::size_t i = from; i < trace.size(); ++i) os << "\n  " << trace[i];
        throw SolverError(os.str());
    }

    SolveReport rep;
    rep.delta = nr.at.pair;
    rep.ln_h = nr.x;
    rep.k = k_of(eps, nr.x);
    rep.residuals = nr.at.R;
    rep.iterations = nr.iterations;
    rep.eps = eps;
    rep.r = r;
    rep.n_transitions = n;
    const Orbit o(p, sp, rep.delta);
    rep.tp = o.turning_points();
    rep.energy = 2.0 * (rep.delta.sigma * r + rep.delta.b) +
                 n * eps * action_integral(o, eps, opt.quad_tol).value;
    rep.trace = std::move(trace);
    return rep;
}

}  // namespace

Pair pair_from_lnh(const PotentialSpec& p, const MaxwellPoint& mp, std::array<double, 2> ln_h) {
    return pair_from_lnh_impl(p, spinodal(p), mp, ln_h);
}

Pair pair_from_lnh(const PotentialSpec& p, std::array<double, 2> ln_h) {
    return pair_from_lnh(p, maxwell_point(p), ln_h);
}

SolveReport solve_simple(const PotentialSpec& p, const MaxwellPoint& mp, double eps, double r,
                         const SolveOptions& opt) {
    return solve_system(p, mp, eps, r, 1, opt);
}

SolveReport solve_n_transition(const PotentialSpec& p, const MaxwellPoint& mp, double eps,
                               double r, int n, const SolveOptions& opt) {
    return solve_system(p, mp, eps, r, n, opt);
}

// ---------------------------------------------------------------------------
// profiles

namespace {

// Monotone half-period map x -> offset, for one increasing lap of the orbit.
struct HalfMap {
    std::vector<double> x;      // 0 .. length
    std::vector<double> off;    // offset from z1 (left part) or from z2 (right part)
    std::vector<double> slope;  // du/dx
    std::vector<char> right;    // offset measured from z2
    double z1 = 0, z2 = 0;
    double length = 0;

    double u_at(double xq) const {
        if (xq <= 0.0) return z1;
        if (xq >= length) return z2;
        const auto it = std::upper_bound(x.begin(), x.end(), xq);
        std::size_t j = static_cast<std::size_t>(it - x.begin());
        j = std::clamp<std::size_t>(j, 1, x.size() - 1);
        const std::size_t i = j - 1;
        const double h = x[j] - x[i];
        const double ui = right[i] ? z2 - off[i] : z1 + off[i];
        const double uj = right[j] ? z2 - off[j] : z1 + off[j];
        // interpolate in the offset of the nearer end so tiny offsets survive
        const bool use_right = right[i] && right[j];
        double vi, vj, mi = slope[i], mj = slope[j];
        if (use_right) {
            vi = off[i];
            vj = off[j];
            mi = -mi;
            mj = -mj;
        } else {
            vi = right[i] ? ui - z1 : off[i];
            vj = right[j] ? uj - z1 : off[j];
        }
        const double delta = (vj - vi) / h;
        if (delta == 0.0) {
            mi = mj = 0.0;
        } else {
            const double a = mi / delta, b = mj / delta;
            const double s2 = a * a + b * b;
            if (s2 > 9.0) {
                const double tau = 3.0 / std::sqrt(s2);
                mi = tau * a * delta;
                mj = tau * b * delta;
            }
        }
        const double s = (xq - x[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        const double v = h00 * vi + h10 * h * mi + h01 * vj + h11 * h * mj;
        return use_right ? z2 - v : z1 + v;
    }
};

HalfMap build_half_map(const Orbit& o, double eps, double target_length) {
    const double L = o.length();
    const double e2 = eps * eps;
    constexpr int kCos = 2000;
    std::vector<double> offs;
    for (int j = 0; j < kCos / 2; ++j)
        offs.push_back(0.5 * L * (1.0 - std::cos(std::numbers::pi * j / kCos)));
    for (int k = 0;; ++k) {
        const double t = 1e-2 * L * std::exp2(-0.25 * k);
        if (t < 1e-40 * L) break;
        offs.push_back(t);
    }
    offs.push_back(0.5 * L);
    std::sort(offs.begin(), offs.end());
    offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
    while (!offs.empty() && offs.back() > 0.5 * L) offs.pop_back();

    auto slope = [&](double fv) { return std::sqrt(fv * (2.0 - e2 * fv)) / (1.0 - e2 * fv) / eps; };

    // cumulative x along one side, starting at the turning point
    auto side = [&](bool from_right) {
        std::vector<double> xs(offs.size(), 0.0);
        for (std::size_t j = 1; j < offs.size(); ++j) {
            const double a = offs[j - 1], b = offs[j];
            const auto q = integrate_singular(
                {a, b,
                 [&](double, double dl, double) {
                     const double w = a + dl;
                     const double fv = from_right ? o.f(L - w, w) : o.f(w, L - w);
                     return eps * (1.0 - e2 * fv) / std::sqrt(fv * (2.0 - e2 * fv));
                 }},
                1e-12, 10);
            xs[j] = xs[j - 1] + q.value;
        }
        return xs;
    };
    const auto xl = side(false);
    const auto xr = side(true);
    const double total = xl.back() + xr.back();
    const double scale = target_length / total;

    HalfMap m;
    m.z1 = o.turning_points().z1;
    m.z2 = o.turning_points().z2;
    m.length = target_length;
    for (std::size_t j = 0; j < offs.size(); ++j) {
        m.x.push_back(xl[j] * scale);
        m.off.push_back(offs[j]);
        m.slope.push_back(slope(o.f(offs[j], L - offs[j])) / scale);
        m.right.push_back(0);
    }
    for (std::size_t jj = offs.size() - 1; jj-- > 0;) {
        m.x.push_back((total - xr[jj]) * scale);
        m.off.push_back(offs[jj]);
        m.slope.push_back(slope(o.f(L - offs[jj], offs[jj])) / scale);
        m.right.push_back(1);
    }
    m.x.back() = target_length;
    // Next to z2 the distances to the end vanish below the resolution of x; keep
    // the node closest to z2 among those that collapse onto the same x.
    HalfMap k = m;
    k.x.clear(); k.off.clear(); k.slope.clear(); k.right.clear();
    for (std::size_t j = 0; j < m.x.size(); ++j) {
        if (!k.x.empty() && !(m.x[j] > k.x.back())) {
            if (!(m.right[j] && k.right.back()))
                throw SolverError("profile reconstruction: x(z) is not increasing at node " +
                                  std::to_string(j));
            k.x.back() = m.x[j];
            k.off.back() = m.off[j];
            k.slope.back() = m.slope[j];
            continue;
        }
        k.x.push_back(m.x[j]);
        k.off.push_back(m.off[j]);
        k.slope.push_back(m.slope[j]);
        k.right.push_back(m.right[j]);
    }
    return k;
}

}  // namespace

Profile reconstruct_profile(const PotentialSpec& p, const SolveReport& report, double eps,
                            int grid_size) {
    if (grid_size < 3) throw DomainError("grid_size must be at least 3");
    const Orbit o(p, report.delta);
    const int n = report.n_transitions;
    const double lap = 2.0 / n;
    const HalfMap m = build_half_map(o, eps, lap);

    Profile pr;
    pr.eps = eps;
    pr.r = report.r;
    pr.n_transitions = n;
    pr.orientation = Orientation::increasing;
    pr.xs.resize(grid_size);
    pr.us.resize(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        const double x = (i == grid_size - 1) ? 1.0 : -1.0 + 2.0 * i / (grid_size - 1);
        pr.xs[i] = x;
        const double xi = x + 1.0;
        int k = static_cast<int>(std::floor(xi / lap));
        k = std::clamp(k, 0, n - 1);
        double loc = xi - k * lap;
        if (k % 2 == 1) loc = lap - loc;
        pr.us[i] = m.u_at(loc);
    }
    pr.us.front() = m.z1;
    pr.us.back() = (n % 2 == 1) ? m.z2 : m.z1;
    return pr;
}

Profile reversal(const Profile& profile) {
    Profile r = profile;
    const std::size_t n = profile.xs.size();
    for (std::size_t i = 0; i < n; ++i) {
        r.xs[i] = -profile.xs[n - 1 - i];
        r.us[i] = profile.us[n - 1 - i];
    }
    r.orientation = profile.orientation == Orientation::increasing ? Orientation::decreasing
                                                                   : Orientation::increasing;
    return r;
}

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    return s;
}

std::vector<double> grid_derivative(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 3) throw DomainError("grid_derivative needs at least three points");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = xs[i] - xs[i - 1], h1 = xs[i + 1] - xs[i];
        d[i] = -h1 / (h0 * (h0 + h1)) * ys[i - 1] + (h1 - h0) / (h0 * h1) * ys[i] +
               h0 / (h1 * (h0 + h1)) * ys[i + 1];
    }
    {
        const double h0 = xs[1] - xs[0], h1 = xs[2] - xs[1];
        d[0] = -(2 * h0 + h1) / (h0 * (h0 + h1)) * ys[0] + (h0 + h1) / (h0 * h1) * ys[1] -
               h0 / (h1 * (h0 + h1)) * ys[2];
    }
    {
        const double h0 = xs[n - 2] - xs[n - 3], h1 = xs[n - 1] - xs[n - 2];
        d[n - 1] = h1 / (h0 * (h0 + h1)) * ys[n - 3] - (h0 + h1) / (h0 * h1) * ys[n - 2] +
                   (2 * h1 + h0) / (h1 * (h0 + h1)) * ys[n - 1];
    }
    return d;
}

double profile_at(const Profile& profile, double x) {
    const auto& xs = profile.xs;
    if (x <= xs.front()) return profile.us.front();
    if (x >= xs.back()) return profile.us.back();
    const std::size_t j = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t i = j - 1;
    const double s = (x - xs[i]) / (xs[j] - xs[i]);
    return profile.us[i] + s * (profile.us[j] - profile.us[i]);
}

double energy_of_profile(const PotentialSpec& p, double eps, const Profile& profile) {
    const double e2 = eps * eps;
    const auto du = grid_derivative(profile.xs, profile.us);
    std::vector<double> dens(du.size());
    for (std::size_t i = 0; i < du.size(); ++i) {
        const double s = e2 * du[i];
        const double q = s * s / (std::sqrt(1.0 + s * s) + 1.0);  // Q(s) without cancellation
        dens[i] = q / e2 + eval(p, profile.us[i], 0);
    }
    return trapezoid(profile.xs, dens);
}

EnergyExpansion maxwell_energy_expansion(const PotentialSpec& p, const MaxwellPoint& mp,
                                         double eps, double r, const SolveOptions& opt) {
    const SolveReport rep = solve_simple(p, mp, eps, r, opt);
    EnergyExpansion e;
    e.E0 = rep.energy;
    e.base = 2.0 * (mp.sigma0 * r + mp.b0);
    e.correction = eps * c_eps(p, mp, eps, 1e-13);
    e.defect = e.E0 - e.base - e.correction;
    return e;
}

std::vector<RankEntry> rank_energies(const PotentialSpec& p, const MaxwellPoint& mp, double eps,
                                     double r, int n_max, const SolveOptions& opt) {
    std::vector<RankEntry> out;
    auto attempt = [&](const std::string& label, auto&& fn) {
        try {
            out.push_back({label, fn(), true, ""});
        } catch (const Error& e) {
            out.push_back({label, kNaN, false, e.what()});
        }
    };
    attempt("maxwell", [&] { return solve_simple(p, mp, eps, r, opt).energy; });
    attempt("constant", [&] { return 2.0 * eval(p, r, 0); });
    for (int n = 2; n <= n_max; ++n)
        attempt(std::to_string(n) + "-transition",
                [&] { return solve_n_transition(p, mp, eps, r, n, opt).energy; });
    std::stable_sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.ok != b.ok) return a.ok;
        return a.ok && a.energy < b.energy;
    });
    return out;
}

bool maxwell_first(const std::vector<RankEntry>& ranking) {
    if (ranking.empty() || ranking[0].label != "maxwell" || !ranking[0].ok) return false;
    return ranking.size() < 2 || !ranking[1].ok || ranking[0].energy < ranking[1].energy;
}

double second_variation(const PotentialSpec& p, double eps, const Profile& profile,
                        const std::vector<double>& eta) {
    if (eta.size() != profile.xs.size()) throw DomainError("eta must be sampled on the profile grid");
    std::vector<double> abs_eta(eta.size());
    std::transform(eta.begin(), eta.end(), abs_eta.begin(), [](double v) { return std::fabs(v); });
    const double mean = trapezoid(profile.xs, eta);
    if (std::fabs(mean) > 1e-10 * std::max(1.0, trapezoid(profile.xs, abs_eta)))
        throw DomainError("eta must have zero mean");
    const double e2 = eps * eps;
    const auto du = grid_derivative(profile.xs, profile.us);
    const auto de = grid_derivative(profile.xs, eta);
    std::vector<double> dens(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double s = e2 * du[i];
        const double qpp = 1.0 / ((1.0 + s * s) * std::sqrt(1.0 + s * s));
        dens[i] = e2 * qpp * de[i] * de[i] + eval(p, profile.us[i], 2) * eta[i] * eta[i];
    }
    return trapezoid(profile.xs, dens);
}

Destabilization destabilize_nonmonotone(const PotentialSpec& p, double eps,
                                        const SolveReport& report, const Profile& profile) {
    const int n = report.n_transitions;
    if (n < 2) throw DomainError("destabilize_nonmonotone needs a solution with at least two transitions");
    const Orbit o(p, report.delta);
    const auto& tp = o.turning_points();
    const double L = o.length();
    const double e2 = eps * eps;

    // Along one lap, parametrised by z. eta0 = u', eta1 = 1 - (1+kappa) t/L on the
    // rising lap and -kappa t/L on the falling one, t = z - z1, zero beyond.
    enum { M0, M1, A, B, C1, C2, C3, D1, D2, D3, D4, kCount };
    const auto q = integrate_singular_many(
        tp.z1, tp.z2, kCount,
        [&](double, double t, double s, std::span<double> out) {
            const double fv = o.f(t, s);
            const double zp = std::sqrt(fv * (2.0 - e2 * fv)) / (1.0 - e2 * fv);
            const double qpp = std::pow(1.0 - e2 * fv, 3);
            const double dphi = o.df(t, s);
            const double tt = t <= s ? t : L - s;
            const double f2 = eval(p, o.z(t, s), 2);
            out[M0] = 1.0 / zp;
            out[M1] = tt / zp;
            out[A] = dphi * dphi / (qpp * zp);
            out[B] = f2 * zp;
            out[C1] = dphi;
            out[C2] = f2;
            out[C3] = f2 * tt;
            out[D1] = qpp * zp;
            out[D2] = f2 / zp;
            out[D3] = f2 * tt / zp;
            out[D4] = f2 * tt * tt / zp;
        },
        1e-13, 12);
    auto v = [&](int i) { return q[i].value; };
    auto er = [&](int i) { return q[i].err_estimate; };

    const double kappa = 0.5 * (v(M0) * L / v(M1) - 1.0);
    const double b = -(1.0 + kappa) / L;
    const double bd = -kappa / L;

    Destabilization d;
    d.J00 = 2.0 / eps * (v(A) + v(B));
    d.J01 = (b * v(C1) + v(C2) + b * v(C3)) - (bd * v(C1) + bd * v(C3));
    d.J11 = eps * (b * b * v(D1) + v(D2) + 2.0 * b * v(D3) + b * b * v(D4)) +
            eps * (bd * bd * v(D1) + bd * bd * v(D4));
    const double err00 = 2.0 / eps * (er(A) + er(B));
    const double err01 = std::fabs(b - bd) * (er(C1) + er(C3)) + er(C2);
    const double err11 = eps * ((b * b + bd * bd) * (er(D1) + er(D4)) + er(D2) + 2.0 * std::fabs(b) * er(D3));

    // gamma has the sign of z''(-1/eps) = Phi'(z1)
    const double sgn = tp.phi1 >= 0.0 ? 1.0 : -1.0;
    bool found = false;
    for (int k = 0; k < 200; ++k) {
        const double g = sgn * std::ldexp(1.0, -k);
        const double J = d.J00 + 2.0 * g * d.J01 + g * g * d.J11;
        if (J < 0.0) {
            d.gamma = g;
            d.J = J;
            d.J_err = err00 + 2.0 * std::fabs(g) * err01 + g * g * err11;
            found = true;
            break;
        }
    }
    if (!found)
        throw SolverError("destabilize_nonmonotone: no gamma in the search range gives J < 0");

    // sample on the profile grid
    const double lap = 2.0 / n;
    const std::size_t N = profile.xs.size();
    d.eta.assign(N, 0.0);
    std::vector<double> bump(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const double xi = profile.xs[i] + 1.0;
        if (xi > 2.0 * lap) continue;
        const bool rising = xi <= lap;
        const double t = profile.us[i] - tp.z1;
        const double fv = o.f(t, L - t);
        const double up = std::sqrt(fv * (2.0 - e2 * fv)) / (1.0 - e2 * fv) / eps;
        const double eta0 = rising ? up : -up;
        const double eta1 = rising ? 1.0 + b * t : bd * t;
        d.eta[i] = eta0 + d.gamma * eta1;
        const double sn = std::sin(std::numbers::pi * xi / (2.0 * lap));
        bump[i] = sn * sn;
    }
    const double corr = trapezoid(profile.xs, d.eta) / trapezoid(profile.xs, bump);
    for (std::size_t i = 0; i < N; ++i) d.eta[i] -= corr * bump[i];
    d.J_discrete = second_variation(p, eps, profile, d.eta);
    return d;
}

LimitProfile limit_profile(const MaxwellPoint& mp, double r) {
    if (!(r > mp.alpha0 && r < mp.beta0)) throw DomainError("limit_profile: r outside (alpha0, beta0)");
    const double ell1 = 2.0 * (mp.beta0 - r) / (mp.beta0 - mp.alpha0);
    return {mp, r, ell1, 2.0 - ell1};
}

double limit_eval(const LimitProfile& lp, double x) {
    return x <= -1.0 + lp.ell1 ? lp.mp.alpha0 : lp.mp.beta0;
}

ConvergenceMetrics convergence_metrics(const Profile& profile, const LimitProfile& lp,
                                       double exclusion_halfwidth) {
    const double x0 = -1.0 + lp.ell1;
    const double mid = 0.5 * (lp.mp.alpha0 + lp.mp.beta0);
    ConvergenceMetrics m{0.0, kNaN, kNaN};
    const auto& xs = profile.xs;
    const auto& us = profile.us;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::fabs(xs[i] - x0) >= exclusion_halfwidth)
            m.sup_dev = std::max(m.sup_dev, std::fabs(us[i] - limit_eval(lp, xs[i])));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double a = us[i] - mid, c = us[i + 1] - mid;
        if (a == 0.0) {
            m.interface_x = xs[i];
            break;
        }
        if ((a < 0.0) != (c < 0.0) && c != a) {
            m.interface_x = xs[i] + (xs[i + 1] - xs[i]) * a / (a - c);
            break;
        }
    }
    m.interface_err = std::fabs(m.interface_x - x0);
    return m;
}

}  // namespace mcgl
