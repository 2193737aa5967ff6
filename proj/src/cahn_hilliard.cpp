#include "mcgl/cahn_hilliard.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "mcgl/errors.hpp"

namespace mcgl {

namespace {

constexpr double kEnergySlack = 1e-12;
constexpr double kMinDt = 1e-14;

std::vector<double> derivative_coeffs(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

struct Poly {
    std::vector<double> f, f1, f2;
    explicit Poly(const PotentialSpec& p)
        : f(p.coeffs), f1(derivative_coeffs(f)), f2(derivative_coeffs(f1)) {}
};

// tridiagonal operator v -> -(c_{i+1/2}(v_{i+1}-v_i) - c_{i-1/2}(v_i-v_{i-1})) / dx^2
struct Tri {
    std::vector<double> lo, di, up;
};

Tri neumann_laplacian(const std::vector<double>& face, double dx) {
    const std::size_t n = face.size() + 1;
    Tri t{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double w = 1.0 / (dx * dx);
    for (std::size_t f = 0; f + 1 < n; ++f) {
        const double c = face[f] * w;
        t.di[f] += c;
        t.di[f + 1] += c;
        t.up[f] = -c;
        t.lo[f + 1] = -c;
    }
    return t;
}

std::vector<double> apply_tri(const Tri& t, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = t.di[i] * v[i];
        if (i > 0) s += t.lo[i] * v[i - 1];
        if (i + 1 < n) s += t.up[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

std::vector<double> face_mobility(const SimConfig& cfg, const std::vector<double>& u) {
    std::vector<double> d(u.size() - 1, 1.0);
    if (cfg.mobility)
        for (std::size_t f = 0; f + 1 < u.size(); ++f) d[f] = (*cfg.mobility)(0.5 * (u[f] + u[f + 1]));
    return d;
}

// Conservative update u + dt * div(D grad mu), zero flux at both ends.
std::vector<double> flux_update(const std::vector<double>& u, const std::vector<double>& mu,
                                const std::vector<double>& dface, double dx, double dt) {
    const std::size_t n = u.size();
    std::vector<double> fl(n + 1, 0.0);
    for (std::size_t f = 0; f + 1 < n; ++f) fl[f + 1] = dface[f] * (mu[f + 1] - mu[f]) / dx;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + dt * (fl[i + 1] - fl[i]) / dx;
    return out;
}

std::vector<double> semi_implicit_candidate(const SimConfig& cfg, const Poly& poly,
                                            const std::vector<double>& u, double dx, double dt) {
    const int n = static_cast<int>(u.size());
    const double e2 = cfg.eps * cfg.eps;
    std::vector<double> kappa(n - 1);
    for (int f = 0; f + 1 < n; ++f) {
        const double g = (u[f + 1] - u[f]) / dx;
        kappa[f] = e2 / std::sqrt(1.0 + e2 * e2 * g * g);
    }
    const std::vector<double> dface = face_mobility(cfg, u);
    const Tri kd = neumann_laplacian(dface, dx);
    const Tri kk = neumann_laplacian(kappa, dx);

    double S = 0.0;
    std::vector<double> fp(n);
    for (int i = 0; i < n; ++i) {
        fp[i] = horner(poly.f1, u[i]);
        S = std::max(S, 0.5 * std::fabs(horner(poly.f2, u[i])));
    }

    // A = I + dt KD (KK + S), pentadiagonal, LAPACK band storage
    const int kl = 2, ku = 2, ldab = 2 * kl + ku + 1;
    std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
    auto at = [&](int i, int j) -> double& { return ab[(kl + ku + i - j) + static_cast<std::size_t>(j) * ldab]; };
    auto m_entry = [&](int k, int j) {
        if (j == k) return kk.di[k] + S;
        if (j == k + 1) return kk.up[k];
        if (j == k - 1) return kk.lo[k];
        return 0.0;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
            double s = 0.0;
            for (int k = std::max(0, i - 1); k <= std::min(n - 1, i + 1); ++k) {
                const double kdik = k == i ? kd.di[i] : (k == i + 1 ? kd.up[i] : kd.lo[i]);
                s += kdik * m_entry(k, j);
            }
            at(i, j) = (i == j ? 1.0 : 0.0) + dt * s;
        }
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = fp[i] - S * u[i];
    const auto kw = apply_tri(kd, w);
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = u[i] - dt * kw[i];
    std::vector<lapack_int> piv(n);
    const lapack_int info = LAPACKE_dgbsv(LAPACK_COL_MAJOR, n, kl, ku, 1, ab.data(), ldab, piv.data(), v.data(), n);
    if (info != 0) throw StiffnessError("semi-implicit step: banded solve failed");

    // chemical potential of the implicit stage, then a conservative update
    const auto kv = apply_tri(kk, v);
    std::vector<double> mu(n);
    for (int i = 0; i < n; ++i) mu[i] = kv[i] + fp[i] + S * (v[i] - u[i]);
    return flux_update(u, mu, dface, dx, dt);
}

}  // namespace

void validate(const SimConfig& cfg) {
    if (cfg.n_cells < 16) throw DomainError("n_cells must be at least 16");
    if (!(cfg.eps > 0.0)) throw DomainError("eps must be positive");
    if (!(cfg.dt_init > 0.0) || !(cfg.t_end >= 0.0) || !(cfg.safety > 0.0) || !(cfg.dt_max > 0.0))
        throw DomainError("dt_init, dt_max, safety must be positive and t_end non-negative");
}

std::vector<double> cell_centers(int n_cells) {
    std::vector<double> x(n_cells);
    const double dx = 2.0 / n_cells;
    for (int i = 0; i < n_cells; ++i) x[i] = -1.0 + (i + 0.5) * dx;
    return x;
}

std::vector<double> chemical_potential(const SimConfig& cfg, const std::vector<double>& u) {
    const std::size_t n = u.size();
    if (n < 3) throw DomainError("chemical_potential needs at least three cells");
    const double dx = 2.0 / static_cast<double>(n);
    const double e2 = cfg.eps * cfg.eps;
    const Poly poly(cfg.potential);
    std::vector<double> q(n + 1, 0.0);
    for (std::size_t f = 0; f + 1 < n; ++f) {
        const double g = (u[f + 1] - u[f]) / dx;
        q[f + 1] = e2 * g / std::sqrt(1.0 + e2 * e2 * g * g);
    }
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i) mu[i] = -(q[i + 1] - q[i]) / dx + horner(poly.f1, u[i]);
    return mu;
}

double discrete_energy(const SimConfig& cfg, const std::vector<double>& u) {
    const std::size_t n = u.size();
    const double dx = 2.0 / static_cast<double>(n);
    const double e2 = cfg.eps * cfg.eps;
    double grad = 0.0, bulk = 0.0;
    for (std::size_t f = 0; f + 1 < n; ++f) {
        const double s = e2 * (u[f + 1] - u[f]) / dx;
        grad += s * s / (std::sqrt(1.0 + s * s) + 1.0);
    }
    for (double v : u) bulk += horner(cfg.potential.coeffs, v);
    return dx * (grad / e2 + bulk);
}

double discrete_mass(const SimConfig&, const std::vector<double>& u) {
    double s = 0.0;
    for (double v : u) s += v;
    return s * 2.0 / static_cast<double>(u.size());
}

SimState initial_state(const SimConfig& cfg, std::vector<double> u) {
    validate(cfg);
    if (static_cast<int>(u.size()) != cfg.n_cells) throw DomainError("initial data must have n_cells values");
    SimState s;
    s.u = std::move(u);
    s.dx = 2.0 / cfg.n_cells;
    s.mass0 = discrete_mass(cfg, s.u);
    s.energy = discrete_energy(cfg, s.u);
    s.dt = cfg.dt_init;
    return s;
}

SimState step(const SimConfig& cfg, const SimState& state) {
    const double dx = state.dx;
    const Poly poly(cfg.potential);
    SimState next = state;

    const auto mu0 = chemical_potential(cfg, state.u);
    bool flat = true;
    for (std::size_t i = 1; i < mu0.size() && flat; ++i) flat = mu0[i] == mu0[0];

    double dt = state.dt;
    if (cfg.stepper == Stepper::explicit_euler) {
        double maxd = 1.0;
        if (cfg.mobility) {
            maxd = 0.0;
            for (double v : state.u) maxd = std::max(maxd, (*cfg.mobility)(v));
        }
        const double e2 = cfg.eps * cfg.eps;
        dt = std::min(dt, cfg.safety * dx * dx * dx * dx / (8.0 * e2 * maxd));
    } else {
        dt = std::min(dt, cfg.dt_max);
    }
    if (cfg.t_end > state.t) dt = std::min(dt, cfg.t_end - state.t);

    if (flat) {
        next.t += dt;
        next.steps += 1;
        next.max_dt_used = std::max(next.max_dt_used, dt);
        return next;
    }

    const std::vector<double> dface = face_mobility(cfg, state.u);
    const double E0 = state.energy;
    for (;;) {
        if (dt < kMinDt) throw StiffnessError("time step underflow (dt < 1e-14)");
        std::vector<double> cand = cfg.stepper == Stepper::explicit_euler
                                       ? flux_update(state.u, mu0, dface, dx, dt)
                                       : semi_implicit_candidate(cfg, poly, state.u, dx, dt);
        const double E1 = discrete_energy(cfg, cand);
        if (std::isfinite(E1) && E1 <= E0 + kEnergySlack * std::fabs(E0)) {
            next.u = std::move(cand);
            next.t = state.t + dt;
            next.energy = E1;
            next.steps += 1;
            next.max_dt_used = std::max(next.max_dt_used, dt);
            if (E0 != 0.0)
                next.max_rel_energy_increase = std::max(next.max_rel_energy_increase, (E1 - E0) / std::fabs(E0));
            next.dt = cfg.stepper == Stepper::explicit_euler ? std::max(dt, state.dt)
                                                             : std::min(1.5 * dt, cfg.dt_max);
            return next;
        }
        dt *= 0.5;
        next.dt = dt;
    }
}

SimState run(const SimConfig& cfg, std::vector<double> u_init) {
    SimState s = initial_state(cfg, std::move(u_init));
    const double interval = cfg.sample_interval > 0.0 ? cfg.sample_interval : cfg.t_end / 200.0;
    s.energy_trace.push_back({s.t, discrete_mass(cfg, s.u), s.energy});
    double next_sample = interval;
    const double t_tol = 1e-12 * std::max(1.0, cfg.t_end);
    while (cfg.t_end - s.t > t_tol) {
        s = step(cfg, s);
        if (s.t >= next_sample * (1.0 - 1e-12) || cfg.t_end - s.t <= t_tol) {
            s.energy_trace.push_back({s.t, discrete_mass(cfg, s.u), s.energy});
            while (next_sample <= s.t) next_sample += interval;
        }
    }
    return s;
}

Diagnostics diagnostics(const SimConfig& cfg, const SimState& state) {
    return {discrete_mass(cfg, state.u), discrete_energy(cfg, state.u), state.max_dt_used};
}

}  // namespace mcgl
