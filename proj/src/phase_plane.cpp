#include "mcgl/phase_plane.hpp"

#include <cmath>
#include <sstream>

#include "mcgl/errors.hpp"

namespace mcgl {

const char* to_string(Admissibility a) {
    switch (a) {
        case Admissibility::ok: return "ok";
        case Admissibility::sigma_out_of_range: return "sigma_out_of_range";
        case Admissibility::below_wells: return "below_wells";
        case Admissibility::above_saddle: return "above_saddle";
    }
    return "unknown";
}

double p_eps(double eps, double s) {
    if (!(eps > 0.0)) throw DomainError("p_eps: eps must be positive");
    const double e2 = eps * eps;
    const double w = e2 * s * s;
    // 1 - 1/sqrt(1+w) without cancellation
    const double r = std::sqrt(1.0 + w);
    return (w / (r * (1.0 + r))) / e2;
}

double h_plus(double eps, double xi) {
    if (!(eps > 0.0)) throw DomainError("h_plus: eps must be positive");
    const double e2 = eps * eps;
    if (xi < 0.0 || !(e2 * xi < 1.0)) {
        std::ostringstream os;
        os << "h_plus: argument " << xi << " outside [0, eps^-2) for eps = " << eps;
        throw DomainError(os.str());
    }
    return std::sqrt(xi * (2.0 - e2 * xi)) / (1.0 - e2 * xi);
}

double h_minus(double eps, double xi) { return -h_plus(eps, xi); }

EpsBound eps_bound(const MaxwellPoint& mp, const PotentialSpec& p) {
    const double top = gibbs(p, mp.sigma0, mp.zeta0) - mp.b0;
    return {1.0 / std::sqrt(top)};
}

void require_eps(const EpsBound& bound, double eps) {
    if (!(eps > 0.0 && eps < bound.f_bar)) {
        std::ostringstream os;
        os << "eps = " << eps << " outside (0, " << bound.f_bar << ")";
        throw DomainError(os.str());
    }
}

Admissibility admissibility(const PotentialSpec& p, const Pair& delta) {
    const SpinodalData sp = spinodal(p);
    if (!(delta.sigma > sp.sigma_lo && delta.sigma < sp.sigma_hi))
        return Admissibility::sigma_out_of_range;
    const auto c = critical_points(p, sp, delta.sigma);
    const auto h = well_offsets(p, delta);
    if (!(h[0] > 0.0 && h[1] > 0.0)) return Admissibility::below_wells;
    if (!(delta.b < gibbs(p, delta.sigma, c.zeta_sigma))) return Admissibility::above_saddle;
    return Admissibility::ok;
}

bool is_admissible(const PotentialSpec& p, const Pair& delta) {
    return admissibility(p, delta) == Admissibility::ok;
}

std::array<double, 2> well_offsets(const PotentialSpec& p, const Pair& delta) {
    if (delta.well_offsets) return *delta.well_offsets;
    const auto c = critical_points(p, delta.sigma);
    return {delta.b - gibbs(p, delta.sigma, c.alpha_sigma),
            delta.b - gibbs(p, delta.sigma, c.beta_sigma)};
}

Orbit::Orbit(const PotentialSpec& p, const Pair& delta) : Orbit(p, spinodal(p), delta) {}

Orbit::Orbit(const PotentialSpec& p, const SpinodalData& sp, const Pair& delta)
    : p_(p), pair_(delta) {
    if (!(delta.sigma > sp.sigma_lo && delta.sigma < sp.sigma_hi))
        throw DomainError("orbit: sigma outside the spinodal range");
    crit_ = critical_points(p, sp, delta.sigma);
    if (delta.well_offsets) {
        h_ = *delta.well_offsets;
    } else {
        h_ = {delta.b - gibbs(p, delta.sigma, crit_.alpha_sigma),
              delta.b - gibbs(p, delta.sigma, crit_.beta_sigma)};
    }
    if (!(h_[0] > 0.0 && h_[1] > 0.0)) throw DomainError("orbit: pair is not admissible (b at or below a well)");
    if (!(delta.b < gibbs(p, delta.sigma, crit_.zeta_sigma)))
        throw DomainError("orbit: pair is not admissible (b at or above the saddle)");
    build_local();
}

Orbit Orbit::separatrix(const PotentialSpec& p, const MaxwellPoint& mp) {
    Orbit o;
    o.p_ = p;
    o.pair_ = {mp.sigma0, mp.b0, std::array<double, 2>{0.0, 0.0}};
    o.crit_ = {mp.alpha0, mp.zeta0, mp.beta0};
    o.h_ = {0.0, 0.0};
    o.build_local();
    return o;
}

void Orbit::build_local() {
    const double sigma = pair_.sigma;
    const double a = crit_.alpha_sigma, bt = crit_.beta_sigma, zt = crit_.zeta_sigma;

    // Phi about alpha with the linear term removed, minus h1
    std::vector<double> ca = taylor_coefficients(p_.coeffs, a);
    if (ca.size() < 2) ca.resize(2, 0.0);
    ca[1] = 0.0;
    ca[0] = -h_[0];
    // Phi(beta - e) - Phi(beta) - h2 in powers of e
    std::vector<double> cb = taylor_coefficients(p_.coeffs, bt);
    if (cb.size() < 2) cb.resize(2, 0.0);
    cb[1] = 0.0;
    cb[0] = -h_[1];
    for (std::size_t k = 1; k < cb.size(); k += 2) cb[k] = -cb[k];

    double d1 = 0.0, e2 = 0.0;
    if (h_[0] > 0.0) d1 = find_root([&](double d) { return horner(ca, d); }, 0.0, zt - a, 0.0);
    if (h_[1] > 0.0) e2 = find_root([&](double e) { return horner(cb, e); }, 0.0, bt - zt, 0.0);

    left_ = taylor_coefficients(ca, d1);
    left_[0] = 0.0;
    right_ = taylor_coefficients(cb, e2);
    right_[0] = 0.0;

    tp_.d1 = d1;
    tp_.e2 = e2;
    tp_.z1 = a + d1;
    tp_.z2 = bt - e2;
    tp_.phi1 = left_[1];
    tp_.phi2 = -right_[1];
    len_ = (bt - a) - d1 - e2;
    layer_ = 1e-2 * len_;
    (void)sigma;
}

double Orbit::f(double t, double s) const {
    double v;
    if (t <= s && t < layer_)
        v = horner(left_, t);
    else if (s < t && s < layer_)
        v = horner(right_, s);
    else
        v = gibbs(p_, pair_.sigma, z(t, s)) - pair_.b;
    return v > 0.0 ? v : 0.0;
}

double Orbit::df(double t, double s) const {
    auto dpoly = [](const std::vector<double>& c, double x) {
        double v = 0.0;
        for (std::size_t k = c.size() - 1; k >= 1; --k) v = v * x + static_cast<double>(k) * c[k];
        return v;
    };
    if (t <= s && t < layer_) return dpoly(left_, t);
    if (s < t && s < layer_) return -dpoly(right_, s);
    return gibbs(p_, pair_.sigma, z(t, s), 1);
}

TurningPoints turning_points(const PotentialSpec& p, const Pair& delta, double) {
    return Orbit(p, delta).turning_points();
}

double f_delta(const PotentialSpec& p, const Pair& delta, const TurningPoints& tp, double z) {
    const Orbit o(p, delta);
    return o.f(z - tp.z1, tp.z2 - z);
}

namespace {

void check_eps_on_orbit(double eps, double fv) {
    if (!(eps * eps * fv < 1.0)) throw DomainError("eps too large for this orbit (eps^2 f >= 1)");
}

}  // namespace

Moments moments(const Orbit& orbit, double eps, double rel_tol, int max_levels) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    const double e2 = eps * eps;
    const auto& tp = orbit.turning_points();
    auto r = integrate_singular_many(
        tp.z1, tp.z2, 2,
        [&](double z, double t, double s, std::span<double> out) {
            const double fv = orbit.f(t, s);
            check_eps_on_orbit(eps, fv);
            const double w = (1.0 - e2 * fv) / std::sqrt(fv * (2.0 - e2 * fv));
            out[0] = w;
            out[1] = w * (t <= s ? tp.z1 + t : tp.z2 - s);
            (void)z;
        },
        rel_tol, max_levels);
    return {r[0], r[1]};
}

QuadResult action_integral(const Orbit& orbit, double eps, double rel_tol, int max_levels) {
    const double e2 = eps * eps;
    const auto& tp = orbit.turning_points();
    return integrate_singular(
        {tp.z1, tp.z2,
         [&](double, double t, double s) {
             const double fv = orbit.f(t, s);
             check_eps_on_orbit(eps, fv);
             return std::sqrt(fv * (2.0 - e2 * fv));
         }},
        rel_tol, max_levels);
}

namespace {

void check_eps(const PotentialSpec& p, double eps) {
    require_eps(eps_bound(maxwell_point(p), p), eps);
}

}  // namespace

double half_period(const PotentialSpec& p, const Pair& delta, double eps, double rel_tol) {
    return moment_integral(p, delta, eps, 0, rel_tol);
}

double moment_integral(const PotentialSpec& p, const Pair& delta, double eps, int n,
                       double rel_tol) {
    if (n != 0 && n != 1) throw DomainError("moment_integral: n must be 0 or 1");
    check_eps(p, eps);
    const Orbit o(p, delta);
    const Moments m = moments(o, eps, rel_tol);
    return n == 0 ? m.I0.value : m.I1.value;
}

double orbit_energy(const PotentialSpec& p, const Pair& delta, double eps, double r,
                    double rel_tol) {
    check_eps(p, eps);
    const Orbit o(p, delta);
    return 2.0 * (delta.sigma * r + delta.b) + eps * action_integral(o, eps, rel_tol).value;
}

double c_eps(const PotentialSpec& p, const MaxwellPoint& mp, double eps, double rel_tol) {
    const EpsBound fb = eps_bound(mp, p);
    if (!(eps >= 0.0 && eps < fb.f_bar)) throw DomainError("c_eps: eps outside [0, f_bar)");
    const Orbit o = Orbit::separatrix(p, mp);
    const double e2 = eps * eps;
    return integrate_singular({mp.alpha0, mp.beta0,
                               [&](double, double t, double s) {
                                   const double fv = o.f(t, s);
                                   return std::sqrt(fv * (2.0 - e2 * fv));
                               }},
                              rel_tol)
        .value;
}

}  // namespace mcgl
