#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mcgl/numerics.hpp"
#include "mcgl/potential.hpp"

namespace mcgl {

// Admissible pair (sigma, b). When the pair comes from the solver, the exact
// offsets h1 = b - Phi(alpha_sigma), h2 = b - Phi(beta_sigma) are carried along
// because b alone cannot resolve offsets far below machine precision.
struct Pair {
    double sigma = 0.0;
    double b = 0.0;
    std::optional<std::array<double, 2>> well_offsets;
};

struct TurningPoints {
    double z1 = 0.0, z2 = 0.0;
    double phi1 = 0.0;  // Phi'(z1) > 0
    double phi2 = 0.0;  // Phi'(z2) < 0
    double d1 = 0.0;    // z1 - alpha_sigma
    double e2 = 0.0;    // beta_sigma - z2
};

struct EpsBound {
    double f_bar;
};

enum class Admissibility { ok, sigma_out_of_range, below_wells, above_saddle };

const char* to_string(Admissibility a);

double p_eps(double eps, double s);
double h_plus(double eps, double xi);
double h_minus(double eps, double xi);

EpsBound eps_bound(const MaxwellPoint& mp, const PotentialSpec& p);
// Throws DomainError unless 0 < eps < f_bar.
void require_eps(const EpsBound& bound, double eps);

Admissibility admissibility(const PotentialSpec& p, const Pair& delta);
bool is_admissible(const PotentialSpec& p, const Pair& delta);

// (h1, h2) = (b - Phi(alpha_sigma), b - Phi(beta_sigma)); cached offsets win.
std::array<double, 2> well_offsets(const PotentialSpec& p, const Pair& delta);

// The periodic orbit of an admissible pair. Values of f = Phi_sigma - b are
// addressed by (t, s): distance from z1 and distance to z2. Within 1% of the
// orbit length from either turning point f comes from the Taylor polynomial
// re-centred at that turning point (constant term exactly zero).
class Orbit {
public:
    Orbit(const PotentialSpec& p, const Pair& delta);
    Orbit(const PotentialSpec& p, const SpinodalData& sp, const Pair& delta);

    // Heteroclinic limit at the Maxwell point: z1 = alpha0, z2 = beta0.
    static Orbit separatrix(const PotentialSpec& p, const MaxwellPoint& mp);

    const Pair& pair() const { return pair_; }
    const CriticalTriple& critical() const { return crit_; }
    const TurningPoints& turning_points() const { return tp_; }
    double h1() const { return h_[0]; }
    double h2() const { return h_[1]; }
    double length() const { return len_; }

    double f(double t, double s) const;
    double f_at(double z) const { return f(z - tp_.z1, tp_.z2 - z); }
    double z(double t, double s) const { return t <= s ? tp_.z1 + t : tp_.z2 - s; }
    // Phi'(z), near the turning points from the local expansions.
    double df(double t, double s) const;

    const PotentialSpec& potential() const { return p_; }

private:
    Orbit() = default;
    void build_local();

    PotentialSpec p_;
    Pair pair_;
    CriticalTriple crit_{};
    TurningPoints tp_;
    std::array<double, 2> h_{};
    double len_ = 0.0;
    double layer_ = 0.0;
    std::vector<double> left_;   // f(z1 + t) = sum left_[k] t^k
    std::vector<double> right_;  // f(z2 - s) = sum right_[k] s^k
};

TurningPoints turning_points(const PotentialSpec& p, const Pair& delta, double tol = 0.0);
double f_delta(const PotentialSpec& p, const Pair& delta, const TurningPoints& tp, double z);

struct Moments {
    QuadResult I0, I1;
};

// Both moments in a single pass. Requires eps^2 f < 1 on the orbit.
Moments moments(const Orbit& orbit, double eps, double rel_tol = 1e-10, int max_levels = 12);
// int sqrt(f (2 - eps^2 f)) over the orbit.
QuadResult action_integral(const Orbit& orbit, double eps, double rel_tol = 1e-10,
                           int max_levels = 12);

double half_period(const PotentialSpec& p, const Pair& delta, double eps, double rel_tol = 1e-10);
double moment_integral(const PotentialSpec& p, const Pair& delta, double eps, int n,
                       double rel_tol = 1e-10);
double orbit_energy(const PotentialSpec& p, const Pair& delta, double eps, double r,
                    double rel_tol = 1e-10);
double c_eps(const PotentialSpec& p, const MaxwellPoint& mp, double eps, double rel_tol = 1e-12);

}  // namespace mcgl
