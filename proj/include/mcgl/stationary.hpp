#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mcgl/phase_plane.hpp"
#include "mcgl/potential.hpp"

namespace mcgl {

struct SolverScaling {
    double B1, B2;  // [2F''(alpha0)]^-1/2, [2F''(beta0)]^-1/2
    double c1, c2;  // mass dependent decay rates
    double mu1, mu2;
};

struct SolveOptions {
    double tol = 1e-11;        // sup norm of the residuals
    double quad_tol = 1e-13;   // relative tolerance of each moment integral
    int max_iter = 40;
    double fd_step = 1e-3;     // forward difference step in ln h
    double window = 0.1;       // r must lie in [alpha0 + w L, beta0 - w L], L = beta0 - alpha0
    bool continuation = true;  // retry from larger eps on failure
    std::optional<std::array<double, 2>> initial_ln_h;
};

struct SolveReport {
    Pair delta;
    std::array<double, 2> ln_h{};
    std::array<double, 2> k{};
    std::array<double, 2> residuals{};
    int iterations = 0;
    double energy = 0.0;
    TurningPoints tp;
    double eps = 0.0;
    double r = 0.0;
    int n_transitions = 1;
    std::vector<std::string> trace;
};

enum class Orientation { increasing, decreasing };

struct Profile {
    std::vector<double> xs, us;
    double eps = 0.0, r = 0.0;
    int n_transitions = 1;
    Orientation orientation = Orientation::increasing;
};

struct LimitProfile {
    MaxwellPoint mp;
    double r;
    double ell1, ell2;
};

struct EnergyExpansion {
    double E0, base, correction, defect;
};

struct RankEntry {
    std::string label;
    double energy;
    bool ok;
    std::string message;
};

struct Destabilization {
    std::vector<double> eta;  // sampled on the profile grid, zero mean
    double gamma;
    double J;                 // second variation of eta0 + gamma eta1
    double J_err;             // quadrature error bound for J
    double J00, J01, J11;     // J = J00 + 2 gamma J01 + gamma^2 J11
    double J_discrete;        // grid evaluation of the sampled eta
};

struct ConvergenceMetrics {
    double sup_dev, interface_x, interface_err;
};

SolverScaling scaling(const PotentialSpec& p, const MaxwellPoint& mp, double r);

// Inverse of (sigma, b) -> (ln h1, ln h2).
Pair pair_from_lnh(const PotentialSpec& p, const MaxwellPoint& mp, std::array<double, 2> ln_h);
Pair pair_from_lnh(const PotentialSpec& p, std::array<double, 2> ln_h);

SolveReport solve_simple(const PotentialSpec& p, const MaxwellPoint& mp, double eps, double r,
                         const SolveOptions& opt = {});
// n monotone laps of the same periodic orbit: n eps I_0 = 2, n eps I_1 = 2 r.
SolveReport solve_n_transition(const PotentialSpec& p, const MaxwellPoint& mp, double eps,
                               double r, int n, const SolveOptions& opt = {});

Profile reconstruct_profile(const PotentialSpec& p, const SolveReport& report, double eps,
                            int grid_size = 2001);
Profile reversal(const Profile& profile);

// Trapezoid rule with three-point derivatives (same operator as second_variation).
double energy_of_profile(const PotentialSpec& p, double eps, const Profile& profile);

EnergyExpansion maxwell_energy_expansion(const PotentialSpec& p, const MaxwellPoint& mp,
                                         double eps, double r, const SolveOptions& opt = {});

// Ascending; failed entries are listed last with ok == false.
std::vector<RankEntry> rank_energies(const PotentialSpec& p, const MaxwellPoint& mp, double eps,
                                     double r, int n_max, const SolveOptions& opt = {});
bool maxwell_first(const std::vector<RankEntry>& ranking);

double second_variation(const PotentialSpec& p, double eps, const Profile& profile,
                        const std::vector<double>& eta);

Destabilization destabilize_nonmonotone(const PotentialSpec& p, double eps,
                                        const SolveReport& report, const Profile& profile);

LimitProfile limit_profile(const MaxwellPoint& mp, double r);
double limit_eval(const LimitProfile& lp, double x);
ConvergenceMetrics convergence_metrics(const Profile& profile, const LimitProfile& lp,
                                       double exclusion_halfwidth);

// Helpers shared with the simulator.
double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys);
std::vector<double> grid_derivative(const std::vector<double>& xs, const std::vector<double>& ys);
// Linear interpolation of a profile at x.
double profile_at(const Profile& profile, double x);

}  // namespace mcgl
