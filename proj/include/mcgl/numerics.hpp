#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mcgl {

// Bracketing root finder: bisection until the bracket is narrower than 1e-3,
// then Brent (inverse quadratic / secant / bisection). Returns x with the final
// bracket width <= tol (or at the resolution of doubles near x).
// Throws BracketError when f(lo) and f(hi) have the same strict sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-12);

struct QuadResult {
    double value = 0.0;
    double err_estimate = 0.0;  // last inter-level difference
    int levels_used = 0;
    bool converged = false;
    int skipped_nodes = 0;      // nodes where the integrand was not finite
};

// Integrand evaluator. Besides the abscissa z it receives the distances to both
// endpoints, computed without cancellation, so that callers can evaluate the
// integrand from local expansions right next to z1 and z2.
using SingularCore = std::function<double(double z, double from_z1, double to_z2)>;

struct SingularIntegrand {
    double z1 = 0.0;
    double z2 = 1.0;
    SingularCore core;
};

// Tanh-sinh quadrature on [z1, z2], integrable endpoint singularities allowed.
// Levels are refined (step halved) until two successive sums agree within
// rel_tol. A non-converged result is returned with converged == false and
// err_estimate above tolerance.
QuadResult integrate_singular(const SingularIntegrand& q, double rel_tol = 1e-10,
                              int max_levels = 12);

// Several integrands over the same interval and node set; `eval` fills one value
// per integrand. Convergence requires every component to converge.
using MultiCore = std::function<void(double z, double from_z1, double to_z2, std::span<double> out)>;
std::vector<QuadResult> integrate_singular_many(double z1, double z2, std::size_t count,
                                                const MultiCore& eval, double rel_tol = 1e-10,
                                                int max_levels = 12);

inline constexpr int kMaxQuadLevel = 14;

}  // namespace mcgl
