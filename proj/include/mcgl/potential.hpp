#pragma once

#include <span>
#include <string>
#include <vector>

namespace mcgl {

// Polynomial free energy F(u) = sum coeffs[k] u^k on the working window
// [domain_floor, u_max].
struct PotentialSpec {
    std::vector<double> coeffs;
    double domain_floor = 1e-6;
    double u_max = 6.0;

    // ((u-2)^2 - 1)^2 / 4 + t u
    static PotentialSpec tilted_quartic(double t);
    static PotentialSpec polynomial(std::vector<double> coeffs, double domain_floor = 1e-6,
                                    double u_max = 6.0);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

struct SpinodalData {
    double alpha_bar;  // left root of F''
    double beta_bar;   // right root of F''
    double sigma_lo;   // F'(beta_bar)
    double sigma_hi;   // F'(alpha_bar)
};

struct MaxwellPoint {
    double sigma0, b0, alpha0, beta0, zeta0;
};

struct CriticalTriple {
    double alpha_sigma, zeta_sigma, beta_sigma;
};

struct HypothesisReport {
    bool ok = true;
    std::vector<std::string> violations;
};

inline constexpr int kHypothesisProbes = 1024;

// F, F', F'', F''' at u > 0.
double eval(const PotentialSpec& p, double u, int order = 0);

// Taylor coefficients of F about `center`: F(center + d) = sum c[k] d^k.
// Exact up to rounding (repeated synthetic division).
std::vector<double> taylor_coefficients(std::span<const double> coeffs, double center);
double horner(std::span<const double> c, double x);

// Sampling check of the double-well hypotheses; never throws.
HypothesisReport check_hypotheses(const PotentialSpec& p);

SpinodalData spinodal(const PotentialSpec& p);

// Phi_sigma(z) = F(z) - sigma z and its first two derivatives.
double gibbs(const PotentialSpec& p, double sigma, double z, int order = 0);

CriticalTriple critical_points(const PotentialSpec& p, double sigma, double tol = 0.0);
CriticalTriple critical_points(const PotentialSpec& p, const SpinodalData& sp, double sigma,
                               double tol = 0.0);

// Equal-area construction. Throws HypothesisError if the potential fails the
// hypotheses.
MaxwellPoint maxwell_point(const PotentialSpec& p, double tol = 1e-12);

}  // namespace mcgl
