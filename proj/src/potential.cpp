#include "mcgl/potential.hpp"

#include <cmath>
#include <sstream>

#include "mcgl/errors.hpp"
#include "mcgl/numerics.hpp"

namespace mcgl {

PotentialSpec PotentialSpec::tilted_quartic(double t) {
    return polynomial({2.25, -6.0 + t, 5.5, -2.0, 0.25});
}

PotentialSpec PotentialSpec::polynomial(std::vector<double> coeffs, double domain_floor,
                                        double u_max) {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.empty()) coeffs.push_back(0.0);
    if (!(domain_floor > 0.0) || !(u_max > domain_floor))
        throw DomainError("potential window must satisfy 0 < domain_floor < u_max");
    PotentialSpec p;
    p.coeffs = std::move(coeffs);
    p.domain_floor = domain_floor;
    p.u_max = u_max;
    return p;
}

double horner(std::span<const double> c, double x) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

namespace {

double derivative_value(std::span<const double> c, double u, int order) {
    const int n = static_cast<int>(c.size());
    double v = 0.0;
    for (int k = n - 1; k >= order; --k) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= static_cast<double>(k - j);
        v = v * u + f * c[k];
    }
    return v;
}

}  // namespace

double eval(const PotentialSpec& p, double u, int order) {
    if (order < 0 || order > 3) throw DomainError("eval: derivative order must be 0..3");
    if (!(u > 0.0)) throw DomainError("eval: u must be positive");
    return derivative_value(p.coeffs, u, order);
}

std::vector<double> taylor_coefficients(std::span<const double> coeffs, double center) {
    std::vector<double> c(coeffs.begin(), coeffs.end());
    const int n = static_cast<int>(c.size());
    for (int k = 0; k < n; ++k)
        for (int j = n - 2; j >= k; --j) c[j] += center * c[j + 1];
    return c;
}

double gibbs(const PotentialSpec& p, double sigma, double z, int order) {
    if (order < 0 || order > 2) throw DomainError("gibbs: order must be 0..2");
    const double v = eval(p, z, order);
    if (order == 0) return v - sigma * z;
    if (order == 1) return v - sigma;
    return v;
}

namespace {

struct Scan {
    std::vector<double> roots;  // sign changes of F'' (refined)
    bool pattern_ok = false;    // + - + ordering
};

Scan scan_second_derivative(const PotentialSpec& p) {
    Scan s;
    const double lo = p.domain_floor, hi = p.u_max;
    auto f2 = [&](double u) { return derivative_value(p.coeffs, u, 2); };
    double prev_u = lo, prev = f2(lo);
    std::vector<int> signs;
    if (prev != 0.0) signs.push_back(prev > 0 ? 1 : -1);
    for (int i = 1; i < kHypothesisProbes; ++i) {
        const double u = lo + (hi - lo) * i / (kHypothesisProbes - 1);
        const double v = f2(u);
        if (v != 0.0) {
            const int sg = v > 0 ? 1 : -1;
            if (!signs.empty() && sg != signs.back()) s.roots.push_back(find_root(f2, prev_u, u, 0.0));
            if (signs.empty() || sg != signs.back()) signs.push_back(sg);
            prev_u = u;
        }
    }
    s.pattern_ok = signs.size() == 3 && signs[0] == 1 && signs[1] == -1 && signs[2] == 1 &&
                   s.roots.size() == 2;
    return s;
}

}  // namespace

HypothesisReport check_hypotheses(const PotentialSpec& p) {
    HypothesisReport rep;
    auto fail = [&](std::string m) {
        rep.ok = false;
        rep.violations.push_back(std::move(m));
    };
    if (p.degree() < 4) fail("degree of F must be at least 4");
    const Scan s = scan_second_derivative(p);
    if (!s.pattern_ok) {
        std::ostringstream os;
        os << "F'' must be positive, negative, positive on the window (found " << s.roots.size()
           << " sign changes)";
        fail(os.str());
        return rep;
    }
    const double f1_lo = derivative_value(p.coeffs, p.domain_floor, 1);
    const double f1_hi = derivative_value(p.coeffs, p.u_max, 1);
    const double sig_lo = derivative_value(p.coeffs, s.roots[1], 1);
    const double sig_hi = derivative_value(p.coeffs, s.roots[0], 1);
    if (!(f1_lo < sig_lo)) fail("F'(domain_floor) must lie below F' at the right spinodal point");
    if (!(f1_hi > sig_hi)) fail("F' at the window end must exceed F' at the left spinodal point");
    return rep;
}

SpinodalData spinodal(const PotentialSpec& p) {
    const Scan s = scan_second_derivative(p);
    if (!s.pattern_ok)
        throw HypothesisError(
            "hypothesis violated: F'' must change sign exactly twice (+,-,+) on the window");
    SpinodalData d;
    d.alpha_bar = s.roots[0];
    d.beta_bar = s.roots[1];
    d.sigma_lo = derivative_value(p.coeffs, d.beta_bar, 1);
    d.sigma_hi = derivative_value(p.coeffs, d.alpha_bar, 1);
    return d;
}

CriticalTriple critical_points(const PotentialSpec& p, const SpinodalData& sp, double sigma,
                               double tol) {
    if (!(sigma > sp.sigma_lo && sigma < sp.sigma_hi)) {
        std::ostringstream os;
        os << "sigma = " << sigma << " outside (" << sp.sigma_lo << ", " << sp.sigma_hi << ")";
        throw DomainError(os.str());
    }
    auto g = [&](double z) { return derivative_value(p.coeffs, z, 1) - sigma; };
    CriticalTriple c;
    c.alpha_sigma = find_root(g, p.domain_floor, sp.alpha_bar, tol);
    c.zeta_sigma = find_root(g, sp.alpha_bar, sp.beta_bar, tol);
    c.beta_sigma = find_root(g, sp.beta_bar, p.u_max, tol);
    return c;
}

CriticalTriple critical_points(const PotentialSpec& p, double sigma, double tol) {
    return critical_points(p, spinodal(p), sigma, tol);
}

MaxwellPoint maxwell_point(const PotentialSpec& p, double tol) {
    const auto rep = check_hypotheses(p);
    if (!rep.ok) {
        std::string msg = "hypothesis violated:";
        for (const auto& v : rep.violations) msg += " " + v + ";";
        throw HypothesisError(msg);
    }
    const SpinodalData sp = spinodal(p);
    auto g = [&](double sigma) {
        const auto c = critical_points(p, sp, sigma);
        return gibbs(p, sigma, c.beta_sigma) - gibbs(p, sigma, c.alpha_sigma);
    };
    const double w = sp.sigma_hi - sp.sigma_lo;
    const double lo = sp.sigma_lo + 1e-9 * w, hi = sp.sigma_hi - 1e-9 * w;
    double sigma0;
    try {
        sigma0 = find_root(g, lo, hi, std::min(tol, 1e-14));
    } catch (const BracketError&) {
        throw HypothesisError("degenerate potential: equal-area function has no sign change");
    }
    const auto c = critical_points(p, sp, sigma0);
    MaxwellPoint mp;
    mp.sigma0 = sigma0;
    mp.alpha0 = c.alpha_sigma;
    mp.beta0 = c.beta_sigma;
    mp.zeta0 = c.zeta_sigma;
    mp.b0 = 0.5 * (gibbs(p, sigma0, mp.alpha0) + gibbs(p, sigma0, mp.beta0));
    return mp;
}

}  // namespace mcgl
