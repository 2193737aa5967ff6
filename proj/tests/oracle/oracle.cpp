#include "oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

namespace {

double poly(const std::vector<double>& c, double x, int order) {
    double s = 0;
    for (int k = static_cast<int>(c.size()) - 1; k >= order; --k) {
        double f = 1;
        for (int j = 0; j < order; ++j) f *= k - j;
        s = s * x + f * c[k];
    }
    return s;
}

double toms(const auto& f, double lo, double hi) {
    boost::uintmax_t it = 200;
    auto tol = [](double a, double b) { return std::fabs(a - b) <= 4e-16 * std::max(std::fabs(a), std::fabs(b)); };
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, it);
    return 0.5 * (r.first + r.second);
}

}  // namespace

std::vector<double> critical_points(const std::vector<double>& c, double sigma) {
    auto g = [&](double z) { return poly(c, z, 1) - sigma; };
    std::vector<double> out;
    const int n = 6000;
    const double lo = 1e-6, hi = 6.0;
    double prev = g(lo);
    for (int i = 1; i <= n; ++i) {
        const double a = lo + (hi - lo) * (i - 1) / n, b = lo + (hi - lo) * i / n;
        const double cur = g(b);
        if (cur == 0) out.push_back(b);
        else if (prev * cur < 0) out.push_back(toms(g, a, b));
        prev = cur;
    }
    if (out.size() != 3) throw std::runtime_error("oracle: expected three critical points");
    return out;
}

OrbitIntegrals orbit_integrals(const std::vector<double>& c, double sigma, double b, double eps) {
    const auto cp = critical_points(c, sigma);
    auto phi = [&](double z) { return poly(c, z, 0) - sigma * z - b; };
    const double z1 = toms(phi, cp[0], cp[1]);
    const double z2 = toms(phi, cp[1], cp[2]);
    const double len = z2 - z1, zm = 0.5 * (z1 + z2);
    const double d1[3] = {poly(c, z1, 1) - sigma, poly(c, z1, 2), poly(c, z1, 3)};
    const double d2[3] = {poly(c, z2, 1) - sigma, poly(c, z2, 2), poly(c, z2, 3)};

    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto run = [&](double delta, int n) {
        // t = w^2 is the distance from the turning point; sgn = +1 at z1, -1 at z2.
        auto side = [&](double zi, const double* d, double sgn) {
            auto integrand = [&](double w) {
                const double t = w * w, z = zi + sgn * t;
                double f;
                if (t < delta) {
                    const double x = sgn * t;
                    f = x * (d[0] + x * (d[1] / 2 + x * d[2] / 6));
                } else {
                    f = phi(z);
                }
                const double e2f = eps * eps * f;
                return 2 * w * (1 - e2f) * std::pow(z, n) / std::sqrt(f * (2 - e2f));
            };
            // Split at the layer edge so each piece is smooth.
            const double wl = std::sqrt(delta), wm = std::sqrt(std::fabs(zm - zi));
            return GK::integrate(integrand, 0.0, wl, 12, 1e-12) + GK::integrate(integrand, wl, wm, 12, 1e-12);
        };
        return side(z1, d1, 1.0) + side(z2, d2, -1.0);
    };

    OrbitIntegrals out{z1, z2, 0, 0, 0};
    double prev0 = 0, prev1 = 0;
    bool first = true;
    for (double rel : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const double I0 = run(rel * len, 0), I1 = run(rel * len, 1);
        if (!first)
            out.spread = std::max({out.spread, std::fabs(I0 - prev0) / I0, std::fabs(I1 - prev1) / I1});
        prev0 = I0;
        prev1 = I1;
        first = false;
    }
    out.I0 = prev0;
    out.I1 = prev1;
    return out;
}

}  // namespace oracle
