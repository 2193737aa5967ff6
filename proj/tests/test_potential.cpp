#include <doctest.h>

#include <cmath>
#include <random>

#include "mcgl/errors.hpp"
#include "mcgl/potential.hpp"

using namespace mcgl;

namespace {
const PotentialSpec sym = PotentialSpec::tilted_quartic(0.0);

// Direct form of the shipped family.
double quartic(double u, double t) {
    const double q = (u - 2) * (u - 2) - 1;
    return q * q / 4 + t * u;
}
}  // namespace

TEST_CASE("eval on the symmetric quartic") {
    CHECK(eval(sym, 2, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::fabs(eval(sym, 1, 1)) < 1e-14);
    CHECK(eval(sym, 1, 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eval(sym, 2, 3) == doctest::Approx(0.0));
    CHECK_THROWS_AS(eval(sym, 2, 4), Error);
    CHECK_THROWS_AS(eval(sym, 0.0, 0), DomainError);
    CHECK_THROWS_AS(eval(sym, -1.0, 0), DomainError);
}

TEST_CASE("tilted quartic coefficients match the closed form") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (double t : {-0.2, 0.0, 0.1})
        for (int i = 0; i < 50; ++i) {
            const double x = u(rng);
            CHECK(eval(PotentialSpec::tilted_quartic(t), x) == doctest::Approx(quartic(x, t)).epsilon(1e-13));
        }
}

TEST_CASE("taylor coefficients reproduce the polynomial") {
    const auto c = taylor_coefficients(sym.coeffs, 1.3);
    for (double d : {-0.7, -0.01, 0.0, 0.2, 1.9})
        CHECK(horner(c, d) == doctest::Approx(eval(sym, 1.3 + d)).epsilon(1e-13));
    CHECK(c[1] == doctest::Approx(eval(sym, 1.3, 1)).epsilon(1e-13));
    CHECK(2 * c[2] == doctest::Approx(eval(sym, 1.3, 2)).epsilon(1e-13));
}

TEST_CASE("spinodal data") {
    const SpinodalData sp = spinodal(sym);
    CHECK(sp.alpha_bar == doctest::Approx(2 - 1 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(sp.beta_bar == doctest::Approx(2 + 1 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(sp.sigma_hi == doctest::Approx(2 * std::sqrt(3.0) / 9).epsilon(1e-12));
    CHECK(sp.sigma_lo == doctest::Approx(-2 * std::sqrt(3.0) / 9).epsilon(1e-12));

    const SpinodalData st = spinodal(PotentialSpec::tilted_quartic(0.1));
    CHECK(st.alpha_bar == doctest::Approx(sp.alpha_bar).epsilon(1e-12));
    CHECK(st.beta_bar == doctest::Approx(sp.beta_bar).epsilon(1e-12));
    CHECK(st.sigma_hi == doctest::Approx(sp.sigma_hi + 0.1).epsilon(1e-12));
    CHECK(st.sigma_lo == doctest::Approx(sp.sigma_lo + 0.1).epsilon(1e-12));
}

TEST_CASE("gibbs function") {
    CHECK(gibbs(sym, 0, 2, 0) == doctest::Approx(0.25));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 5.0), s(-0.3, 0.3);
    const auto tilted = PotentialSpec::tilted_quartic(0.1);
    for (int i = 0; i < 50; ++i) {
        const double z = u(rng), sg = s(rng);
        CHECK(std::fabs(gibbs(sym, sg, z, 0) + sg * z - eval(sym, z)) < 1e-12);
        CHECK(gibbs(tilted, 0.1, z, 0) == doctest::Approx(quartic(z, 0.0)).epsilon(1e-12).scale(1));
        CHECK(gibbs(sym, sg, z, 1) == doctest::Approx(eval(sym, z, 1) - sg));
        CHECK(gibbs(sym, sg, z, 2) == doctest::Approx(eval(sym, z, 2)));
    }
}

TEST_CASE("critical points") {
    const auto c = critical_points(sym, 0.0);
    CHECK(c.alpha_sigma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.zeta_sigma == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.beta_sigma == doctest::Approx(3.0).epsilon(1e-12));
    const auto ct = critical_points(PotentialSpec::tilted_quartic(0.1), 0.1);
    CHECK(ct.alpha_sigma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ct.zeta_sigma == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ct.beta_sigma == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(critical_points(sym, 0.5), DomainError);
    CHECK_THROWS_AS(critical_points(sym, -0.5), DomainError);
}

TEST_CASE("critical points move monotonically with sigma") {
    const SpinodalData sp = spinodal(sym);
    CriticalTriple prev = critical_points(sym, sp.sigma_lo + 1e-3);
    for (int i = 1; i <= 40; ++i) {
        const double s = sp.sigma_lo + 1e-3 + (sp.sigma_hi - sp.sigma_lo - 2e-3) * i / 40.0;
        const CriticalTriple c = critical_points(sym, s);
        CHECK(c.alpha_sigma > prev.alpha_sigma);
        CHECK(c.beta_sigma > prev.beta_sigma);
        CHECK(c.zeta_sigma < prev.zeta_sigma);
        prev = c;
    }
}

TEST_CASE("well values move like minus the critical point") {
    const double h = 1e-5;
    for (double s : {-0.3, -0.1, 0.0, 0.15, 0.3}) {
        const auto cp = critical_points(sym, s + h), cm = critical_points(sym, s - h), c = critical_points(sym, s);
        const double pts[3][3] = {{cp.alpha_sigma, cm.alpha_sigma, c.alpha_sigma},
                                  {cp.zeta_sigma, cm.zeta_sigma, c.zeta_sigma},
                                  {cp.beta_sigma, cm.beta_sigma, c.beta_sigma}};
        for (const auto& q : pts) {
            const double d = (gibbs(sym, s + h, q[0]) - gibbs(sym, s - h, q[1])) / (2 * h);
            CHECK(std::fabs(d + q[2]) <= 1e-6 * q[2]);
        }
    }
}

TEST_CASE("maxwell point of the tilted family") {
    for (double t : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
        const auto p = PotentialSpec::tilted_quartic(t);
        const MaxwellPoint mp = maxwell_point(p);
        CHECK(std::fabs(mp.sigma0 - t) <= 1e-10);
        CHECK(std::fabs(mp.b0) <= 1e-10);
        CHECK(std::fabs(mp.alpha0 - 1) <= 1e-10);
        CHECK(std::fabs(mp.beta0 - 3) <= 1e-10);
        CHECK(std::fabs(mp.zeta0 - 2) <= 1e-10);
        CHECK(std::fabs(eval(p, mp.alpha0, 1) - mp.sigma0) <= 1e-12);
        CHECK(std::fabs(eval(p, mp.beta0, 1) - mp.sigma0) <= 1e-12);
    }
}

TEST_CASE("equal-area function changes sign at sigma0") {
    // Asymmetric quartic: F = sym + 0.05 (u-2)^3
    auto c = sym.coeffs;
    const double cube[4] = {-8, 12, -6, 1};
    for (int k = 0; k < 4; ++k) c[k] += 0.05 * cube[k];
    const auto p = PotentialSpec::polynomial(c);
    REQUIRE(check_hypotheses(p).ok);
    const MaxwellPoint mp = maxwell_point(p);
    auto g = [&](double s) {
        const auto cr = critical_points(p, s);
        return gibbs(p, s, cr.beta_sigma) - gibbs(p, s, cr.alpha_sigma);
    };
    CHECK(std::fabs(g(mp.sigma0)) < 1e-12);
    CHECK(g(mp.sigma0 - 1e-4) > 0);
    CHECK(g(mp.sigma0 + 1e-4) < 0);
    CHECK(std::fabs(gibbs(p, mp.sigma0, mp.alpha0) - mp.b0) < 1e-12);
}

TEST_CASE("hypothesis violations") {
    const auto convex = PotentialSpec::polynomial({0, 0, 1});
    const HypothesisReport r = check_hypotheses(convex);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.violations.empty());
    CHECK_THROWS_AS(maxwell_point(convex), HypothesisError);
    CHECK_THROWS_AS(spinodal(convex), HypothesisError);
    CHECK(check_hypotheses(sym).ok);
}
