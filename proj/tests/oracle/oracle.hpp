#pragma once

#include <vector>

// Reference values for the orbit integrals, computed without any of the
// library's numerics: turning points by TOMS 748, integrals by Gauss-Kronrod
// after z = z_i +/- w^2 at each end, with a local Taylor model of
// Phi_sigma - b inside a layer of width delta. delta is swept and the spread
// across the sweep is reported.
namespace oracle {

struct OrbitIntegrals {
    double z1, z2;
    double I0, I1;
    double spread;  // largest relative change of I0 or I1 across the delta sweep
};

OrbitIntegrals orbit_integrals(const std::vector<double>& coeffs, double sigma, double b, double eps);

// sigma -> (alpha, zeta, beta) by sign scan and TOMS 748.
std::vector<double> critical_points(const std::vector<double>& coeffs, double sigma);

}  // namespace oracle
