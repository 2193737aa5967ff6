#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mcgl/potential.hpp"

namespace mcgl {

enum class Stepper {
    semi_implicit,  // gradient term and a stabiliser implicit, coefficients lagged
    explicit_euler  // forward Euler, dt <= safety dx^4 / (8 eps^2 max D)
};

struct SimConfig {
    int n_cells = 200;
    double eps = 0.1;
    PotentialSpec potential = PotentialSpec::tilted_quartic(0.0);
    std::optional<std::function<double(double)>> mobility;  // D == 1 when empty
    double dt_init = 1e-4;
    double dt_max = 2e-2;        // semi-implicit only
    double t_end = 1.0;
    double safety = 0.9;         // explicit only
    double sample_interval = 0.0;  // <= 0: t_end / 200
    Stepper stepper = Stepper::semi_implicit;
};

struct TraceSample {
    double t, mass, energy;
};

struct SimState {
    double t = 0.0;
    std::vector<double> u;
    double dx = 0.0;
    double mass0 = 0.0;
    double dt = 0.0;                 // step size proposed for the next step
    double max_dt_used = 0.0;
    double energy = 0.0;
    long steps = 0;
    double max_rel_energy_increase = 0.0;  // over accepted steps
    std::vector<TraceSample> energy_trace;
};

struct Diagnostics {
    double mass, energy, max_dt_used;
};

void validate(const SimConfig& cfg);

std::vector<double> chemical_potential(const SimConfig& cfg, const std::vector<double>& u);
double discrete_energy(const SimConfig& cfg, const std::vector<double>& u);
double discrete_mass(const SimConfig& cfg, const std::vector<double>& u);

SimState initial_state(const SimConfig& cfg, std::vector<double> u);
// One accepted step (dt is halved until the energy does not increase).
SimState step(const SimConfig& cfg, const SimState& state);
SimState run(const SimConfig& cfg, std::vector<double> u_init);
Diagnostics diagnostics(const SimConfig& cfg, const SimState& state);

std::vector<double> cell_centers(int n_cells);

}  // namespace mcgl
