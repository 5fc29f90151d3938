#pragma once

#include <vector>

#include "polarwave/errors.hpp"
#include "polarwave/model_core.hpp"

namespace polarwave {

struct ParticleState {
    std::vector<double> x;  // positions, expected strictly increasing
    std::vector<double> a;  // polarities
    double t = 0.0;
};

// Free: a missing neighbour sits at rest distance (stress-free end).
// Clamped: the two end cells do not move.
enum class EndCondition { Free, Clamped };

struct ParticleOptions {
    EndCondition ends = EndCondition::Free;
    double spacing = 1.0;  // lattice spacing h; springs scale as kappa/h^2
    double snapshot_every = 0.1;
};

struct ParticleDerivative {
    std::vector<double> dx;
    std::vector<double> da;
};

// dx_i = M(a_i) + (kappa/h^2)(x_{i+1} - 2 x_i + x_{i-1}), da_i = -a_i + dx_i.
ParticleDerivative particle_rhs(const ParticleState& st, const ModelParams& p, const ParticleOptions& opt = {});

struct ParticleRun {
    std::vector<ParticleState> snapshots;
    bool ordering_violated = false;
    double first_violation_t = -1.0;
};

// Fixed-step classical RK4.
ParticleRun simulate_particles(const ParticleState& initial, const ModelParams& p, double t_end, double dt,
                               const ParticleOptions& opt = {});

double default_particle_dt(const ModelParams& p, double spacing = 1.0);

// Uniform chain of n cells at spacing h starting at x0, with the cells at
// x >= polarised_from set to a = 1.
ParticleState departing_chain(int n, double h, double x0, double polarised_from);

// Leftmost place where a_i crosses alpha, interpolated between neighbouring cells.
double particle_front(const ParticleState& st, double alpha);

// Slope of the front position over the second half of the run.
double particle_front_speed(const std::vector<ParticleState>& snaps, double alpha);

}  // namespace polarwave
