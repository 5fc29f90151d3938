#pragma once

#include <string>
#include <vector>

#include "polarwave/errors.hpp"
#include "polarwave/model_core.hpp"

namespace polarwave {

struct Grid {
    double x_min = -40.0;
    double x_max = 40.0;
    int n = 4000;

    double dx() const { return (x_max - x_min) / n; }
    double x(int i) const { return x_min + (i + 0.5) * dx(); }  // cell centres
    void check() const;
};

struct FieldState {
    Grid grid;
    std::vector<double> rho;
    std::vector<double> a;
    double t = 0.0;
    double outflow = 0.0;  // accumulated mass leaving through the boundaries

    double mass() const;
};

enum class Boundary { DirichletAsymptotic, Neumann };

// Explicit: everything explicit, dt limited by the diffusive bound.
// SemiImplicit: the kappa (1/rho)_x part of the density flux is taken
// linearised-implicit, so dt follows the advective bound only.
enum class Stepping { Explicit, SemiImplicit };

struct BoundaryData {
    Boundary kind = Boundary::DirichletAsymptotic;
    double rho_left = 1.0, a_left = 0.0;
    double rho_right = 1.0, a_right = 1.0;
};

struct InitialCondition {
    enum class Kind { ExactWave, Step } kind = Kind::ExactWave;
    Family family = Family::S1;
    double position = 0.0;
    double rho_left = 1.0, a_left = 0.0;
    double rho_right = 1.0, a_right = 1.0;
};

struct SimConfig {
    ModelParams params;
    Grid grid;
    double cfl = 0.9;
    double t_end = 10.0;
    Boundary bc = Boundary::DirichletAsymptotic;
    InitialCondition ic;
    double snapshot_every = 0.1;
    Stepping stepping = Stepping::Explicit;

    void check() const;
};

// Smoothing width spanning about two cells of the front's polarity gradient:
// 2 dx A'(0) with A'(0) = (1 - alpha)/(1 - s1).
double default_m_eps(const ModelParams& p, double dx);

// Step initial data between the two far-field states of S1.
InitialCondition s1_step(const ModelParams& p, double position = 0.0);

FieldState initial_state(const SimConfig& cfg);
BoundaryData boundary_for(const SimConfig& cfg);

// v = M(a) - kappa rho^-3 rho_x, central differences inside, one-sided at the ends.
std::vector<double> compute_velocity(const FieldState& st, const ModelParams& p);

double stable_dt(const FieldState& st, const ModelParams& p, double cfl);
double stable_dt_semi_implicit(const FieldState& st, const ModelParams& p, double cfl);

FieldState lax_friedrichs_step(const FieldState& st, const ModelParams& p, double dt, const BoundaryData& bc,
                               Stepping stepping = Stepping::Explicit);

struct SimResult {
    std::vector<FieldState> snapshots;
    long steps = 0;
};

SimResult simulate(const SimConfig& cfg);

struct FrontOptions {
    double window_start = 0.5;   // fraction of the run where the fit starts
    double boundary_band = 0.0;  // ignore cells this close to either boundary
};

// Linear interpolation of the single alpha-crossing; NumericalError if there is
// no crossing or more than one.
double front_position(const FieldState& st, double alpha, double boundary_band = 0.0);

double measure_wave_speed(const std::vector<FieldState>& snaps, double alpha, const FrontOptions& opt = {});

enum class Outcome { Polarisation, Depolarisation, Undecided };
std::string to_string(Outcome o);

struct ClassifyOptions {
    double window_fraction = 0.25;
    double speed_threshold = 0.05;
    double boundary_band = 1.0;
    double min_window = 1.0;  // shorter late-time windows cannot decide
};

struct Classification {
    Outcome outcome = Outcome::Undecided;
    double speed = 0.0;
    std::string detail;
};

Classification classify_outcome(const std::vector<FieldState>& snaps, const ModelParams& p,
                                const ClassifyOptions& opt = {});

struct ThresholdOptions {
    double alpha_lo = 0.6;
    double alpha_hi = 0.95;
    double tol = 0.005;
    double t_end = 40.0;
    double x_min = -40.0, x_max = 40.0;
    double cfl = 0.9;
    Stepping stepping = Stepping::SemiImplicit;
    int max_extensions = 2;  // t_end is extended by 1.5x on Undecided
};

struct ThresholdEstimate {
    int n;
    double alpha_bar;
    double alpha_pol;    // largest alpha classified Polarisation
    double alpha_depol;  // smallest alpha classified Depolarisation
    int runs;
};

// Outcome of one step-initial-data run at (kappa, alpha) on n cells.
Classification run_step_experiment(double kappa, double alpha, int n, const ThresholdOptions& opt);

std::vector<ThresholdEstimate> find_threshold_alpha(double kappa, const std::vector<int>& ladder,
                                                    const ThresholdOptions& opt = {});

}  // namespace polarwave
