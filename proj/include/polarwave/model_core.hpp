#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "polarwave/errors.hpp"

namespace polarwave {

struct ModelParams {
    double kappa = 1.0;
    double alpha = 0.5;
    double m_eps = 0.0;  // 0 selects the exact step

    void check() const;
};

enum class Family { S1, S2, S3, S4 };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// M(a) and its derivative. For m_eps == 0 the derivative is reported as 0 (the
// delta part is handled by the jump condition).
double motility(double a, const ModelParams& p);
double motility_derivative(double a, const ModelParams& p);

double g_fn(double y);
double h_fn(double y);

struct InvertOptions {
    double tol = 1e-12;
    int max_iter = 200;
    bool newton_polish = true;
};

double g_inv(double c, const InvertOptions& opt = {});
double h_inv(double c, const InvertOptions& opt = {});

double wave_speed(Family f, const ModelParams& p);

struct TravellingWaveState {
    double R;
    double A;
};

struct Validity {
    bool physical = true;
    std::string reason;
};

Validity validate_physical(Family f, const ModelParams& p);

// Throws PhysicalityError for the unphysical regimes of S2 and S4.
TravellingWaveState profile(Family f, const ModelParams& p, double z);

// A travelling wave given by evaluators. The mass flux R(V - s) is constant
// along the wave: -s for S1/S2, 1 - s for S3/S4.
struct WaveSolution {
    Family family = Family::S1;
    ModelParams params;
    double speed = 0.0;
    double flux = 0.0;
    std::function<double(double)> r_at;
    std::function<double(double)> a_at;

    // Index 0 is the far left (z -> -inf), 1 the far right. m_side holds the
    // exact-step motility on each side of the front at z = 0.
    double m_side[2] = {0.0, 1.0};
    double r_far[2] = {1.0, 1.0};
    double a_far[2] = {0.0, 1.0};

    double R(double z) const { return r_at(z); }
    double A(double z) const { return a_at(z); }
    double V(double z) const { return speed + flux / r_at(z); }
    double motility_at(double z) const { return z < 0 ? m_side[0] : m_side[1]; }

    // (R', A') from the travelling-wave ODE, using the side-wise motility.
    TravellingWaveState derivative(double z) const;
};

WaveSolution make_wave(Family f, const ModelParams& p);

double velocity_profile(const WaveSolution& w, double z);

// R' = (R^2/kappa)((M(A)-s)R + s), A' = 1 + (A-s)R/s.
TravellingWaveState travelling_wave_rhs(const TravellingWaveState& st, const ModelParams& p, double s);

// Same system for a general mass flux J = R(V - s); J = -s recovers the above.
TravellingWaveState travelling_wave_rhs_flux(const TravellingWaveState& st, double motility_value,
                                             double kappa, double s, double J);

struct T1Options {
    double z_max = 40.0;
    double h_min = 1e-3;   // first cell next to the front
    double growth = 1.05;  // geometric cell growth
    double quad_tol = 1e-13;
};

WaveSolution apply_T1(const WaveSolution& w, const T1Options& opt = {});
WaveSolution apply_T2_tilde(const WaveSolution& w);

struct ProfileSample {
    double z, R, A, V;
};

std::vector<ProfileSample> sample_profile(const WaveSolution& w, double z0, double z1, double dz);

}  // namespace polarwave
