#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polarwave/errors.hpp"
#include "polarwave/model_core.hpp"

namespace polarwave {

using Complex = std::complex<double>;
using ComplexMat3 = Eigen::Matrix3cd;
using ComplexVec3 = Eigen::Vector3cd;

enum class Side { Minus, Plus };

// A spatial eigenvalue sits on the imaginary axis.
class OnBorder : public DomainError {
public:
    explicit OnBorder(const std::string& what) : DomainError(what) {}
};

// Principal branch sqrt(s^2 + 4 kappa lambda); shared by every closed form.
Complex dispersion_root(Complex lambda, double s, double kappa);

// Constant-coefficient limits of the linearised first-order system. For S2 the
// far-field states are swapped, so the minus matrix has the plus form and vice versa.
ComplexMat3 asymptotic_matrix(Side side, Family family, Complex lambda, double s, double kappa);

// Closed-form eigenvalues (mu1, mu2, mu3) of the minus-form matrix
// [[0,-1/k,0],[-l,-s/k,0],[0,-1/s,(l+1)/s]] (Side::Minus) or of the plus form
// (Side::Plus), which are the minus ones scaled by s/(s-1).
std::array<Complex, 3> spatial_eigenvalues(Side side, Complex lambda, double s, double kappa);

// Dense eigenvalues, no ordering guarantee.
std::array<Complex, 3> dense_eigenvalues(const ComplexMat3& m);

// Number of spatial eigenvalues with positive real part; OnBorder within 1e-10 of the axis.
int morse_index(Side side, Complex lambda, double s, double kappa);

struct SpectrumCurve {
    std::string label;
    std::vector<Complex> points;
};

// lambda1(mu) = -1 + i mu s (line) and lambda2(mu) = -kappa mu^2 + i mu s (parabola).
std::array<SpectrumCurve, 2> fredholm_borders(double s, double kappa, double mu_min, double mu_max,
                                              int samples);

struct AbsSpectrum {
    SpectrumCurve segment;
    SpectrumCurve branch_plus;
    SpectrumCurve branch_minus;
    double segment_left;   // -(s^2 + 2 kappa)/(2 kappa)
    double segment_right;  // -s^2/(4 kappa)
};

// Real segment plus the two complex branches for lambda1 in [lambda1_min, segment_left].
AbsSpectrum absolute_spectrum_closed(double s, double kappa, double lambda1_min, int samples);

// Imaginary part of the upper branch at real part lambda1 < segment_left.
double absolute_branch_imag(double s, double kappa, double lambda1);

struct SearchBox {
    double re_min, re_max, im_min, im_max;
};

struct AbsScanOptions {
    double line_spacing = 1e-3;  // spacing of vertical scan lines
    double im_step = 0.02;       // sampling step along each line
    double tol = 1e-10;          // bisection tolerance in Im lambda
};

// Points where the i_inf-th and (i_inf+1)-th spatial eigenvalues (ordered by real
// part, from the dense eigensolver on the minus-form matrix) have equal real parts.
std::vector<Complex> absolute_spectrum_numeric(double s, double kappa, const SearchBox& box,
                                               const AbsScanOptions& opt = {});

// Morse index at lambda = 100 (the far-right reference).
int morse_index_at_infinity(double s, double kappa);

struct Weights {
    double eta_minus;
    double eta_plus;
};

// Ideal exponential weights; requires s < 0.
Weights ideal_weights(double s, double kappa);

// Admissible open intervals (0, -s/kappa) and (0, s^2/(kappa(1-s))).
double weight_limit_minus(double s, double kappa);
double weight_limit_plus(double s, double kappa);

// Borders in the weighted space, spatial eigenvalue nu = eta + i mu on each side.
std::array<SpectrumCurve, 4> weighted_borders(double s, double kappa, Weights w, double mu_min,
                                              double mu_max, int samples);

// Largest real part over the sampled weighted borders of both sides.
double weighted_border_max_real(double s, double kappa, Weights w, double mu_min, double mu_max,
                                int samples = 4001);

}  // namespace polarwave
