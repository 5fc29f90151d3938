#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "polarwave/errors.hpp"
#include "polarwave/model_core.hpp"
#include "polarwave/spectra.hpp"

namespace polarwave {

// mantissa * exp(log_scale), with 0.5 <= |mantissa| < 2 or mantissa == 0.
struct ScaledComplex {
    Complex mantissa{0.0, 0.0};
    double log_scale = 0.0;

    static ScaledComplex make(Complex v, double log_scale = 0.0);
    Complex value() const;  // may overflow; for display only
    double log_abs() const;
};

struct ScaledVec3 {
    ComplexVec3 v;  // unit norm
    double log_scale = 0.0;
};

class ContourThroughZero : public NumericalError {
public:
    explicit ContourThroughZero(const std::string& what) : NumericalError(what) {}
};

struct EvansConfig {
    // 0 picks -20 for S1 and +20 for S2, moved outward in steps of 5 (up to 60)
    // while the profile there is farther than tail_tol from its far-field state.
    // A nonzero value is used as given.
    double z_start = 0.0;
    double tail_tol = 1e-4;
    double ode_rel_tol = 1e-10;
    double ode_abs_tol = 1e-12;
    double renorm_threshold = 1e6;
    int contour_samples_init = 256;
    double cache_step = 1e-3;  // profile table spacing on the shooting side
    int max_refine_depth = 20;

    void check(Family f) const;
};

// Closed contour or open path made of straight pieces and circular arcs,
// parametrised by t in [0, 1].
class Contour {
public:
    // Arc |lambda| = r through lambda = r, closed by the chord Re lambda = d_l.
    // Encloses the origin when -r < d_l < 0.
    static Contour c1(double d_l, double r);
    // Half annulus r_i < |lambda| < r_o, Re lambda > 0 (origin excluded).
    static Contour c2(double r_i, double r_o);
    static Contour polyline(const std::vector<Complex>& points, bool close);
    static Contour segment(Complex a, Complex b);

    Complex point(double t) const;
    bool closed() const { return closed_; }
    std::string name() const { return name_; }
    // Smallest real part over the path, sampled on every piece.
    double min_real() const;

private:
    struct Piece {
        bool arc;
        Complex a, b;           // line ends
        double r, th0, th1;     // arc radius and angles (centre 0)
        double length;
    };
    std::vector<Piece> pieces_;
    double total_ = 0.0;
    bool closed_ = true;
    std::string name_;
    void add_line(Complex a, Complex b);
    void add_arc(double r, double th0, double th1);
};

// Evans function for S1 or S2 at fixed parameters. Holds the tabulated
// profile on the shooting side; const methods are safe to call concurrently.
class EvansFunction {
public:
    EvansFunction(Family f, const ModelParams& p, const EvansConfig& cfg = {});

    Family family() const { return family_; }
    const WaveSolution& wave() const { return wave_; }
    const EvansConfig& config() const { return cfg_; }
    double z_start() const { return z_start_; }
    double speed() const { return wave_.speed; }
    // lambda = -s^2/(4 kappa); the contour must stay to its right.
    double branch_point() const;

    // Profile on the shooting side (tabulated); direct evaluation elsewhere.
    TravellingWaveState profile_at(double z) const;

    // Coefficient matrix of the first-order eigenvalue system. The delta part of
    // M'(A) is left out (see jump); mprime adds a smooth M'(A) instead. At z = 0
    // the limit from the shooting side is used.
    ComplexMat3 matrix(double z, Complex lambda, double mprime = 0.0) const;

    // Closed-form solutions decaying on the far side of the front, moved across
    // z = 0 to the shooting side: (X, Y) with X carrying delta a = 1.
    std::pair<ComplexVec3, ComplexVec3> boundary_vectors(Complex lambda) const;

    // Moves a vector across z = 0 from the closed-form side to the shooting side.
    ComplexVec3 jump(const ComplexVec3& vec) const;

    // Unstable eigenvector of the far-field matrix on the shooting side.
    ComplexVec3 start_vector(Complex lambda) const;
    Complex start_eigenvalue(Complex lambda) const;

    // Integrates from z_start to z_end (default 0) on the shooting side.
    ScaledVec3 shoot(Complex lambda, double z_end = 0.0) const;

    ScaledComplex operator()(Complex lambda) const;

private:
    Family family_;
    ModelParams params_;
    EvansConfig cfg_;
    WaveSolution wave_;
    double z_start_ = 0.0;
    double z_lo_ = 0.0, z_hi_ = 0.0;  // tabulated range
    struct Table;
    std::shared_ptr<const Table> table_;
    double a_prime0_ = 0.0;
    double r0_ = 0.0;
};

// One-shot conveniences (each builds an EvansFunction).
ComplexMat3 linearized_matrix(double z, Complex lambda, Family f, const ModelParams& p);
std::pair<ComplexVec3, ComplexVec3> boundary_vectors_stable(Complex lambda, Family f, const ModelParams& p);
ComplexVec3 jump_apply(const ComplexVec3& vec, Family f, const ModelParams& p);
ScaledVec3 shoot_unstable(Complex lambda, Family f, const ModelParams& p, const EvansConfig& cfg = {});
ScaledComplex evans_det(Complex lambda, Family f, const ModelParams& p, const EvansConfig& cfg = {});

// Brute-force check of the jump: integrates the eigenvalue system with the
// logistic M'(A) of width m_eps across [-w, w], w = width_factor m_eps / |A'(0)|,
// starting from vec at the closed-form side. Returns the value at the shooting
// side, together with the regular-part propagation of jump(vec) to the same point.
struct MollifiedJump {
    ComplexVec3 mollified;
    ComplexVec3 reference;
    double half_width;
};
MollifiedJump mollified_jump(const EvansFunction& ev, const ComplexVec3& vec, Complex lambda, double m_eps,
                             double width_factor = 40.0);

struct EvansSample {
    Complex lambda;
    ScaledComplex d;
};

// Samples on the path at t = i/(samples-1), evaluated concurrently.
std::vector<EvansSample> evans_scan(const Contour& c, const EvansFunction& ev, int samples);

struct WindingResult {
    int winding = 0;
    double total_turns = 0.0;  // unrounded phase change / 2 pi
    std::vector<EvansSample> samples;
};

// Argument-principle count. Segments are bisected until every phase step is
// below pi/2; ContourThroughZero when that fails or |D| collapses on the path.
WindingResult winding_number(const Contour& c, const std::function<ScaledComplex(Complex)>& f, int samples_init,
                             int max_depth = 20);
// Also refuses contours reaching the branch point of the far-field eigenvalues.
WindingResult winding_number(const Contour& c, const EvansFunction& ev);
int winding_number(const Contour& c, Family f, const ModelParams& p, const EvansConfig& cfg = {});

}  // namespace polarwave
