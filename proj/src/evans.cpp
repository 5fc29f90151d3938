#include "polarwave/evans.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/interpolators/quintic_hermite.hpp>
#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>
#include <Eigen/Eigenvalues>

#include "polarwave/parallel.hpp"

namespace polarwave {

namespace odeint = boost::numeric::odeint;
using Hermite5 = boost::math::interpolators::cardinal_quintic_hermite<std::vector<double>>;

ScaledComplex ScaledComplex::make(Complex v, double log_scale) {
    ScaledComplex r;
    const double m = std::abs(v);
    if (m == 0.0 || !std::isfinite(m)) {
        r.mantissa = m == 0.0 ? Complex(0.0, 0.0) : v;
        r.log_scale = log_scale;
        return r;
    }
    int e = 0;
    std::frexp(m, &e);  // m = f 2^e, f in [0.5, 1)
    r.mantissa = v * std::ldexp(1.0, -e);
    r.log_scale = log_scale + e * std::numbers::ln2;
    return r;
}

Complex ScaledComplex::value() const { return mantissa * std::exp(log_scale); }

double ScaledComplex::log_abs() const { return std::log(std::abs(mantissa)) + log_scale; }

void EvansConfig::check(Family f) const {
    if (f != Family::S1 && f != Family::S2)
        throw DomainError("Evans analysis is set up for S1 and S2; S3 and S4 follow by reflection");
    if (f == Family::S1 && z_start > 0) throw DomainError("z_start must be negative for S1");
    if (f == Family::S2 && z_start < 0) throw DomainError("z_start must be positive for S2");
    if (!(tail_tol > 0)) throw DomainError("tail_tol must be positive");
    if (!(ode_rel_tol > 0 && ode_abs_tol > 0)) throw DomainError("ODE tolerances must be positive");
    if (!(renorm_threshold > 1)) throw DomainError("renorm_threshold must exceed 1");
    if (contour_samples_init < 8) throw DomainError("contour_samples_init must be at least 8");
    if (!(cache_step > 0)) throw DomainError("cache_step must be positive");
}

// ---- contours ----

void Contour::add_line(Complex a, Complex b) {
    Piece p{false, a, b, 0, 0, 0, std::abs(b - a)};
    pieces_.push_back(p);
    total_ += p.length;
}

void Contour::add_arc(double r, double th0, double th1) {
    Piece p{true, {}, {}, r, th0, th1, r * std::abs(th1 - th0)};
    pieces_.push_back(p);
    total_ += p.length;
}

Contour Contour::c1(double d_l, double r) {
    if (!(r > 0) || !(std::abs(d_l) < r)) throw DomainError("C1 needs r > 0 and |d_l| < r");
    Contour c;
    c.name_ = "c1";
    const double th = std::acos(d_l / r);
    c.add_arc(r, -th, th);
    c.add_line(std::polar(r, th), std::polar(r, -th));
    return c;
}

Contour Contour::c2(double r_i, double r_o) {
    if (!(r_i > 0 && r_o > r_i)) throw DomainError("C2 needs 0 < r_i < r_o");
    Contour c;
    c.name_ = "c2";
    const double h = std::numbers::pi / 2;
    c.add_arc(r_o, -h, h);
    c.add_line({0, r_o}, {0, r_i});
    c.add_arc(r_i, h, -h);
    c.add_line({0, -r_i}, {0, -r_o});
    return c;
}

Contour Contour::polyline(const std::vector<Complex>& points, bool close) {
    if (points.size() < 2) throw DomainError("polyline needs at least two points");
    Contour c;
    c.name_ = "polyline";
    c.closed_ = close;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) c.add_line(points[i], points[i + 1]);
    if (close && points.back() != points.front()) c.add_line(points.back(), points.front());
    if (close && points.size() < 3) throw DomainError("closed polyline needs three points");
    return c;
}

Contour Contour::segment(Complex a, Complex b) {
    Contour c = polyline({a, b}, false);
    c.name_ = "segment";
    return c;
}

Complex Contour::point(double t) const {
    double target = std::clamp(t, 0.0, 1.0) * total_;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const Piece& p = pieces_[i];
        if (target <= p.length || i + 1 == pieces_.size()) {
            double u = p.length > 0 ? std::min(target / p.length, 1.0) : 0.0;
            if (p.arc) return std::polar(p.r, p.th0 + u * (p.th1 - p.th0));
            return p.a + u * (p.b - p.a);
        }
        target -= p.length;
    }
    return {};
}

double Contour::min_real() const {
    double m = INFINITY;
    for (const Piece& p : pieces_) {
        for (int k = 0; k <= 512; ++k) {
            double u = k / 512.0;
            Complex z = p.arc ? std::polar(p.r, p.th0 + u * (p.th1 - p.th0)) : p.a + u * (p.b - p.a);
            m = std::min(m, z.real());
        }
    }
    return m;
}

// ---- Evans function ----

struct EvansFunction::Table {
    Hermite5 R;
    Hermite5 A;
};

namespace {

using State = std::array<Complex, 3>;

double state_norm(const State& x) {
    return std::sqrt(std::norm(x[0]) + std::norm(x[1]) + std::norm(x[2]));
}

}  // namespace

EvansFunction::EvansFunction(Family f, const ModelParams& p, const EvansConfig& cfg)
    : family_(f), params_(p), cfg_(cfg) {
    cfg_.check(f);
    ModelParams exact = p;
    exact.m_eps = 0.0;
    params_ = exact;
    wave_ = make_wave(f, exact);

    const int side = f == Family::S1 ? 0 : 1;
    const double dir = side == 0 ? -1.0 : 1.0;
    if (cfg_.z_start != 0.0) {
        z_start_ = cfg_.z_start;
    } else {
        z_start_ = 20.0 * dir;
        auto off = [&](double z) {
            return std::max(std::abs(wave_.R(z) - wave_.r_far[side]), std::abs(wave_.A(z) - wave_.a_far[side]));
        };
        while (off(z_start_) > cfg_.tail_tol && std::abs(z_start_) < 60.0) z_start_ += 5.0 * dir;
    }
    const double zs = z_start_;
    const double h = cfg_.cache_step;
    const int n = static_cast<int>(std::ceil((std::abs(zs) + 1.0) / h)) + 1;
    if (f == Family::S1) {
        z_lo_ = -(n - 1) * h;
        z_hi_ = 0.0;
    } else {
        z_lo_ = 0.0;
        z_hi_ = (n - 1) * h;
    }
    const double m = wave_.m_side[side];
    // quintic Hermite: the S2 profile is steep next to the front
    const double s = wave_.speed, J = wave_.flux, k = p.kappa;
    std::vector<double> r(n), rp(n), rpp(n), a(n), ap(n), app(n);
    for (int i = 0; i < n; ++i) {
        double z = z_lo_ + i * h;
        TravellingWaveState st{wave_.R(z), wave_.A(z)};
        TravellingWaveState d = travelling_wave_rhs_flux(st, m, k, s, J);
        r[i] = st.R;
        a[i] = st.A;
        rp[i] = d.R;
        ap[i] = d.A;
        rpp[i] = (3.0 * (m - s) * st.R * st.R - 2.0 * J * st.R) * d.R / k;
        app[i] = (s * d.R - d.A * st.R - st.A * d.R) / J;
    }
    table_ = std::make_shared<Table>(Table{Hermite5(std::move(r), std::move(rp), std::move(rpp), z_lo_, h),
                                           Hermite5(std::move(a), std::move(ap), std::move(app), z_lo_, h)});

    r0_ = wave_.R(0.0);
    a_prime0_ = (s * r0_ + J - p.alpha * r0_) / J;
}

double EvansFunction::branch_point() const {
    return -wave_.speed * wave_.speed / (4.0 * params_.kappa);
}

namespace {

int shooting_side(Family f) { return f == Family::S1 ? 0 : 1; }

}  // namespace

TravellingWaveState EvansFunction::profile_at(double z) const {
    const bool on_table = z >= z_lo_ && z <= z_hi_;
    if (on_table) return {table_->R(z), table_->A(z)};
    return {wave_.R(z), wave_.A(z)};
}

namespace {

ComplexMat3 assemble(const TravellingWaveState& st, const TravellingWaveState& d, double s, double kappa,
                     Complex lambda, double mprime) {
    const double R = st.R, Rp = d.R, Ap = d.A;
    ComplexMat3 m;
    m(0, 0) = 3.0 * Rp / R;
    m(0, 1) = -R * R * R / kappa;
    m(0, 2) = mprime * R * R * R / kappa;
    m(1, 0) = (2.0 * Rp * s - R * R * lambda) / (R * R * R);
    m(1, 1) = -Rp / R - R * s / kappa;
    m(1, 2) = mprime * R * s / kappa;
    m(2, 0) = 0.0;
    m(2, 1) = (Ap - 1.0) * R / s;
    m(2, 2) = R * (lambda + 1.0) / s;
    return m;
}

}  // namespace

ComplexMat3 EvansFunction::matrix(double z, Complex lambda, double mprime) const {
    const int side = z < 0 ? 0 : (z > 0 ? 1 : shooting_side(family_));
    TravellingWaveState st = profile_at(z);
    TravellingWaveState d =
        travelling_wave_rhs_flux(st, wave_.m_side[side], params_.kappa, wave_.speed, wave_.flux);
    return assemble(st, d, wave_.speed, params_.kappa, lambda, mprime);
}

ComplexVec3 EvansFunction::jump(const ComplexVec3& vec) const {
    const double s = wave_.speed, k = params_.kappa;
    ComplexVec3 out = vec;
    const Complex c = vec(2) / (k * a_prime0_);
    out(0) -= c * r0_ * r0_ * r0_;
    out(1) -= c * r0_ * s;
    return out;
}

std::pair<ComplexVec3, ComplexVec3> EvansFunction::boundary_vectors(Complex lambda) const {
    const double s = wave_.speed, k = params_.kappa;
    const Complex r = dispersion_root(lambda, s, k);
    const double c = s * s / ((s - 1.0) * (s - 1.0) * k);
    ComplexVec3 y;
    if (family_ == Family::S1)
        y << c * (-s + r), 2.0 * lambda, 0.0;
    else
        y << -c * (s + r), 2.0 * lambda, 0.0;
    ComplexVec3 x(0.0, 0.0, 1.0);
    return {jump(x), jump(y)};
}

Complex EvansFunction::start_eigenvalue(Complex lambda) const {
    // both shooting sides carry the minus-form far-field matrix
    auto mu = spatial_eigenvalues(Side::Minus, lambda, wave_.speed, params_.kappa);
    return family_ == Family::S1 ? mu[1] : mu[2];
}

ComplexVec3 EvansFunction::start_vector(Complex lambda) const {
    const double s = wave_.speed, k = params_.kappa;
    const Complex mu = start_eigenvalue(lambda);
    ComplexVec3 v(-1.0 / (k * mu), 1.0, 1.0 / (lambda + 1.0 - s * mu));
    const Side side = family_ == Family::S1 ? Side::Minus : Side::Plus;
    const ComplexMat3 a = asymptotic_matrix(side, family_, lambda, s, k);
    const bool finite = v.allFinite();
    if (finite && (a * v - mu * v).norm() <= 1e-8 * v.norm() * std::max(1.0, a.norm())) return v;
    // coalescing eigenvalues or a vanishing entry: take the eigensolver's vector
    Eigen::ComplexEigenSolver<ComplexMat3> es(a);
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(es.eigenvalues()(i) - mu) < std::abs(es.eigenvalues()(best) - mu)) best = i;
    return es.eigenvectors().col(best);
}

namespace {

struct Integration {
    State x;
    double log_scale = 0.0;
};

template <class MatrixAt>
void integrate(const MatrixAt& mat, double z0, double z1, Integration& io, const EvansConfig& cfg, bool renorm,
               Complex lambda) {
    if (z0 == z1) return;
    auto system = [&](const State& x, State& dxdt, double z) {
        const ComplexMat3 m = mat(z);
        for (int i = 0; i < 3; ++i) dxdt[i] = m(i, 0) * x[0] + m(i, 1) * x[1] + m(i, 2) * x[2];
    };
    auto stepper = odeint::make_controlled(cfg.ode_abs_tol, cfg.ode_rel_tol, odeint::runge_kutta_dopri5<State>());
    const double dir = z1 > z0 ? 1.0 : -1.0;
    double z = z0;
    double dz = dir * 1e-2;
    long steps = 0;
    while (dir * (z1 - z) > 0) {
        if (dir * (z + dz - z1) > 0) dz = z1 - z;
        const bool last = dz == z1 - z;
        odeint::controlled_step_result res = stepper.try_step(system, io.x, z, dz);
        if (res == odeint::fail) {
            if (std::abs(dz) < 1e-13) {
                std::ostringstream os;
                os << "integrator step underflow at z = " << z << " for lambda = " << lambda;
                throw NumericalError(os.str());
            }
            continue;
        }
        if (last) z = z1;
        double n = state_norm(io.x);
        if (!std::isfinite(n)) {
            std::ostringstream os;
            os << "non-finite solution at z = " << z << " for lambda = " << lambda;
            throw NumericalError(os.str());
        }
        if (renorm && n > cfg.renorm_threshold) {
            for (auto& c : io.x) c /= n;
            io.log_scale += std::log(n);
            stepper.reset();  // cached derivative belongs to the old scale
        }
        if (++steps > 10000000) throw NumericalError("integrator exceeded the step budget");
    }
}

State to_state(const ComplexVec3& v) { return {v(0), v(1), v(2)}; }
ComplexVec3 to_vec(const State& s) { return ComplexVec3(s[0], s[1], s[2]); }

}  // namespace

ScaledVec3 EvansFunction::shoot(Complex lambda, double z_end) const {
    const double zs = z_start_;
    if (family_ == Family::S1 ? (z_end > 0 || z_end < zs) : (z_end < 0 || z_end > zs))
        throw DomainError("shoot: z_end must lie between z_start and 0");
    ComplexVec3 v = start_vector(lambda);
    Integration io;
    const double n0 = v.norm();
    io.x = to_state(v / n0);
    const int side = shooting_side(family_);
    const double s = wave_.speed, k = params_.kappa;
    auto mat = [&](double z) {
        TravellingWaveState st = profile_at(z);
        TravellingWaveState d = travelling_wave_rhs_flux(st, wave_.m_side[side], k, s, wave_.flux);
        return assemble(st, d, s, k, lambda, 0.0);
    };
    integrate(mat, zs, z_end, io, cfg_, true, lambda);
    ScaledVec3 out;
    out.v = to_vec(io.x);
    const double n = out.v.norm();
    out.v /= n;
    out.log_scale = io.log_scale + std::log(n);
    return out;
}

ScaledComplex EvansFunction::operator()(Complex lambda) const {
    ScaledVec3 shot = shoot(lambda);
    auto [x, y] = boundary_vectors(lambda);
    ComplexMat3 m;
    m.col(0) = shot.v;
    m.col(1) = x;
    m.col(2) = y;
    return ScaledComplex::make(m.determinant(), shot.log_scale);
}

ComplexMat3 linearized_matrix(double z, Complex lambda, Family f, const ModelParams& p) {
    return EvansFunction(f, p).matrix(z, lambda);
}

std::pair<ComplexVec3, ComplexVec3> boundary_vectors_stable(Complex lambda, Family f, const ModelParams& p) {
    return EvansFunction(f, p).boundary_vectors(lambda);
}

ComplexVec3 jump_apply(const ComplexVec3& vec, Family f, const ModelParams& p) {
    return EvansFunction(f, p).jump(vec);
}

ScaledVec3 shoot_unstable(Complex lambda, Family f, const ModelParams& p, const EvansConfig& cfg) {
    return EvansFunction(f, p, cfg).shoot(lambda);
}

ScaledComplex evans_det(Complex lambda, Family f, const ModelParams& p, const EvansConfig& cfg) {
    return EvansFunction(f, p, cfg)(lambda);
}

MollifiedJump mollified_jump(const EvansFunction& ev, const ComplexVec3& vec, Complex lambda, double m_eps,
                             double width_factor) {
    if (!(m_eps > 0)) throw DomainError("mollified_jump: m_eps must be positive");
    const WaveSolution& w = ev.wave();
    const double s = w.speed, k = w.params.kappa;
    ModelParams smooth = w.params;
    smooth.m_eps = m_eps;
    const double a_prime0 = w.derivative(0.0).A;
    const double half = width_factor * m_eps / std::abs(a_prime0);
    const int shoot = shooting_side(ev.family());
    const double closed_dir = shoot == 0 ? 1.0 : -1.0;  // closed-form side of z = 0

    EvansConfig cfg = ev.config();
    cfg.ode_rel_tol = 1e-12;
    cfg.ode_abs_tol = 1e-14;
    auto side_matrix = [&](int side, bool with_delta) {
        return [&, side, with_delta](double z) {
            TravellingWaveState st{w.R(z), w.A(z)};
            TravellingWaveState d = travelling_wave_rhs_flux(st, w.m_side[side], k, s, w.flux);
            double mp = with_delta ? motility_derivative(st.A, smooth) : 0.0;
            return assemble(st, d, s, k, lambda, mp);
        };
    };
    const int closed = 1 - shoot;

    // closed-form side: move vec out to the edge of the layer
    Integration edge;
    edge.x = to_state(vec);
    integrate(side_matrix(closed, false), 0.0, closed_dir * half, edge, cfg, false, lambda);

    // through the layer with the smooth M'
    Integration through = edge;
    integrate(side_matrix(closed, true), closed_dir * half, 0.0, through, cfg, false, lambda);
    integrate(side_matrix(shoot, true), 0.0, -closed_dir * half, through, cfg, false, lambda);

    // jump at z = 0, then the regular system on the shooting side
    Integration ref;
    ref.x = to_state(ev.jump(vec));
    integrate(side_matrix(shoot, false), 0.0, -closed_dir * half, ref, cfg, false, lambda);

    return {to_vec(through.x), to_vec(ref.x), half};
}

// ---- scans and winding ----

std::vector<EvansSample> evans_scan(const Contour& c, const EvansFunction& ev, int samples) {
    if (samples < 2) throw DomainError("evans_scan needs at least two samples");
    std::vector<EvansSample> out(samples);
    parallel_for(samples, [&](std::size_t i) {
        Complex l = c.point(static_cast<double>(i) / (samples - 1));
        out[i] = {l, ev(l)};
    });
    return out;
}

namespace {

double phase_step(const ScaledComplex& a, const ScaledComplex& b) {
    return std::arg(b.mantissa / a.mantissa);
}

}  // namespace

WindingResult winding_number(const Contour& c, const std::function<ScaledComplex(Complex)>& f, int samples_init,
                             int max_depth) {
    if (!c.closed()) throw DomainError("winding number needs a closed contour");
    if (samples_init < 3) throw DomainError("winding number needs at least three samples");
    struct Node {
        double t;
        ScaledComplex d;
        int depth;  // depth of the segment starting here
    };
    const int n0 = samples_init;
    std::vector<Node> nodes(n0);
    parallel_for(n0, [&](std::size_t i) {
        double t = static_cast<double>(i) / n0;
        nodes[i] = {t, f(c.point(t)), 0};
    });
    auto check_zero = [&](const Node& nd) {
        if (nd.d.mantissa == Complex(0.0, 0.0) || !std::isfinite(std::abs(nd.d.mantissa))) {
            std::ostringstream os;
            os << "Evans function vanishes on the contour at lambda = " << c.point(nd.t);
            throw ContourThroughZero(os.str());
        }
    };
    for (const Node& nd : nodes) check_zero(nd);

    for (;;) {
        const std::size_t n = nodes.size();
        std::vector<std::size_t> split;
        for (std::size_t i = 0; i < n; ++i) {
            const Node& a = nodes[i];
            const Node& b = nodes[(i + 1) % n];
            if (std::abs(phase_step(a.d, b.d)) < std::numbers::pi / 2) continue;
            if (a.depth >= max_depth) {
                std::ostringstream os;
                os << "phase of D does not settle near lambda = " << c.point(a.t)
                   << "; a zero is on or very close to the contour";
                throw ContourThroughZero(os.str());
            }
            split.push_back(i);
        }
        if (split.empty()) break;
        std::vector<Node> mids(split.size());
        parallel_for(split.size(), [&](std::size_t j) {
            const Node& a = nodes[split[j]];
            double t_end = split[j] + 1 == n ? 1.0 : nodes[split[j] + 1].t;
            double t = 0.5 * (a.t + t_end);
            mids[j] = {t, f(c.point(t)), a.depth + 1};
        });
        std::vector<Node> merged;
        merged.reserve(n + split.size());
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Node a = nodes[i];
            if (j < split.size() && split[j] == i) {
                a.depth += 1;
                merged.push_back(a);
                check_zero(mids[j]);
                merged.push_back(mids[j]);
                ++j;
            } else {
                merged.push_back(a);
            }
        }
        nodes = std::move(merged);
    }

    // a sample far below both neighbours in modulus means D nearly vanishes there
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        double l = nodes[i].d.log_abs();
        double lp = nodes[(i + n - 1) % n].d.log_abs(), ln = nodes[(i + 1) % n].d.log_abs();
        if (l < std::min(lp, ln) - std::log(1e6)) {
            std::ostringstream os;
            os << "|D| nearly vanishes on the contour at lambda = " << c.point(nodes[i].t);
            throw ContourThroughZero(os.str());
        }
    }

    WindingResult res;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += phase_step(nodes[i].d, nodes[(i + 1) % n].d);
    res.total_turns = total / (2.0 * std::numbers::pi);
    res.winding = static_cast<int>(std::lround(res.total_turns));
    if (std::abs(res.total_turns - res.winding) > 0.05) {
        std::ostringstream os;
        os << "winding number not resolved: " << res.total_turns << " turns";
        throw NumericalError(os.str());
    }
    for (const Node& nd : nodes) res.samples.push_back({c.point(nd.t), nd.d});
    return res;
}

WindingResult winding_number(const Contour& c, const EvansFunction& ev) {
    if (!(c.min_real() > ev.branch_point())) {
        std::ostringstream os;
        os << "contour reaches Re lambda = " << c.min_real() << ", left of the branch point "
           << ev.branch_point();
        throw DomainError(os.str());
    }
    return winding_number(
        c, [&ev](Complex l) { return ev(l); }, ev.config().contour_samples_init, ev.config().max_refine_depth);
}

int winding_number(const Contour& c, Family f, const ModelParams& p, const EvansConfig& cfg) {
    return winding_number(c, EvansFunction(f, p, cfg)).winding;
}

}  // namespace polarwave
