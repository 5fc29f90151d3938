#include "polarwave/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace polarwave {

void ModelParams::check() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw DomainError("kappa must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in (0,1)");
    if (!(m_eps >= 0.0))
        throw DomainError("m_eps must be nonnegative");
}

std::string to_string(Family f) {
    switch (f) {
        case Family::S1: return "S1";
        case Family::S2: return "S2";
        case Family::S3: return "S3";
        case Family::S4: return "S4";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "S1" || s == "s1") return Family::S1;
    if (s == "S2" || s == "s2") return Family::S2;
    if (s == "S3" || s == "s3") return Family::S3;
    if (s == "S4" || s == "s4") return Family::S4;
    throw DomainError("unknown wave family '" + s + "'");
}

double motility(double a, const ModelParams& p) {
    if (p.m_eps == 0.0) return a > p.alpha ? 1.0 : 0.0;
    double u = (a - p.alpha) / p.m_eps;
    if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
    double e = std::exp(u);
    return e / (1.0 + e);
}

double motility_derivative(double a, const ModelParams& p) {
    if (p.m_eps == 0.0) return 0.0;
    double e = std::exp(-std::abs(a - p.alpha) / p.m_eps);
    return e / (p.m_eps * (1.0 + e) * (1.0 + e));
}

double g_fn(double y) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError("g_fn: argument must lie in (0,1)");
    return 1.0 / y + std::log(1.0 / y - 1.0);
}

double h_fn(double y) {
    if (!(y > 1.0)) throw DomainError("h_fn: argument must exceed 1");
    return 1.0 / y + std::log1p(-1.0 / y);
}

namespace {

// With t = log(1/y - 1), g = 1 + t + e^t. Returns t.
double g_inv_logit(double c, const InvertOptions& opt) {
    if (!std::isfinite(c)) throw DomainError("g_inv: non-finite argument");
    // written as (t - d) + e^t so the sign is exact near t = d in the far tail
    const double d = c - 1.0;
    auto F = [d](double t) { return (t - d) + std::exp(t); };
    double hi = c > 1.0 ? std::min(d, std::log(c)) : d;
    double lo = hi - 1.0;
    while (F(lo) > 0) lo = hi - 2.0 * (hi - lo);
    double tol = std::max(opt.tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c));
    auto done = [&](double a, double b) { return (b - a) * (1.0 + std::exp(b)) <= tol; };
    std::uintmax_t iters = static_cast<std::uintmax_t>(opt.max_iter);
    auto br = boost::math::tools::bisect(F, lo, hi, done, iters);
    double t = 0.5 * (br.first + br.second);
    if (opt.newton_polish) {
        for (int k = 0; k < 2; ++k) t -= F(t) / (1.0 + std::exp(t));
    }
    return t;
}

// With t = log(1 - 1/y) < 0, h = 1 + t - e^t. Returns t.
double h_inv_logit(double c, const InvertOptions& opt) {
    if (!std::isfinite(c)) throw DomainError("h_inv: non-finite argument");
    if (!(c < 0.0)) throw DomainError("h_inv: argument outside the range of h (must be < 0)");
    const double d = c - 1.0;
    auto F = [c, d](double t) { return t < -1.0 ? (t - d) - std::exp(t) : -(std::expm1(t) - t) - c; };
    double lo = d;
    double hi = -std::min(1.0, std::sqrt(-c));
    double tol = std::max(opt.tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c));
    auto done = [&](double a, double b) { return (b - a) * (-std::expm1(a)) <= tol; };
    std::uintmax_t iters = static_cast<std::uintmax_t>(opt.max_iter);
    auto br = boost::math::tools::bisect(F, lo, hi, done, iters);
    double t = 0.5 * (br.first + br.second);
    if (opt.newton_polish) {
        for (int k = 0; k < 2; ++k) {
            double tn = t - F(t) / (-std::expm1(t));
            if (tn < 0) t = tn;
        }
    }
    return t;
}

}  // namespace

double g_inv(double c, const InvertOptions& opt) {
    return 1.0 / (1.0 + std::exp(g_inv_logit(c, opt)));
}

double h_inv(double c, const InvertOptions& opt) {
    return -1.0 / std::expm1(h_inv_logit(c, opt));
}

double wave_speed(Family f, const ModelParams& p) {
    p.check();
    double a = std::sqrt(p.kappa * (1.0 / p.alpha - 1.0));
    double b = std::sqrt(p.kappa * (1.0 / (1.0 - p.alpha) - 1.0));
    switch (f) {
        case Family::S1: return -a;
        case Family::S2: return a;
        case Family::S3: return 1.0 + b;
        case Family::S4: return 1.0 - b;
    }
    return 0.0;
}

Validity validate_physical(Family f, const ModelParams& p) {
    double s = wave_speed(f, p);
    Validity v;
    if (f == Family::S2 && !(s > 1.0)) {
        std::ostringstream os;
        os << "S2 with speed " << s << " <= 1 violates the impenetrability of single cells";
        v = {false, os.str()};
    } else if (f == Family::S4 && !(s < 0.0)) {
        std::ostringstream os;
        os << "S4 with speed " << s << " >= 0 violates the impenetrability of single cells";
        v = {false, os.str()};
    }
    return v;
}

namespace {

TravellingWaveState closed_form(Family f, double kappa, double alpha, double s, double z) {
    const InvertOptions opt;
    switch (f) {
        case Family::S1:
            if (z < 0) {
                double t = g_inv_logit(g_fn(s / (s - 1.0)) - z * s / kappa, opt);
                return {1.0 / (1.0 + std::exp(t)), -s * alpha * std::exp(t)};
            }
            return {s / (s - 1.0), 1.0 + (alpha - 1.0) * std::exp(z / (s - 1.0))};
        case Family::S2:
            if (z >= 0) {
                double t = h_inv_logit(h_fn(s / (s - 1.0)) - z * s / kappa, opt);
                return {-1.0 / std::expm1(t), s * alpha * std::exp(t)};
            }
            return {s / (s - 1.0), 1.0 + (alpha - 1.0) * std::exp(z / (s - 1.0))};
        case Family::S3:
            if (z >= 0) {
                double t = g_inv_logit(g_fn((s - 1.0) / s) + (1.0 - s) * z / kappa, opt);
                return {1.0 / (1.0 + std::exp(t)), 1.0 + (1.0 - s) * (1.0 - alpha) * std::exp(t)};
            }
            return {(s - 1.0) / s, alpha * std::exp(z / s)};
        case Family::S4:
            if (z < 0) {
                double t = h_inv_logit(h_fn((s - 1.0) / s) + (1.0 - s) * z / kappa, opt);
                return {-1.0 / std::expm1(t), 1.0 - (1.0 - s) * (1.0 - alpha) * std::exp(t)};
            }
            return {(s - 1.0) / s, alpha * std::exp(z / s)};
    }
    return {1.0, 0.0};
}

void require_physical(Family f, const ModelParams& p) {
    Validity v = validate_physical(f, p);
    if (!v.physical) throw PhysicalityError(v.reason);
}

}  // namespace

TravellingWaveState profile(Family f, const ModelParams& p, double z) {
    p.check();
    require_physical(f, p);
    return closed_form(f, p.kappa, p.alpha, wave_speed(f, p), z);
}

WaveSolution make_wave(Family f, const ModelParams& p) {
    p.check();
    require_physical(f, p);
    WaveSolution w;
    w.family = f;
    w.params = p;
    const double s = wave_speed(f, p);
    w.speed = s;
    w.flux = (f == Family::S1 || f == Family::S2) ? -s : 1.0 - s;
    const double kappa = p.kappa, alpha = p.alpha;
    w.r_at = [=](double z) { return closed_form(f, kappa, alpha, s, z).R; };
    w.a_at = [=](double z) { return closed_form(f, kappa, alpha, s, z).A; };
    switch (f) {
        case Family::S1:
            w.m_side[0] = 0; w.m_side[1] = 1;
            w.r_far[0] = 1; w.r_far[1] = s / (s - 1);
            w.a_far[0] = 0; w.a_far[1] = 1;
            break;
        case Family::S2:
            w.m_side[0] = 1; w.m_side[1] = 0;
            w.r_far[0] = s / (s - 1); w.r_far[1] = 1;
            w.a_far[0] = 1; w.a_far[1] = 0;
            break;
        case Family::S3:
            w.m_side[0] = 0; w.m_side[1] = 1;
            w.r_far[0] = (s - 1) / s; w.r_far[1] = 1;
            w.a_far[0] = 0; w.a_far[1] = 1;
            break;
        case Family::S4:
            w.m_side[0] = 1; w.m_side[1] = 0;
            w.r_far[0] = 1; w.r_far[1] = (s - 1) / s;
            w.a_far[0] = 1; w.a_far[1] = 0;
            break;
    }
    return w;
}

TravellingWaveState WaveSolution::derivative(double z) const {
    TravellingWaveState st{R(z), A(z)};
    return travelling_wave_rhs_flux(st, motility_at(z), params.kappa, speed, flux);
}

double velocity_profile(const WaveSolution& w, double z) {
    double r = w.R(z);
    if (!(r > 0)) throw DomainError("velocity_profile: density must be positive");
    return w.speed + w.flux / r;
}

TravellingWaveState travelling_wave_rhs(const TravellingWaveState& st, const ModelParams& p, double s) {
    if (s == 0.0) throw DomainError("travelling_wave_rhs: speed 0 makes the system singular");
    return travelling_wave_rhs_flux(st, motility(st.A, p), p.kappa, s, -s);
}

TravellingWaveState travelling_wave_rhs_flux(const TravellingWaveState& st, double m, double kappa,
                                             double s, double J) {
    if (J == 0.0) throw DomainError("travelling_wave_rhs: zero mass flux makes the system singular");
    if (!(st.R > 0)) throw DomainError("travelling_wave_rhs: density must be positive");
    const double R = st.R;
    return {R * R * ((m - s) * R - J) / kappa, (s * R + J - st.A * R) / J};
}

namespace {

// Tabulated zbar(z) = int_0^z (1 - 2R) on a geometric grid; monotone decreasing
// because R > 1/2 everywhere.
struct T1Table {
    WaveSolution src;
    std::vector<double> z;
    std::vector<double> zb;
    double slope_far[2];
};

double t1_partial(const T1Table& tb, std::size_t k, double z) {
    auto f = [&](double u) { return 1.0 - 2.0 * tb.src.R(u); };
    return tb.zb[k] + boost::math::quadrature::gauss<double, 10>::integrate(f, tb.z[k], z);
}

double t1_preimage(const T1Table& tb, double zbar) {
    const std::size_t n = tb.z.size();
    if (zbar >= tb.zb.front()) return tb.z.front() + (zbar - tb.zb.front()) / tb.slope_far[0];
    if (zbar <= tb.zb.back()) return tb.z.back() + (zbar - tb.zb.back()) / tb.slope_far[1];
    // zb is decreasing: find k with zb[k] >= zbar > zb[k+1]
    auto it = std::upper_bound(tb.zb.begin(), tb.zb.end(), zbar, std::greater<double>());
    std::size_t k = static_cast<std::size_t>(it - tb.zb.begin()) - 1;
    k = std::min(k, n - 2);
    const double a = tb.z[k], b = tb.z[k + 1];
    // secant start inside the cell, then Newton with exact derivative 1 - 2R
    double z = a + (b - a) * (zbar - tb.zb[k]) / (tb.zb[k + 1] - tb.zb[k]);
    for (int it2 = 0; it2 < 20; ++it2) {
        double F = t1_partial(tb, k, z) - zbar;
        double dz = -F / (1.0 - 2.0 * tb.src.R(z));
        double zn = std::clamp(z + dz, a, b);
        if (std::abs(zn - z) <= 1e-15 * (1.0 + std::abs(z))) { z = zn; break; }
        z = zn;
    }
    return z;
}

}  // namespace

WaveSolution apply_T1(const WaveSolution& w, const T1Options& opt) {
    if (std::abs(w.flux + w.speed) > 1e-12 * (1.0 + std::abs(w.speed)))
        throw DomainError("apply_T1: defined for waves with mass flux -s (S1/S2 type) only");
    auto tb = std::make_shared<T1Table>();
    tb->src = w;
    std::vector<double> pos{0.0};
    double h = opt.h_min;
    while (pos.back() < opt.z_max) {
        pos.push_back(std::min(opt.z_max, pos.back() + h));
        h *= opt.growth;
    }
    for (auto it = pos.rbegin(); it != pos.rend(); ++it)
        if (*it != 0.0) tb->z.push_back(-*it);
    for (double v : pos) tb->z.push_back(v);

    auto check_r = [&](double u) {
        double r = w.R(u);
        if (!(r > 0.5)) {
            std::ostringstream os;
            os << "apply_T1: coordinate map not monotone (R=" << r << " <= 1/2 at z=" << u << ")";
            throw DomainError(os.str());
        }
    };
    auto f = [&](double u) { return 1.0 - 2.0 * w.R(u); };
    const std::size_t n = tb->z.size();
    const std::size_t i0 = pos.size() - 1;  // index of z = 0
    tb->zb.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) check_r(tb->z[k]);
    for (std::size_t k = 0; k + 1 < n; ++k) check_r(0.5 * (tb->z[k] + tb->z[k + 1]));
    for (std::size_t k = i0; k + 1 < n; ++k)
        tb->zb[k + 1] = tb->zb[k] + boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                                        f, tb->z[k], tb->z[k + 1], 8, opt.quad_tol);
    for (std::size_t k = i0; k > 0; --k)
        tb->zb[k - 1] = tb->zb[k] - boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                                        f, tb->z[k - 1], tb->z[k], 8, opt.quad_tol);
    tb->slope_far[0] = 1.0 - 2.0 * w.r_far[0];
    tb->slope_far[1] = 1.0 - 2.0 * w.r_far[1];

    WaveSolution out;
    out.params = w.params;
    out.speed = -w.speed;
    out.flux = -out.speed;
    switch (w.family) {
        case Family::S1: out.family = Family::S2; break;
        case Family::S2: out.family = Family::S1; break;
        default: out.family = w.family; break;
    }
    out.r_at = [tb](double zbar) {
        double r = tb->src.R(t1_preimage(*tb, zbar));
        return r / (2.0 * r - 1.0);
    };
    out.a_at = [tb](double zbar) { return tb->src.A(t1_preimage(*tb, zbar)); };
    // zbar decreases with z, so the two sides swap
    for (int i = 0; i < 2; ++i) {
        out.m_side[i] = w.m_side[1 - i];
        out.r_far[i] = w.r_far[1 - i] / (2.0 * w.r_far[1 - i] - 1.0);
        out.a_far[i] = w.a_far[1 - i];
    }
    return out;
}

WaveSolution apply_T2_tilde(const WaveSolution& w) {
    WaveSolution out;
    out.params = w.params;
    out.params.alpha = 1.0 - w.params.alpha;
    out.speed = 1.0 - w.speed;
    out.flux = -w.flux;
    switch (w.family) {
        case Family::S1: out.family = Family::S3; break;
        case Family::S3: out.family = Family::S1; break;
        case Family::S2: out.family = Family::S4; break;
        case Family::S4: out.family = Family::S2; break;
    }
    auto src = std::make_shared<WaveSolution>(w);
    out.r_at = [src](double z) { return src->R(-z); };
    out.a_at = [src](double z) { return 1.0 - src->A(-z); };
    // reflection swaps sides; M(1 - A) with threshold 1 - alpha flips the step
    for (int i = 0; i < 2; ++i) {
        out.m_side[i] = 1.0 - w.m_side[1 - i];
        out.r_far[i] = w.r_far[1 - i];
        out.a_far[i] = 1.0 - w.a_far[1 - i];
    }
    return out;
}

std::vector<ProfileSample> sample_profile(const WaveSolution& w, double z0, double z1, double dz) {
    if (!(dz > 0) || !(z1 >= z0)) throw DomainError("sample_profile: need z0 <= z1 and dz > 0");
    std::vector<ProfileSample> out;
    const long n = static_cast<long>(std::floor((z1 - z0) / dz + 1e-9));
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) {
        double z = z0 + static_cast<double>(i) * dz;
        double r = w.R(z);
        out.push_back({z, r, w.A(z), w.speed + w.flux / r});
    }
    return out;
}

}  // namespace polarwave
