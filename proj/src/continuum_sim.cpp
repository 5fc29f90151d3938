#include "polarwave/continuum_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "polarwave/parallel.hpp"

namespace polarwave {

void Grid::check() const {
    if (n < 16) throw DomainError("grid needs at least 16 cells");
    if (!(x_max > x_min)) throw DomainError("grid needs x_max > x_min");
}

double FieldState::mass() const {
    return std::accumulate(rho.begin(), rho.end(), 0.0) * grid.dx();
}

void SimConfig::check() const {
    params.check();
    grid.check();
    if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("cfl must lie in (0,1]");
    if (!(t_end >= 0.0)) throw DomainError("t_end must be nonnegative");
    if (!(snapshot_every > 0.0)) throw DomainError("snapshot_every must be positive");
}

double default_m_eps(const ModelParams& p, double dx) {
    const double s1 = wave_speed(Family::S1, p);
    return 2.0 * dx * (1.0 - p.alpha) / (1.0 - s1);
}

InitialCondition s1_step(const ModelParams& p, double position) {
    const double s = wave_speed(Family::S1, p);
    InitialCondition ic;
    ic.kind = InitialCondition::Kind::Step;
    ic.position = position;
    ic.rho_left = 1.0;
    ic.a_left = 0.0;
    ic.rho_right = s / (s - 1.0);
    ic.a_right = 1.0;
    return ic;
}

FieldState initial_state(const SimConfig& cfg) {
    cfg.check();
    FieldState st;
    st.grid = cfg.grid;
    const int n = cfg.grid.n;
    st.rho.resize(n);
    st.a.resize(n);
    if (cfg.ic.kind == InitialCondition::Kind::ExactWave) {
        ModelParams exact = cfg.params;
        exact.m_eps = 0.0;
        WaveSolution w = make_wave(cfg.ic.family, exact);
        for (int i = 0; i < n; ++i) {
            double z = cfg.grid.x(i) - cfg.ic.position;
            st.rho[i] = w.R(z);
            st.a[i] = w.A(z);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            bool left = cfg.grid.x(i) < cfg.ic.position;
            st.rho[i] = left ? cfg.ic.rho_left : cfg.ic.rho_right;
            st.a[i] = left ? cfg.ic.a_left : cfg.ic.a_right;
        }
    }
    return st;
}

BoundaryData boundary_for(const SimConfig& cfg) {
    BoundaryData bc;
    bc.kind = cfg.bc;
    if (cfg.ic.kind == InitialCondition::Kind::ExactWave) {
        ModelParams exact = cfg.params;
        exact.m_eps = 0.0;
        WaveSolution w = make_wave(cfg.ic.family, exact);
        bc.rho_left = w.r_far[0];
        bc.a_left = w.a_far[0];
        bc.rho_right = w.r_far[1];
        bc.a_right = w.a_far[1];
    } else {
        bc.rho_left = cfg.ic.rho_left;
        bc.a_left = cfg.ic.a_left;
        bc.rho_right = cfg.ic.rho_right;
        bc.a_right = cfg.ic.a_right;
    }
    return bc;
}

std::vector<double> compute_velocity(const FieldState& st, const ModelParams& p) {
    const int n = static_cast<int>(st.rho.size());
    const double dx = st.grid.dx();
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
        if (!(st.rho[i] > 0)) throw DomainError("compute_velocity: density must be positive");
        double drho;
        if (i == 0) drho = (st.rho[1] - st.rho[0]) / dx;
        else if (i == n - 1) drho = (st.rho[n - 1] - st.rho[n - 2]) / dx;
        else drho = (st.rho[i + 1] - st.rho[i - 1]) / (2.0 * dx);
        double r = st.rho[i];
        v[i] = motility(st.a[i], p) - p.kappa * drho / (r * r * r);
    }
    return v;
}

double stable_dt(const FieldState& st, const ModelParams& p, double cfl) {
    auto v = compute_velocity(st, p);
    double vmax = 1e-12;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    double rmin = *std::min_element(st.rho.begin(), st.rho.end());
    const double dx = st.grid.dx();
    return cfl * std::min(dx / vmax, dx * dx * rmin * rmin / (2.0 * p.kappa));
}

double stable_dt_semi_implicit(const FieldState& st, const ModelParams& p, double cfl) {
    auto v = compute_velocity(st, p);
    double vmax = 1e-12;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    return cfl * st.grid.dx() / vmax;
}

namespace {

// Thomas algorithm for sub/diag/sup with sub[0] and sup[n-1] unused.
void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

FieldState lax_friedrichs_step(const FieldState& st, const ModelParams& p, double dt, const BoundaryData& bc,
                               Stepping stepping) {
    const int n = static_cast<int>(st.rho.size());
    const double dx = st.grid.dx();
    const double k = p.kappa;
    const bool dirichlet = (bc.kind == Boundary::DirichletAsymptotic);

    // ghost-extended arrays, index i+1 holds cell i
    std::vector<double> rg(n + 2), ag(n + 2), mg(n + 2);
    for (int i = 0; i < n; ++i) {
        rg[i + 1] = st.rho[i];
        ag[i + 1] = st.a[i];
    }
    rg[0] = dirichlet ? bc.rho_left : st.rho[0];
    ag[0] = dirichlet ? bc.a_left : st.a[0];
    rg[n + 1] = dirichlet ? bc.rho_right : st.rho[n - 1];
    ag[n + 1] = dirichlet ? bc.a_right : st.a[n - 1];
    for (int i = 0; i < n + 2; ++i) mg[i] = motility(ag[i], p);

    std::vector<double> v(n);
    for (int i = 1; i <= n; ++i) {
        double r = rg[i];
        v[i - 1] = mg[i] - k * (rg[i + 1] - rg[i - 1]) / (2.0 * dx * r * r * r);
    }

    // face fluxes F_{i+1/2}, faces 0..n; local Lax-Friedrichs on rho M(a), central on kappa (1/rho)_x
    std::vector<double> F(n + 1);
    for (int f = 0; f <= n; ++f) {
        double fl = rg[f] * mg[f], fr = rg[f + 1] * mg[f + 1];
        double c = std::max(mg[f], mg[f + 1]);
        F[f] = 0.5 * (fl + fr) - 0.5 * c * (rg[f + 1] - rg[f]) + k * (1.0 / rg[f + 1] - 1.0 / rg[f]) / dx;
    }

    FieldState out;
    out.grid = st.grid;
    out.t = st.t + dt;
    out.rho.resize(n);
    out.a.resize(n);

    std::vector<double> delta(n);
    for (int i = 0; i < n; ++i) delta[i] = -dt / dx * (F[i + 1] - F[i]);
    double boundary_flux = F[n] - F[0];

    if (stepping == Stepping::SemiImplicit) {
        std::vector<double> w(n), sub(n), diag(n), sup(n);
        for (int i = 0; i < n; ++i) w[i] = k * dt / (dx * dx * st.rho[i] * st.rho[i]);
        for (int i = 0; i < n; ++i) {
            diag[i] = 1.0 + 2.0 * w[i];
            sub[i] = i > 0 ? -w[i - 1] : 0.0;
            sup[i] = i < n - 1 ? -w[i + 1] : 0.0;
        }
        if (!dirichlet) {  // ghost increment mirrors the edge cell
            diag[0] -= w[0];
            diag[n - 1] -= w[n - 1];
        }
        std::vector<double> rhs = delta;
        solve_tridiagonal(sub, diag, sup, rhs);
        delta = rhs;
        // implicit face flux G = -(kappa/dx) (d_{i+1}/rho_{i+1}^2 - d_i/rho_i^2), ghost increment 0 or mirrored
        auto q = [&](int i) { return delta[i] / (st.rho[i] * st.rho[i]); };
        double ql = dirichlet ? 0.0 : q(0), qr = dirichlet ? 0.0 : q(n - 1);
        double g_left = -(k / dx) * (q(0) - ql);
        double g_right = -(k / dx) * (qr - q(n - 1));
        boundary_flux += g_right - g_left;
    }

    for (int i = 0; i < n; ++i) {
        out.rho[i] = st.rho[i] + delta[i];
        if (!(out.rho[i] > 0) || !std::isfinite(out.rho[i])) {
            std::ostringstream os;
            os << "unstable step: rho=" << out.rho[i] << " at x=" << st.grid.x(i) << ", t=" << out.t
               << ", dt=" << dt;
            throw NumericalError(os.str());
        }
    }
    out.outflow = st.outflow + dt * boundary_flux;

    for (int i = 0; i < n; ++i) {
        double vl = v[std::max(i - 1, 0)], vr = v[std::min(i + 1, n - 1)];
        double c = std::max({std::abs(vl), std::abs(v[i]), std::abs(vr)});
        double al = ag[i], ac = ag[i + 1], ar = ag[i + 2];
        out.a[i] = ac - dt * v[i] * (ar - al) / (2.0 * dx) + dt * c * (ar - 2.0 * ac + al) / (2.0 * dx) +
                   dt * (-ac + v[i]);
        if (!std::isfinite(out.a[i])) throw NumericalError("unstable step: non-finite polarity");
    }
    return out;
}

SimResult simulate(const SimConfig& cfg) {
    SimResult res;
    FieldState st = initial_state(cfg);
    const BoundaryData bc = boundary_for(cfg);
    res.snapshots.push_back(st);
    double next_snap = cfg.snapshot_every;
    const double eps = 1e-12 * std::max(1.0, cfg.t_end);
    while (st.t < cfg.t_end - eps) {
        double dt = cfg.stepping == Stepping::Explicit ? stable_dt(st, cfg.params, cfg.cfl)
                                                       : stable_dt_semi_implicit(st, cfg.params, cfg.cfl);
        double target = std::min(next_snap, cfg.t_end);
        bool hit = false;
        if (st.t + dt >= target - eps) {
            dt = target - st.t;
            hit = true;
        }
        st = lax_friedrichs_step(st, cfg.params, dt, bc, cfg.stepping);
        ++res.steps;
        if (hit) {
            st.t = target;
            res.snapshots.push_back(st);
            if (target >= next_snap - eps) next_snap += cfg.snapshot_every;
        }
    }
    if (res.snapshots.back().t < st.t) res.snapshots.push_back(st);
    return res;
}

double front_position(const FieldState& st, double alpha, double band) {
    const int n = static_cast<int>(st.a.size());
    const double dx = st.grid.dx();
    int lo = 0, hi = n - 1;
    while (lo < n && st.grid.x(lo) < st.grid.x_min + band) ++lo;
    while (hi >= 0 && st.grid.x(hi) > st.grid.x_max - band) --hi;
    int count = 0;
    double pos = 0.0;
    for (int i = lo; i < hi; ++i) {
        double d0 = st.a[i] - alpha, d1 = st.a[i + 1] - alpha;
        if ((d0 <= 0 && d1 > 0) || (d0 > 0 && d1 <= 0)) {
            ++count;
            pos = st.grid.x(i) + dx * (alpha - st.a[i]) / (st.a[i + 1] - st.a[i]);
        }
    }
    if (count == 0) throw NumericalError("no front: polarity does not cross alpha");
    if (count > 1) throw NumericalError("several fronts: polarity crosses alpha more than once");
    return pos;
}

namespace {

double slope(const std::vector<double>& t, const std::vector<double>& x) {
    const double n = static_cast<double>(t.size());
    double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - mt) * (x[i] - mx);
        den += (t[i] - mt) * (t[i] - mt);
    }
    return num / den;
}

}  // namespace

double measure_wave_speed(const std::vector<FieldState>& snaps, double alpha, const FrontOptions& opt) {
    if (snaps.empty()) throw NumericalError("no snapshots");
    const double t0 = snaps.front().t, t1 = snaps.back().t;
    const double start = t0 + opt.window_start * (t1 - t0);
    std::vector<double> ts, xs;
    for (const auto& s : snaps) {
        if (s.t < start) continue;
        ts.push_back(s.t);
        xs.push_back(front_position(s, alpha, opt.boundary_band));
    }
    if (ts.size() < 2) throw NumericalError("need at least two snapshots in the fitting window");
    return slope(ts, xs);
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Polarisation: return "Polarisation";
        case Outcome::Depolarisation: return "Depolarisation";
        case Outcome::Undecided: return "Undecided";
    }
    return "?";
}

Classification classify_outcome(const std::vector<FieldState>& snaps, const ModelParams& p,
                                const ClassifyOptions& opt) {
    Classification c;
    if (snaps.empty()) throw NumericalError("no snapshots");
    const double t0 = snaps.front().t, t1 = snaps.back().t;
    const double start = t1 - opt.window_fraction * (t1 - t0);
    if (t1 - start < opt.min_window) {
        c.detail = "late-time window too short";
        return c;
    }
    const FieldState& last = snaps.back();
    bool all_below = true, all_above = true;
    for (int i = 0; i < last.grid.n; ++i) {
        double x = last.grid.x(i);
        if (x < last.grid.x_min + opt.boundary_band || x > last.grid.x_max - opt.boundary_band) continue;
        if (last.a[i] > p.alpha) all_below = false;
        else all_above = false;
    }
    if (all_below) {
        c.outcome = Outcome::Depolarisation;
        c.detail = "polarity below threshold everywhere";
        return c;
    }
    if (all_above) {
        c.outcome = Outcome::Polarisation;
        c.detail = "polarity above threshold everywhere";
        return c;
    }
    // leftmost crossing, tracked through the window
    std::vector<double> ts, xs;
    for (const auto& s : snaps) {
        if (s.t < start) continue;
        const double dx = s.grid.dx();
        for (int i = 0; i + 1 < s.grid.n; ++i) {
            double x = s.grid.x(i);
            if (x < s.grid.x_min + opt.boundary_band || s.grid.x(i + 1) > s.grid.x_max - opt.boundary_band)
                continue;
            double d0 = s.a[i] - p.alpha, d1 = s.a[i + 1] - p.alpha;
            if ((d0 <= 0 && d1 > 0) || (d0 > 0 && d1 <= 0)) {
                ts.push_back(s.t);
                xs.push_back(x + dx * (p.alpha - s.a[i]) / (s.a[i + 1] - s.a[i]));
                break;
            }
        }
    }
    if (ts.size() < 2) {
        c.detail = "front not tracked through the late-time window";
        return c;
    }
    c.speed = slope(ts, xs);
    std::ostringstream os;
    os << "late-time front speed " << c.speed;
    c.detail = os.str();
    if (c.speed < -opt.speed_threshold) c.outcome = Outcome::Polarisation;
    else if (c.speed > opt.speed_threshold) c.outcome = Outcome::Depolarisation;
    return c;
}

Classification run_step_experiment(double kappa, double alpha, int n, const ThresholdOptions& opt) {
    SimConfig cfg;
    cfg.params = {kappa, alpha, 0.0};
    cfg.grid = {opt.x_min, opt.x_max, n};
    cfg.params.m_eps = default_m_eps(cfg.params, cfg.grid.dx());
    cfg.cfl = opt.cfl;
    cfg.ic = s1_step(cfg.params);
    cfg.bc = Boundary::DirichletAsymptotic;
    cfg.stepping = opt.stepping;
    double t_end = opt.t_end;
    Classification c;
    for (int ext = 0; ext <= opt.max_extensions; ++ext) {
        cfg.t_end = t_end;
        cfg.snapshot_every = t_end / 400.0;
        SimResult r = simulate(cfg);
        c = classify_outcome(r.snapshots, cfg.params);
        if (c.outcome != Outcome::Undecided) return c;
        t_end *= 1.5;
    }
    return c;
}

std::vector<ThresholdEstimate> find_threshold_alpha(double kappa, const std::vector<int>& ladder,
                                                    const ThresholdOptions& opt) {
    if (ladder.size() < 3) throw DomainError("threshold ladder needs at least 3 grid resolutions");
    std::vector<ThresholdEstimate> out(ladder.size());
    parallel_for(ladder.size(), [&](std::size_t j) {
        const int n = ladder[j];
        Classification lo_c = run_step_experiment(kappa, opt.alpha_lo, n, opt);
        Classification hi_c = run_step_experiment(kappa, opt.alpha_hi, n, opt);
        if (lo_c.outcome != Outcome::Polarisation || hi_c.outcome != Outcome::Depolarisation) {
            std::ostringstream os;
            os << "threshold bracket invalid on n=" << n << ": alpha=" << opt.alpha_lo << " -> "
               << to_string(lo_c.outcome) << " (" << lo_c.detail << "), alpha=" << opt.alpha_hi << " -> "
               << to_string(hi_c.outcome) << " (" << hi_c.detail << ")";
            throw NumericalError(os.str());
        }
        double lo = opt.alpha_lo, hi = opt.alpha_hi;
        int runs = 2;
        while (hi - lo > opt.tol) {
            double mid = 0.5 * (lo + hi);
            Classification c = run_step_experiment(kappa, mid, n, opt);
            ++runs;
            if (c.outcome == Outcome::Polarisation) lo = mid;
            else if (c.outcome == Outcome::Depolarisation) hi = mid;
            else {
                std::ostringstream os;
                os << "undecided outcome at alpha=" << mid << " on n=" << n << ": " << c.detail;
                throw NumericalError(os.str());
            }
        }
        out[j] = {n, 0.5 * (lo + hi), lo, hi, runs};
    });
    return out;
}

}  // namespace polarwave
