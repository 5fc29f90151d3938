#include "polarwave/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polarwave {

ParticleDerivative particle_rhs(const ParticleState& st, const ModelParams& p, const ParticleOptions& opt) {
    const std::size_t n = st.x.size();
    if (n < 2) throw DomainError("particle_rhs: need at least 2 cells");
    if (st.a.size() != n) throw DomainError("particle_rhs: x and a differ in length");
    const double h = opt.spacing;
    const double k = p.kappa / (h * h);
    ParticleDerivative d;
    d.dx.resize(n);
    d.da.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double left = i > 0 ? st.x[i - 1] : st.x[0] - h;
        double right = i + 1 < n ? st.x[i + 1] : st.x[n - 1] + h;
        double v = motility(st.a[i], p) + k * (right - 2.0 * st.x[i] + left);
        if (opt.ends == EndCondition::Clamped && (i == 0 || i + 1 == n)) v = 0.0;
        d.dx[i] = v;
        d.da[i] = -st.a[i] + v;
    }
    return d;
}

double default_particle_dt(const ModelParams& p, double spacing) {
    // RK4 needs dt * 4 kappa/h^2 inside its stability interval
    double dt = 1e-3 * std::min(1.0, 1.0 / p.kappa);
    return std::min(dt, 0.5 * spacing * spacing / p.kappa);
}

namespace {

bool ordered(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) return false;
    return true;
}

void axpy(const ParticleState& s, const ParticleDerivative& d, double c, ParticleState& out) {
    const std::size_t n = s.x.size();
    out.x.resize(n);
    out.a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = s.x[i] + c * d.dx[i];
        out.a[i] = s.a[i] + c * d.da[i];
    }
}

}  // namespace

ParticleRun simulate_particles(const ParticleState& initial, const ModelParams& p, double t_end, double dt,
                               const ParticleOptions& opt) {
    p.check();
    if (!(dt > 0)) throw DomainError("simulate_particles: dt must be positive");
    ParticleRun run;
    ParticleState st = initial;
    run.snapshots.push_back(st);
    if (!ordered(st.x)) {
        run.ordering_violated = true;
        run.first_violation_t = st.t;
    }
    const long steps = static_cast<long>(std::ceil((t_end - initial.t) / dt - 1e-9));
    const double h = steps > 0 ? (t_end - initial.t) / static_cast<double>(steps) : 0.0;
    const long every = std::max(1L, static_cast<long>(std::llround(opt.snapshot_every / std::max(h, 1e-300))));
    const std::size_t n = st.x.size();
    ParticleState tmp;
    for (long k = 1; k <= steps; ++k) {
        ParticleDerivative k1 = particle_rhs(st, p, opt);
        axpy(st, k1, 0.5 * h, tmp);
        ParticleDerivative k2 = particle_rhs(tmp, p, opt);
        axpy(st, k2, 0.5 * h, tmp);
        ParticleDerivative k3 = particle_rhs(tmp, p, opt);
        axpy(st, k3, h, tmp);
        ParticleDerivative k4 = particle_rhs(tmp, p, opt);
        for (std::size_t i = 0; i < n; ++i) {
            st.x[i] += h / 6.0 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
            st.a[i] += h / 6.0 * (k1.da[i] + 2.0 * k2.da[i] + 2.0 * k3.da[i] + k4.da[i]);
        }
        st.t = initial.t + static_cast<double>(k) * h;
        if (!run.ordering_violated && !ordered(st.x)) {
            run.ordering_violated = true;
            run.first_violation_t = st.t;
        }
        if (k % every == 0 || k == steps) run.snapshots.push_back(st);
    }
    return run;
}

ParticleState departing_chain(int n, double h, double x0, double polarised_from) {
    ParticleState st;
    for (int i = 0; i < n; ++i) {
        double x = x0 + i * h;
        st.x.push_back(x);
        st.a.push_back(x >= polarised_from ? 1.0 : 0.0);
    }
    return st;
}

double particle_front(const ParticleState& st, double alpha) {
    for (std::size_t i = 0; i + 1 < st.a.size(); ++i) {
        double d0 = st.a[i] - alpha, d1 = st.a[i + 1] - alpha;
        if ((d0 <= 0 && d1 > 0) || (d0 > 0 && d1 <= 0))
            return st.x[i] + (st.x[i + 1] - st.x[i]) * (alpha - st.a[i]) / (st.a[i + 1] - st.a[i]);
    }
    throw NumericalError("no front: polarity does not cross alpha");
}

double particle_front_speed(const std::vector<ParticleState>& snaps, double alpha) {
    if (snaps.size() < 3) throw NumericalError("need at least three snapshots");
    const double t_mid = 0.5 * (snaps.front().t + snaps.back().t);
    std::vector<double> ts, xs;
    for (const auto& s : snaps) {
        if (s.t < t_mid) continue;
        ts.push_back(s.t);
        xs.push_back(particle_front(s, alpha));
    }
    const double m = static_cast<double>(ts.size());
    double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / m;
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        num += (ts[i] - mt) * (xs[i] - mx);
        den += (ts[i] - mt) * (ts[i] - mt);
    }
    return num / den;
}

}  // namespace polarwave
