#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "polarwave/continuum_sim.hpp"
#include "polarwave/evans.hpp"
#include "polarwave/model_core.hpp"
#include "polarwave/parallel.hpp"
#include "polarwave/particle_sim.hpp"
#include "polarwave/spectra.hpp"

using namespace polarwave;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// Malformed flag values that CLI11 cannot see by itself; reported as usage errors.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

struct Range {
    double from, to, step;
};

Range parse_range(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw UsageError("");
        } catch (const std::exception&) {
            throw UsageError("range must look like from:to:step, got '" + text + "'");
        }
    }
    if (v.size() != 3) throw UsageError("range must look like from:to:step, got '" + text + "'");
    return {v[0], v[1], v[2]};
}

Complex parse_complex(const std::string& text) {
    std::stringstream ss(text);
    std::string re, im = "0";
    std::getline(ss, re, ',');
    std::getline(ss, im);
    try {
        return {std::stod(re), std::stod(im)};
    } catch (const std::exception&) {
        throw UsageError("complex value must look like re,im, got '" + text + "'");
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open " + path.string() + " for writing");
    f << std::setprecision(12);
    return f;
}

// Every option of a subcommand (given or defaulted), as strings.
json option_echo(const CLI::App* app) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            auto r = opt->results();
            j[name] = r.size() == 1 ? json(r[0]) : json(r);
        } else {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

struct Manifest {
    std::string command;
    json params = json::object();
    std::vector<std::string> outputs;
    json summary = json::object();

    void write(const fs::path& path) const {
        json j;
        j["tool"] = "polarwave";
        j["version"] = kVersion;
        j["command"] = command;
        j["params"] = params;
        j["outputs"] = outputs;
        j["summary"] = summary;
        std::ofstream f = open_out(path);
        f << j.dump(2) << "\n";
    }
};

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void write_profile_csv(const fs::path& path, const std::vector<ProfileSample>& rows) {
    std::ofstream f = open_out(path);
    f << "z,R,A,V\n";
    for (const auto& r : rows) f << r.z << ',' << r.R << ',' << r.A << ',' << r.V << '\n';
}

void write_snapshots_csv(const fs::path& path, const std::vector<FieldState>& snaps, const ModelParams& p) {
    std::ofstream f = open_out(path);
    f << "t,x,rho,a,v\n";
    for (const auto& s : snaps) {
        std::vector<double> v = compute_velocity(s, p);
        for (int i = 0; i < s.grid.n; ++i)
            f << s.t << ',' << s.grid.x(i) << ',' << s.rho[i] << ',' << s.a[i] << ',' << v[i] << '\n';
    }
}

void write_curves_csv(std::ofstream& f, const SpectrumCurve& c) {
    for (Complex z : c.points) f << c.label << ',' << z.real() << ',' << z.imag() << '\n';
}

void write_evans_csv(const fs::path& path, const std::vector<EvansSample>& samples) {
    std::ofstream f = open_out(path);
    f << "re_lambda,im_lambda,re_D,im_D,logscale_D\n";
    for (const auto& e : samples)
        f << e.lambda.real() << ',' << e.lambda.imag() << ',' << e.d.mantissa.real() << ',' << e.d.mantissa.imag()
          << ',' << e.d.log_scale << '\n';
}

double pde_speed_or_nan(const std::vector<FieldState>& snaps, double alpha) {
    try {
        FrontOptions fo;
        fo.boundary_band = 1.0;
        return measure_wave_speed(snaps, alpha, fo);
    } catch (const NumericalError&) {
        return NAN;
    }
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---- reproduction recipes ----

struct RecipeContext {
    fs::path dir;
    Manifest& manifest;

    fs::path file(const std::string& name) {
        manifest.outputs.push_back((dir / name).string());
        return dir / name;
    }
};

void recipe_s1_speeds(RecipeContext& cx) {
    json rows = json::array();
    for (double kappa : {1.0, 5.0})
        for (double alpha : {0.2, 0.5}) {
            SimConfig c;
            c.params = {kappa, alpha, 0.0};
            c.grid = {-40, 40, 2000};
            c.params.m_eps = default_m_eps(c.params, c.grid.dx());
            c.t_end = 10;
            c.snapshot_every = 0.5;
            c.ic.position = -0.5 * wave_speed(Family::S1, c.params) * c.t_end;  // front crosses the centre mid-run
            SimResult r = simulate(c);
            std::ostringstream name;
            name << "s1_kappa" << kappa << "_alpha" << alpha << ".csv";
            write_snapshots_csv(cx.file(name.str()), r.snapshots, c.params);
            double sp = pde_speed_or_nan(r.snapshots, alpha);
            rows.push_back({{"kappa", kappa}, {"alpha", alpha}, {"n", c.grid.n}, {"speed_measured", nan_safe(sp)},
                            {"speed_exact", wave_speed(Family::S1, c.params)}});
            std::cout << "kappa=" << kappa << " alpha=" << alpha << " speed=" << sp
                      << " (exact " << wave_speed(Family::S1, c.params) << ")\n";
        }
    cx.manifest.summary["speeds"] = rows;
}

void recipe_step_outcomes(RecipeContext& cx) {
    json rows = json::array();
    for (double alpha : {0.2, 0.9}) {
        SimConfig c;
        c.params = {1.0, alpha, 0.0};
        c.grid = {-40, 40, 1000};
        c.params.m_eps = default_m_eps(c.params, c.grid.dx());
        c.ic = s1_step(c.params);
        c.t_end = 30;
        c.snapshot_every = 0.5;
        c.stepping = Stepping::SemiImplicit;
        SimResult r = simulate(c);
        std::ostringstream name;
        name << "step_alpha" << alpha << ".csv";
        write_snapshots_csv(cx.file(name.str()), r.snapshots, c.params);
        Classification cl = classify_outcome(r.snapshots, c.params);
        rows.push_back({{"alpha", alpha}, {"outcome", to_string(cl.outcome)}, {"front_speed", cl.speed}});
        std::cout << "alpha=" << alpha << " -> " << to_string(cl.outcome) << '\n';
    }
    cx.manifest.summary["outcomes"] = rows;
}

void recipe_threshold_ladder(RecipeContext& cx) {
    auto est = find_threshold_alpha(1.0, {1000, 2000, 4000});
    std::ofstream f = open_out(cx.file("threshold.csv"));
    f << "n,alpha_bar,alpha_pol,alpha_depol,runs\n";
    json rows = json::array();
    for (const auto& e : est) {
        f << e.n << ',' << e.alpha_bar << ',' << e.alpha_pol << ',' << e.alpha_depol << ',' << e.runs << '\n';
        rows.push_back({{"n", e.n}, {"alpha_bar", e.alpha_bar}});
        std::cout << "n=" << e.n << " alpha_bar=" << e.alpha_bar << '\n';
    }
    cx.manifest.summary["threshold"] = rows;
}

void recipe_essential(RecipeContext& cx) {
    std::ofstream f = open_out(cx.file("borders.csv"));
    f << "label,re,im\n";
    for (const auto& c : fredholm_borders(-2, 1, -3, 3, 601)) write_curves_csv(f, c);
    cx.manifest.summary["s"] = -2;
    cx.manifest.summary["kappa"] = 1;
}

void recipe_absolute(RecipeContext& cx) {
    AbsSpectrum a = absolute_spectrum_closed(-2, 1, -6, 400);
    std::ofstream f = open_out(cx.file("absolute.csv"));
    f << "label,re,im\n";
    write_curves_csv(f, a.segment);
    write_curves_csv(f, a.branch_plus);
    write_curves_csv(f, a.branch_minus);
    auto pts = absolute_spectrum_numeric(-2, 1, {-6, 0.5, -6, 6});
    write_curves_csv(f, {"numeric", pts});
    double rightmost = -INFINITY;
    for (Complex z : pts) rightmost = std::max(rightmost, z.real());
    cx.manifest.summary["segment"] = {a.segment_left, a.segment_right};
    cx.manifest.summary["numeric_points"] = pts.size();
    cx.manifest.summary["numeric_rightmost"] = rightmost;
    auto w = ideal_weights(-2, 1);
    cx.manifest.summary["ideal_weights"] = {w.eta_minus, w.eta_plus};
    std::cout << "segment [" << a.segment_left << ", " << a.segment_right << "], numeric points " << pts.size()
              << ", rightmost " << rightmost << '\n';
}

void recipe_evans(RecipeContext& cx, Family f, double kappa, const std::vector<double>& alphas, bool c1) {
    Contour c = c1 ? Contour::c1(-0.05, 0.1) : Contour::c2(0.1, 5);
    json rows = json::array();
    for (double alpha : alphas) {
        ModelParams p{kappa, alpha, 0};
        Validity v = validate_physical(f, p);
        if (!v.physical) {
            rows.push_back({{"alpha", alpha}, {"skipped", v.reason}});
            std::cout << "alpha=" << alpha << " skipped: " << v.reason << '\n';
            continue;
        }
        EvansFunction ev(f, p);
        WindingResult w = winding_number(c, ev);
        std::ostringstream name;
        name << "evans_" << to_string(f) << "_" << c.name() << "_kappa" << kappa << "_alpha" << alpha << ".csv";
        write_evans_csv(cx.file(name.str()), evans_scan(c, ev, 400));
        rows.push_back({{"alpha", alpha}, {"winding", w.winding}, {"z_start", ev.z_start()}});
        std::cout << "alpha=" << alpha << " winding=" << w.winding << '\n';
    }
    cx.manifest.summary["family"] = to_string(f);
    cx.manifest.summary["kappa"] = kappa;
    cx.manifest.summary["contour"] = c.name();
    cx.manifest.summary["windings"] = rows;
}

const std::map<std::string, std::function<void(RecipeContext&)>>& recipes() {
    static const std::map<std::string, std::function<void(RecipeContext&)>> r = {
        {"s1-speeds", recipe_s1_speeds},
        {"step-outcomes", recipe_step_outcomes},
        {"threshold-ladder", recipe_threshold_ladder},
        {"essential-borders", recipe_essential},
        {"absolute-spectrum", recipe_absolute},
        {"evans-s1-c1", [](RecipeContext& c) { recipe_evans(c, Family::S1, 1, {0.2, 0.4, 0.5, 0.7}, true); }},
        {"evans-s1-c2", [](RecipeContext& c) { recipe_evans(c, Family::S1, 1, {0.2, 0.4, 0.5, 0.7}, false); }},
        {"evans-s1-kappa5-c1", [](RecipeContext& c) { recipe_evans(c, Family::S1, 5, {0.2, 0.4, 0.5, 0.7}, true); }},
        {"evans-s1-kappa5-c2", [](RecipeContext& c) { recipe_evans(c, Family::S1, 5, {0.2, 0.4, 0.5, 0.7}, false); }},
        {"evans-s2-c1", [](RecipeContext& c) { recipe_evans(c, Family::S2, 1, {0.2, 0.4, 0.5, 0.6}, true); }},
        {"evans-s2-c2", [](RecipeContext& c) { recipe_evans(c, Family::S2, 1, {0.2, 0.4, 0.5, 0.6}, false); }},
    };
    return r;
}

std::vector<std::string> recipe_names() {
    std::vector<std::string> n;
    for (const auto& [k, v] : recipes()) n.push_back(k);
    return n;
}

const std::vector<std::string> kFamilies = {"S1", "S2", "S3", "S4"};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Travelling waves of a 1D polarity model: profiles, simulations, spectra, Evans function"};
    app.set_config("--config", "", "key=value file with option values");
    app.require_subcommand(1);
    app.fallthrough();
    std::function<void()> action;
    const CLI::App* active = nullptr;

    // shared model flags
    std::string family = "S1";
    double kappa = 1.0, alpha = 0.5;
    std::string out;
    auto model_flags = [&](CLI::App* sub, bool with_family) {
        if (with_family) sub->add_option("--family", family, "S1, S2, S3 or S4")->check(CLI::IsMember(kFamilies))->capture_default_str();
        sub->add_option("--kappa", kappa, "intercellular interaction strength")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--alpha", alpha, "polarity threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    };

    // profile
    std::string zrange = "-20:20:0.01";
    CLI::App* profile_cmd = app.add_subcommand("profile", "sample a closed-form profile to CSV (z,R,A,V)");
    model_flags(profile_cmd, true);
    profile_cmd->add_option("--z", zrange, "from:to:step")->capture_default_str();
    profile_cmd->add_option("--out", out, "CSV path")->default_str("profile.csv");
    profile_cmd->callback([&] {
        active = profile_cmd;
        action = [&] {
            Range r = parse_range(zrange);
            WaveSolution w = make_wave(family_from_string(family), {kappa, alpha, 0});
            auto rows = sample_profile(w, r.from, r.to, r.step);
            write_profile_csv(out, rows);
            std::cout << family << " speed " << w.speed << ", " << rows.size() << " rows -> " << out << '\n';
            Manifest m{"profile", option_echo(profile_cmd), {out}, {{"speed", w.speed}}};
            m.write(manifest_path(out));
        };
    });

    // transform
    std::string kind = "t1";
    CLI::App* transform_cmd = app.add_subcommand("transform", "apply T1 or the reflection T2 to a wave and sample it");
    model_flags(transform_cmd, true);
    transform_cmd->add_option("--kind", kind, "t1 or t2")->check(CLI::IsMember({"t1", "t2"}))->capture_default_str();
    transform_cmd->add_option("--z", zrange, "from:to:step")->capture_default_str();
    transform_cmd->add_option("--out", out, "CSV path")->default_str("transformed.csv");
    transform_cmd->callback([&] {
        active = transform_cmd;
        action = [&] {
            Range r = parse_range(zrange);
            WaveSolution w = make_wave(family_from_string(family), {kappa, alpha, 0});
            WaveSolution t = kind == "t1" ? apply_T1(w) : apply_T2_tilde(w);
            auto rows = sample_profile(t, r.from, r.to, r.step);
            write_profile_csv(out, rows);
            std::cout << family << " -> " << to_string(t.family) << " speed " << t.speed << " alpha "
                      << t.params.alpha << " -> " << out << '\n';
            Manifest m{"transform", option_echo(transform_cmd), {out},
                       {{"result_family", to_string(t.family)}, {"speed", t.speed}, {"alpha", t.params.alpha}}};
            m.write(manifest_path(out));
        };
    });

    // validate
    CLI::App* validate_cmd = app.add_subcommand("validate", "check whether a wave respects cell impenetrability");
    model_flags(validate_cmd, true);
    validate_cmd->callback([&] {
        active = validate_cmd;
        action = [&] {
            ModelParams p{kappa, alpha, 0};
            Family f = family_from_string(family);
            Validity v = validate_physical(f, p);
            if (!v.physical) throw PhysicalityError(v.reason);
            std::cout << family << " is physical, speed " << wave_speed(f, p) << '\n';
        };
    });

    // simulate-particles
    double m_eps_particles = 1e-3, spacing = 0.25, t_end_p = 10, dt = 0, polarised_fraction = 0.2, every_p = 0.1;
    int n_cells = 400;
    std::string ends = "free";
    bool long_format = false;
    CLI::App* particles_cmd = app.add_subcommand("simulate-particles", "integrate the discrete cell chain");
    model_flags(particles_cmd, false);
    particles_cmd->add_option("--m-eps", m_eps_particles, "motility smoothing width")->capture_default_str();
    particles_cmd->add_option("--n", n_cells, "number of cells")->check(CLI::Range(2, 10000000))->capture_default_str();
    particles_cmd->add_option("--spacing", spacing, "lattice spacing h")->check(CLI::PositiveNumber)->capture_default_str();
    particles_cmd->add_option("--t-end", t_end_p, "final time")->check(CLI::PositiveNumber)->capture_default_str();
    particles_cmd->add_option("--dt", dt, "RK4 step (0 picks a stable default)")->capture_default_str();
    particles_cmd->add_option("--ends", ends, "free or clamped")->check(CLI::IsMember({"free", "clamped"}))->capture_default_str();
    particles_cmd->add_option("--polarised-fraction", polarised_fraction, "right part of the chain starting at a = 1")
        ->check(CLI::Range(0.0, 1.0))->capture_default_str();
    particles_cmd->add_option("--snapshot-every", every_p, "snapshot spacing in time")->capture_default_str();
    particles_cmd->add_flag("--long", long_format, "one row per cell (t,i,x,a) instead of one row per snapshot");
    particles_cmd->add_option("--out", out, "CSV path")->default_str("particles.csv");
    particles_cmd->callback([&] {
        active = particles_cmd;
        action = [&] {
            ModelParams p{kappa, alpha, m_eps_particles};
            p.check();
            ParticleOptions o;
            o.spacing = spacing;
            o.ends = ends == "free" ? EndCondition::Free : EndCondition::Clamped;
            o.snapshot_every = every_p;
            const double length = n_cells * spacing;
            ParticleState st = departing_chain(n_cells, spacing, 0.0, (1.0 - polarised_fraction) * length);
            ParticleRun r = simulate_particles(st, p, t_end_p, dt > 0 ? dt : default_particle_dt(p, spacing), o);
            std::ofstream f = open_out(out);
            if (long_format) {
                f << "t,i,x,a\n";
                for (const auto& s : r.snapshots)
                    for (int i = 0; i < n_cells; ++i) f << s.t << ',' << i << ',' << s.x[i] << ',' << s.a[i] << '\n';
            } else {
                f << "t";
                for (int i = 0; i < n_cells; ++i) f << ",x" << i;
                for (int i = 0; i < n_cells; ++i) f << ",a" << i;
                f << '\n';
                for (const auto& s : r.snapshots) {
                    f << s.t;
                    for (double x : s.x) f << ',' << x;
                    for (double a : s.a) f << ',' << a;
                    f << '\n';
                }
            }
            f.close();
            double speed = NAN;
            try {
                speed = particle_front_speed(r.snapshots, alpha);
            } catch (const NumericalError&) {
            }
            std::cout << "front speed " << speed << (r.ordering_violated ? " (cell order violated)" : "") << " -> "
                      << out << '\n';
            Manifest m{"simulate-particles", option_echo(particles_cmd), {out},
                       {{"front_speed", nan_safe(speed)}, {"ordering_violated", r.ordering_violated},
                        {"first_violation_t", r.first_violation_t}}};
            m.write(manifest_path(out));
        };
    });

    // simulate-pde
    std::string ic = "exact", bc = "dirichlet", stepping = "explicit";
    double m_eps_pde = -1, x_min = -40, x_max = 40, t_end = 10, cfl = 0.9, every = 0.1, position = 0;
    int n_grid = 4000;
    CLI::App* pde_cmd = app.add_subcommand("simulate-pde", "Lax-Friedrichs run of the continuum model");
    model_flags(pde_cmd, true);
    pde_cmd->add_option("--ic", ic, "exact or step")->check(CLI::IsMember({"exact", "step"}))->capture_default_str();
    pde_cmd->add_option("--m-eps", m_eps_pde, "motility smoothing width (negative picks 2 dx A'(0))")->capture_default_str();
    pde_cmd->add_option("--n", n_grid, "cells")->check(CLI::Range(16, 100000000))->capture_default_str();
    pde_cmd->add_option("--x-min", x_min)->capture_default_str();
    pde_cmd->add_option("--x-max", x_max)->capture_default_str();
    pde_cmd->add_option("--t-end", t_end)->check(CLI::PositiveNumber)->capture_default_str();
    pde_cmd->add_option("--cfl", cfl)->capture_default_str();
    pde_cmd->add_option("--bc", bc, "dirichlet or neumann")->check(CLI::IsMember({"dirichlet", "neumann"}))->capture_default_str();
    pde_cmd->add_option("--stepping", stepping, "explicit or semi-implicit")
        ->check(CLI::IsMember({"explicit", "semi-implicit"}))->capture_default_str();
    pde_cmd->add_option("--snapshot-every", every)->capture_default_str();
    pde_cmd->add_option("--position", position, "initial front position")->capture_default_str();
    pde_cmd->add_option("--out", out, "CSV path (t,x,rho,a,v)")->default_str("snapshots.csv");
    pde_cmd->callback([&] {
        active = pde_cmd;
        action = [&] {
            SimConfig c;
            c.params = {kappa, alpha, 0};
            c.grid = {x_min, x_max, n_grid};
            c.grid.check();
            c.params.m_eps = m_eps_pde < 0 ? default_m_eps(c.params, c.grid.dx()) : m_eps_pde;
            c.cfl = cfl;
            c.t_end = t_end;
            c.snapshot_every = every;
            c.bc = bc == "dirichlet" ? Boundary::DirichletAsymptotic : Boundary::Neumann;
            c.stepping = stepping == "explicit" ? Stepping::Explicit : Stepping::SemiImplicit;
            if (ic == "step") {
                if (family != "S1") throw DomainError("step initial data is set up between the S1 far fields");
                c.ic = s1_step(c.params, position);
            } else {
                c.ic.family = family_from_string(family);
                c.ic.position = position;
            }
            SimResult r = simulate(c);
            write_snapshots_csv(out, r.snapshots, c.params);
            double sp = pde_speed_or_nan(r.snapshots, alpha);
            Classification cl = classify_outcome(r.snapshots, c.params);
            std::cout << "steps " << r.steps << ", front speed " << sp << ", outcome " << to_string(cl.outcome)
                      << " -> " << out << '\n';
            Manifest m{"simulate-pde", option_echo(pde_cmd), {out},
                       {{"steps", r.steps}, {"front_speed", nan_safe(sp)}, {"outcome", to_string(cl.outcome)},
                        {"m_eps", c.params.m_eps}}};
            m.write(manifest_path(out));
        };
    });

    // threshold-alpha
    std::vector<int> grids = {1000, 2000, 4000};
    ThresholdOptions topt;
    std::string t_stepping = "semi-implicit";
    CLI::App* thr_cmd = app.add_subcommand("threshold-alpha", "bisect the polarisation threshold on a grid ladder");
    thr_cmd->add_option("--kappa", kappa)->check(CLI::PositiveNumber)->capture_default_str();
    thr_cmd->add_option("--grids", grids, "comma-separated cell counts")->delimiter(',')->capture_default_str();
    thr_cmd->add_option("--alpha-lo", topt.alpha_lo)->capture_default_str();
    thr_cmd->add_option("--alpha-hi", topt.alpha_hi)->capture_default_str();
    thr_cmd->add_option("--tol", topt.tol)->capture_default_str();
    thr_cmd->add_option("--t-end", topt.t_end)->capture_default_str();
    thr_cmd->add_option("--stepping", t_stepping)->check(CLI::IsMember({"explicit", "semi-implicit"}))->capture_default_str();
    thr_cmd->add_option("--out", out, "CSV path")->default_str("threshold.csv");
    thr_cmd->callback([&] {
        active = thr_cmd;
        action = [&] {
            topt.stepping = t_stepping == "explicit" ? Stepping::Explicit : Stepping::SemiImplicit;
            auto est = find_threshold_alpha(kappa, grids, topt);
            std::ofstream f = open_out(out);
            f << "n,alpha_bar,alpha_pol,alpha_depol,runs\n";
            json rows = json::array();
            for (const auto& e : est) {
                f << e.n << ',' << e.alpha_bar << ',' << e.alpha_pol << ',' << e.alpha_depol << ',' << e.runs << '\n';
                std::cout << "n=" << e.n << " alpha_bar=" << e.alpha_bar << '\n';
                rows.push_back({{"n", e.n}, {"alpha_bar", e.alpha_bar}});
            }
            f.close();
            Manifest m{"threshold-alpha", option_echo(thr_cmd), {out}, {{"estimates", rows}}};
            m.write(manifest_path(out));
        };
    });

    // spectrum
    double s = -2, mu_max = 5, lambda1_min = -6, eta_minus = NAN, eta_plus = NAN;
    int samples = 401;
    bool numeric = false;
    SearchBox box{-6, 0.5, -6, 6};
    CLI::App* spec_cmd = app.add_subcommand("spectrum", "essential and absolute spectrum, exponential weights");
    spec_cmd->require_subcommand(1);
    auto spec_flags = [&](CLI::App* sub) {
        sub->add_option("--s", s, "wave speed")->capture_default_str();
        sub->add_option("--kappa", kappa)->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--mu-max", mu_max, "spatial frequency range [-mu_max, mu_max]")->capture_default_str();
        sub->add_option("--samples", samples)->check(CLI::Range(2, 10000000))->capture_default_str();
        sub->add_option("--out", out, "CSV path (label,re,im)")->default_str("curves.csv");
    };
    CLI::App* ess_cmd = spec_cmd->add_subcommand("essential", "Fredholm borders");
    spec_flags(ess_cmd);
    ess_cmd->callback([&] {
        active = ess_cmd;
        action = [&] {
            std::ofstream f = open_out(out);
            f << "label,re,im\n";
            for (const auto& c : fredholm_borders(s, kappa, -mu_max, mu_max, samples)) write_curves_csv(f, c);
            f.close();
            std::cout << "borders -> " << out << '\n';
            Manifest{"spectrum essential", option_echo(ess_cmd), {out}, {}}.write(manifest_path(out));
        };
    });
    CLI::App* abs_cmd = spec_cmd->add_subcommand("absolute", "absolute spectrum (closed form, optional numeric scan)");
    spec_flags(abs_cmd);
    abs_cmd->add_option("--lambda1-min", lambda1_min, "left end of the complex branches")->capture_default_str();
    abs_cmd->add_flag("--numeric", numeric, "also run the eigenvalue-tracking scan");
    abs_cmd->add_option("--re-min", box.re_min)->capture_default_str();
    abs_cmd->add_option("--re-max", box.re_max)->capture_default_str();
    abs_cmd->add_option("--im-min", box.im_min)->capture_default_str();
    abs_cmd->add_option("--im-max", box.im_max)->capture_default_str();
    abs_cmd->callback([&] {
        active = abs_cmd;
        action = [&] {
            AbsSpectrum a = absolute_spectrum_closed(s, kappa, lambda1_min, samples);
            std::ofstream f = open_out(out);
            f << "label,re,im\n";
            write_curves_csv(f, a.segment);
            write_curves_csv(f, a.branch_plus);
            write_curves_csv(f, a.branch_minus);
            json summary = {{"segment", {a.segment_left, a.segment_right}}};
            if (numeric) {
                auto pts = absolute_spectrum_numeric(s, kappa, box);
                write_curves_csv(f, {"numeric", pts});
                summary["numeric_points"] = pts.size();
            }
            f.close();
            std::cout << "real segment [" << a.segment_left << ", " << a.segment_right << "] -> " << out << '\n';
            Manifest{"spectrum absolute", option_echo(abs_cmd), {out}, summary}.write(manifest_path(out));
        };
    });
    CLI::App* w_cmd = spec_cmd->add_subcommand("weights", "ideal weights and the shifted borders");
    spec_flags(w_cmd);
    w_cmd->add_option("--eta-minus", eta_minus, "weight on the left (default: ideal)");
    w_cmd->add_option("--eta-plus", eta_plus, "weight on the right (default: ideal)");
    w_cmd->callback([&] {
        active = w_cmd;
        action = [&] {
            Weights w = ideal_weights(s, kappa);
            if (!std::isnan(eta_minus)) w.eta_minus = eta_minus;
            if (!std::isnan(eta_plus)) w.eta_plus = eta_plus;
            std::ofstream f = open_out(out);
            f << "label,re,im\n";
            for (const auto& c : weighted_borders(s, kappa, w, -mu_max, mu_max, samples)) write_curves_csv(f, c);
            f.close();
            double mr = weighted_border_max_real(s, kappa, w, -mu_max, mu_max);
            std::cout << "eta_minus " << w.eta_minus << " eta_plus " << w.eta_plus << " max Re " << mr << " -> "
                      << out << '\n';
            Manifest{"spectrum weights", option_echo(w_cmd), {out},
                     {{"eta_minus", w.eta_minus}, {"eta_plus", w.eta_plus}, {"max_real", mr},
                      {"limit_minus", weight_limit_minus(s, kappa)}, {"limit_plus", weight_limit_plus(s, kappa)}}}
                .write(manifest_path(out));
        };
    });

    // evans
    std::string contour = "c1", from = "0.05,0", to = "5,0";
    double d_l = -0.05, r = 0.1, r_i = 0.1, r_o = 5;
    int scan_samples = 200;
    EvansConfig ecfg;
    CLI::App* evans_cmd = app.add_subcommand("evans", "Evans function winding numbers and scans");
    evans_cmd->require_subcommand(1);
    auto evans_flags = [&](CLI::App* sub) {
        model_flags(sub, true);
        sub->add_option("--contour", contour, "c1, c2 or segment")->check(CLI::IsMember({"c1", "c2", "segment"}))->capture_default_str();
        sub->add_option("--dl", d_l, "C1 chord position")->capture_default_str();
        sub->add_option("--r", r, "C1 radius")->capture_default_str();
        sub->add_option("--ri", r_i, "C2 inner radius")->capture_default_str();
        sub->add_option("--ro", r_o, "C2 outer radius")->capture_default_str();
        sub->add_option("--from", from, "segment start re,im")->capture_default_str();
        sub->add_option("--to", to, "segment end re,im")->capture_default_str();
        sub->add_option("--z-start", ecfg.z_start, "shooting start (0: automatic)")->capture_default_str();
        sub->add_option("--rtol", ecfg.ode_rel_tol)->capture_default_str();
        sub->add_option("--atol", ecfg.ode_abs_tol)->capture_default_str();
        sub->add_option("--renorm", ecfg.renorm_threshold)->capture_default_str();
        sub->add_option("--contour-samples", ecfg.contour_samples_init)->capture_default_str();
    };
    auto make_contour = [&]() {
        if (contour == "c1") return Contour::c1(d_l, r);
        if (contour == "c2") return Contour::c2(r_i, r_o);
        return Contour::segment(parse_complex(from), parse_complex(to));
    };
    CLI::App* wind_cmd = evans_cmd->add_subcommand("winding", "winding number of D along a closed contour");
    evans_flags(wind_cmd);
    wind_cmd->add_option("--out", out, "optional CSV of the refined samples");
    wind_cmd->callback([&] {
        active = wind_cmd;
        action = [&] {
            EvansFunction ev(family_from_string(family), {kappa, alpha, 0}, ecfg);
            WindingResult w = winding_number(make_contour(), ev);
            std::cout << w.winding << '\n';
            if (!out.empty()) {
                write_evans_csv(out, w.samples);
                Manifest{"evans winding", option_echo(wind_cmd), {out},
                         {{"winding", w.winding}, {"turns", w.total_turns}, {"z_start", ev.z_start()}}}
                    .write(manifest_path(out));
            }
        };
    });
    CLI::App* scan_cmd = evans_cmd->add_subcommand("scan", "sample D along a contour or segment");
    evans_flags(scan_cmd);
    scan_cmd->add_option("--samples", scan_samples)->check(CLI::Range(2, 10000000))->capture_default_str();
    scan_cmd->add_option("--out", out, "CSV path")->default_str("d_of_lambda.csv");
    scan_cmd->callback([&] {
        active = scan_cmd;
        action = [&] {
            EvansFunction ev(family_from_string(family), {kappa, alpha, 0}, ecfg);
            write_evans_csv(out, evans_scan(make_contour(), ev, scan_samples));
            std::cout << scan_samples << " samples -> " << out << '\n';
            Manifest{"evans scan", option_echo(scan_cmd), {out}, {{"z_start", ev.z_start()}}}.write(manifest_path(out));
        };
    });

    // reproduce
    std::string recipe;
    std::string out_dir = "reproduce_out";
    CLI::App* rep_cmd = app.add_subcommand("reproduce", "run a named batch recipe and write CSVs plus summary");
    rep_cmd->add_option("recipe", recipe, "recipe name")->required()->check(CLI::IsMember(recipe_names()));
    rep_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    rep_cmd->callback([&] {
        active = rep_cmd;
        action = [&] {
            fs::path dir = fs::path(out_dir) / recipe;
            fs::create_directories(dir);
            Manifest m{"reproduce " + recipe, option_echo(rep_cmd), {}, {}};
            RecipeContext cx{dir, m};
            recipes().at(recipe)(cx);
            std::ofstream f = open_out(dir / "summary.json");
            f << m.summary.dump(2) << '\n';
            f.close();
            m.outputs.push_back((dir / "summary.json").string());
            m.write(dir / "manifest.json");
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }
    // --out defaults are per subcommand; they only live in the option's default string
    if (out.empty() && active != nullptr)
        if (const CLI::Option* o = active->get_option_no_throw("--out")) out = o->get_default_str();
    try {
        action();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 64;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const PhysicalityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
