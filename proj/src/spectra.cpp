#include "polarwave/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "polarwave/parallel.hpp"

namespace polarwave {

namespace {

ComplexMat3 minus_form(Complex l, double s, double k) {
    ComplexMat3 m = ComplexMat3::Zero();
    m(0, 1) = -1.0 / k;
    m(1, 0) = -l;
    m(1, 1) = -s / k;
    m(2, 1) = -1.0 / s;
    m(2, 2) = (l + 1.0) / s;
    return m;
}

ComplexMat3 plus_form(Complex l, double s, double k) {
    ComplexMat3 m = ComplexMat3::Zero();
    const double sm1 = s - 1.0;
    m(0, 1) = -s * s * s / (k * sm1 * sm1 * sm1);
    m(1, 0) = (1.0 / s - 1.0) * l;
    m(1, 1) = s * s / (k * (1.0 - s));
    m(2, 1) = 1.0 / (1.0 - s);
    m(2, 2) = (l + 1.0) / sm1;
    return m;
}

}  // namespace

Complex dispersion_root(Complex lambda, double s, double kappa) {
    return std::sqrt(Complex(s * s, 0.0) + 4.0 * kappa * lambda);
}

ComplexMat3 asymptotic_matrix(Side side, Family family, Complex lambda, double s, double kappa) {
    if (s == 0.0 || s == 1.0) throw DomainError("asymptotic_matrix: speed must differ from 0 and 1");
    bool minus = (side == Side::Minus);
    if (family == Family::S2) minus = !minus;
    else if (family != Family::S1) throw DomainError("asymptotic_matrix: only S1 and S2 are supported");
    return minus ? minus_form(lambda, s, kappa) : plus_form(lambda, s, kappa);
}

std::array<Complex, 3> spatial_eigenvalues(Side side, Complex lambda, double s, double kappa) {
    const Complex r = dispersion_root(lambda, s, kappa);
    std::array<Complex, 3> mu{(lambda + 1.0) / s, (-s + r) / (2.0 * kappa), (-s - r) / (2.0 * kappa)};
    if (side == Side::Plus)
        for (auto& m : mu) m *= s / (s - 1.0);
    return mu;
}

std::array<Complex, 3> dense_eigenvalues(const ComplexMat3& m) {
    Eigen::ComplexEigenSolver<ComplexMat3> es(m, false);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    return {es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvalues()(2)};
}

int morse_index(Side side, Complex lambda, double s, double kappa) {
    int count = 0;
    for (const Complex& m : spatial_eigenvalues(side, lambda, s, kappa)) {
        if (std::abs(m.real()) < 1e-10) throw OnBorder("spatial eigenvalue on the imaginary axis");
        if (m.real() > 0) ++count;
    }
    return count;
}

std::array<SpectrumCurve, 2> fredholm_borders(double s, double kappa, double mu_min, double mu_max,
                                              int samples) {
    if (samples < 2) throw DomainError("fredholm_borders: need at least 2 samples");
    std::array<SpectrumCurve, 2> out{SpectrumCurve{"line-border", {}}, SpectrumCurve{"parabola-border", {}}};
    for (int i = 0; i < samples; ++i) {
        double mu = mu_min + (mu_max - mu_min) * i / (samples - 1);
        out[0].points.push_back(Complex(-1.0, mu * s));
        out[1].points.push_back(Complex(-mu * mu * kappa, mu * s));
    }
    return out;
}

double absolute_branch_imag(double s, double kappa, double l1) {
    double s2 = s * s;
    double q = s2 + kappa * (1.0 + l1) * (1.0 + l1);
    return std::abs((s2 + 2.0 * kappa * (1.0 + l1)) * std::sqrt(q) / (s2 * std::sqrt(kappa)));
}

AbsSpectrum absolute_spectrum_closed(double s, double kappa, double lambda1_min, int samples) {
    if (!(s < 0)) throw DomainError("absolute_spectrum_closed: formulas are stated for s < 0");
    if (samples < 2) throw DomainError("absolute_spectrum_closed: need at least 2 samples");
    AbsSpectrum a;
    a.segment_left = -(s * s + 2.0 * kappa) / (2.0 * kappa);
    a.segment_right = -s * s / (4.0 * kappa);
    a.segment.label = "abs-real-segment";
    a.branch_plus.label = "abs-branch-plus";
    a.branch_minus.label = "abs-branch-minus";
    for (int i = 0; i < samples; ++i) {
        double t = static_cast<double>(i) / (samples - 1);
        a.segment.points.push_back(Complex(a.segment_left + t * (a.segment_right - a.segment_left), 0.0));
    }
    double lo = std::min(lambda1_min, a.segment_left);
    for (int i = 0; i < samples; ++i) {
        double l1 = a.segment_left - (a.segment_left - lo) * i / (samples - 1);
        double l2 = absolute_branch_imag(s, kappa, l1);
        a.branch_plus.points.push_back(Complex(l1, l2));
        a.branch_minus.points.push_back(Complex(l1, -l2));
    }
    return a;
}

namespace {

// Reorder `next` so that next[k] continues cur[k]; returns the largest move
// relative to the smallest gap among cur.
double match_to(const std::array<Complex, 3>& cur, std::array<Complex, 3>& next) {
    std::array<int, 3> perm{0, 1, 2}, best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0;
        for (int k = 0; k < 3; ++k) c += std::norm(next[perm[k]] - cur[k]);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::array<Complex, 3> r{next[best[0]], next[best[1]], next[best[2]]};
    next = r;
    double gap = std::min({std::abs(cur[0] - cur[1]), std::abs(cur[0] - cur[2]), std::abs(cur[1] - cur[2])});
    double move = 0;
    for (int k = 0; k < 3; ++k) move = std::max(move, std::abs(next[k] - cur[k]));
    return gap > 0 ? move / gap : std::numeric_limits<double>::infinity();
}

// Labels ordered by real part, descending; ties broken by imaginary part.
std::array<int, 3> rank_order(const std::array<Complex, 3>& mu) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (mu[a].real() != mu[b].real()) return mu[a].real() > mu[b].real();
        return mu[a].imag() > mu[b].imag();
    });
    return idx;
}

struct Scanner {
    double s, kappa, re;
    int i_inf;
    double tol;

    std::array<Complex, 3> eig(double im) const {
        return dense_eigenvalues(minus_form(Complex(re, im), s, kappa));
    }

    // Re of ordered eigenvalues i_inf and i_inf+1 differ by less than tol_re.
    bool verify(double im, double tol_re) const {
        auto mu = eig(im);
        auto ord = rank_order(mu);
        return std::abs(mu[ord[i_inf - 1]].real() - mu[ord[i_inf]].real()) <= tol_re;
    }

    // Bisect the crossing of tracked branches a and b, Re mu_a > Re mu_b at im0.
    void bisect(double lo, std::array<Complex, 3> mu_lo, double hi, int a, int b, std::vector<Complex>& out) const {
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            auto mm = track(lo, mu_lo, mid);
            if (mm[a].real() - mm[b].real() > 0) {
                lo = mid;
                mu_lo = mm;
            } else {
                hi = mid;
            }
        }
        double root = 0.5 * (lo + hi);
        double scale = 1.0 + std::abs(mu_lo[a]) + std::abs(mu_lo[b]);
        if (verify(root, 1e-6 * scale)) out.push_back(Complex(re, root));
    }

    // One scan step. A single adjacent transposition at ranks (i_inf, i_inf+1) is
    // a crossing; anything more tangled is split until the events separate.
    void step(double im0, const std::array<Complex, 3>& mu0, const std::array<int, 3>& ord0, double im1,
              const std::array<Complex, 3>& mu1, const std::array<int, 3>& ord1, std::vector<Complex>& out,
              int depth) const {
        if (ord0 == ord1) return;
        int diff = 0;
        for (int k = 0; k < 3; ++k) diff += (ord0[k] != ord1[k]);
        if (diff == 2) {
            for (int k = 0; k < 2; ++k) {
                if (ord0[k] == ord1[k + 1] && ord0[k + 1] == ord1[k]) {
                    if (k == i_inf - 1) bisect(im0, mu0, im1, ord0[k], ord0[k + 1], out);
                    return;
                }
            }
        }
        if (depth >= 40) return;
        double mid = 0.5 * (im0 + im1);
        auto mm = track(im0, mu0, mid);
        auto om = rank_order(mm);
        step(im0, mu0, ord0, mid, mm, om, out, depth + 1);
        step(mid, mm, om, im1, mu1, ord1, out, depth + 1);
    }

    // Move from (im0, mu0) to im1, subdividing until the tracking is unambiguous.
    std::array<Complex, 3> track(double im0, const std::array<Complex, 3>& mu0, double im1, int depth = 0) const {
        auto mu1 = eig(im1);
        double ratio = match_to(mu0, mu1);
        if (ratio < 0.3 || depth > 12) return mu1;
        double mid = 0.5 * (im0 + im1);
        auto mm = track(im0, mu0, mid, depth + 1);
        return track(mid, mm, im1, depth + 1);
    }
};

}  // namespace

int morse_index_at_infinity(double s, double kappa) {
    int count = 0;
    for (const Complex& m : dense_eigenvalues(minus_form(Complex(100.0, 0.0), s, kappa)))
        if (m.real() > 0) ++count;
    return count;
}

std::vector<Complex> absolute_spectrum_numeric(double s, double kappa, const SearchBox& box,
                                               const AbsScanOptions& opt) {
    const int i_inf = morse_index_at_infinity(s, kappa);
    if (i_inf < 1 || i_inf > 2) throw NumericalError("absolute spectrum: unexpected Morse index at infinity");
    const std::size_t n_lines =
        static_cast<std::size_t>(std::floor((box.re_max - box.re_min) / opt.line_spacing + 1e-9)) + 1;
    const int n_im = std::max(2, static_cast<int>(std::ceil((box.im_max - box.im_min) / opt.im_step)) + 1);
    std::vector<std::vector<Complex>> per_line(n_lines);

    parallel_for(n_lines, [&](std::size_t j) {
        Scanner sc{s, kappa, box.re_min + static_cast<double>(j) * opt.line_spacing, i_inf, opt.tol};
        // grid offset keeps samples off the real axis, where conjugate pairs tie exactly
        const double h = (box.im_max - box.im_min) / (n_im - 1);
        const double im0 = box.im_min - 0.381966 * h;
        double im_prev = im0;
        auto mu_prev = sc.eig(im_prev);
        auto ord = rank_order(mu_prev);
        for (int k = 1; k <= n_im; ++k) {
            double im = im0 + h * k;
            auto mu = sc.track(im_prev, mu_prev, im);
            auto ord_new = rank_order(mu);
            sc.step(im_prev, mu_prev, ord, im, mu, ord_new, per_line[j], 0);
            im_prev = im;
            mu_prev = mu;
            ord = ord_new;
        }
    });

    std::vector<Complex> out;
    for (auto& v : per_line) out.insert(out.end(), v.begin(), v.end());
    return out;
}

Weights ideal_weights(double s, double kappa) {
    if (!(s < 0)) throw DomainError("ideal_weights: requires s < 0");
    return {-s / (2.0 * kappa), s * s / (2.0 * kappa * (1.0 - s))};
}

double weight_limit_minus(double s, double kappa) { return -s / kappa; }

double weight_limit_plus(double s, double kappa) { return s * s / (kappa * (1.0 - s)); }

std::array<SpectrumCurve, 4> weighted_borders(double s, double kappa, Weights w, double mu_min,
                                              double mu_max, int samples) {
    if (samples < 2) throw DomainError("weighted_borders: need at least 2 samples");
    std::array<SpectrumCurve, 4> out{SpectrumCurve{"line-border-minus", {}}, SpectrumCurve{"parabola-border-minus", {}},
                                     SpectrumCurve{"line-border-plus", {}}, SpectrumCurve{"parabola-border-plus", {}}};
    const double d = weight_limit_plus(s, kappa);
    const double cp = kappa * (s - 1.0) * (s - 1.0) / (s * s);
    for (int i = 0; i < samples; ++i) {
        double mu = mu_min + (mu_max - mu_min) * i / (samples - 1);
        Complex nm(w.eta_minus, mu), np(w.eta_plus, mu);
        out[0].points.push_back(s * nm - 1.0);
        out[1].points.push_back(kappa * nm * nm + s * nm);
        out[2].points.push_back((s - 1.0) * np - 1.0);
        out[3].points.push_back(cp * (np * np - d * np));
    }
    return out;
}

double weighted_border_max_real(double s, double kappa, Weights w, double mu_min, double mu_max,
                                int samples) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : weighted_borders(s, kappa, w, mu_min, mu_max, samples))
        for (const Complex& z : c.points) m = std::max(m, z.real());
    if (mu_min <= 0.0 && mu_max >= 0.0)  // parabola vertices
        for (const auto& c : weighted_borders(s, kappa, w, 0.0, 0.0, 2))
            m = std::max(m, c.points[0].real());
    return m;
}

}  // namespace polarwave
