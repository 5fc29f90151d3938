#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "polarwave/evans.hpp"

using namespace polarwave;

namespace {

// sin of the angle between the complex lines spanned by u and v
double line_angle(const ComplexVec3& u, const ComplexVec3& v) {
    double c = std::abs(u.dot(v)) / (u.norm() * v.norm());
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

ScaledComplex plain(Complex v) { return ScaledComplex::make(v); }

}  // namespace

TEST_CASE("scaled complex keeps the mantissa near one") {
    ScaledComplex z = ScaledComplex::make({3e200, -4e200}, 5.0);
    CHECK(std::abs(z.mantissa) >= 0.5);
    CHECK(std::abs(z.mantissa) < 2.0);
    CHECK(z.log_abs() == doctest::Approx(std::log(5e200) + 5.0));
    ScaledComplex small = ScaledComplex::make({1e-3, 0});
    CHECK(small.value().real() == doctest::Approx(1e-3));
    ScaledComplex zero = ScaledComplex::make({0, 0}, 7);
    CHECK(zero.mantissa == Complex(0, 0));
}

TEST_CASE("config checks") {
    EvansConfig c;
    c.z_start = 5;
    CHECK_THROWS_AS(EvansFunction(Family::S1, {1, 0.5, 0}, c), DomainError);
    c.z_start = -5;
    CHECK_THROWS_AS(EvansFunction(Family::S2, {1, 0.2, 0}, c), DomainError);
    CHECK_THROWS_AS(EvansFunction(Family::S3, {1, 0.5, 0}), DomainError);
    CHECK_THROWS_AS(EvansFunction(Family::S2, {1, 0.6, 0}), PhysicalityError);
}

TEST_CASE("start point moves out only for slow tails") {
    CHECK(EvansFunction(Family::S1, {1, 0.2, 0}).z_start() == -20.0);
    CHECK(EvansFunction(Family::S2, {1, 0.2, 0}).z_start() == 20.0);
    EvansFunction slow(Family::S1, {5, 0.7, 0});
    CHECK(slow.z_start() < -20.0);
    double off = std::abs(slow.wave().R(slow.z_start()) - 1.0);
    CHECK(off <= 1e-4);
    EvansConfig c;
    c.z_start = -25;
    CHECK(EvansFunction(Family::S1, {5, 0.7, 0}, c).z_start() == -25.0);
}

TEST_CASE("tabulated profile matches direct inversion") {
    for (double alpha : {0.2, 0.7}) {
        EvansFunction ev(Family::S1, {1, alpha, 0});
        double worst = 0;
        for (double z = -19.9995; z < 0; z += 0.0737) {
            worst = std::max(worst, std::abs(ev.profile_at(z).R - ev.wave().R(z)));
            worst = std::max(worst, std::abs(ev.profile_at(z).A - ev.wave().A(z)));
        }
        CHECK(worst < 1e-9);
    }
    EvansFunction ev2(Family::S2, {1, 0.3, 0});
    for (double z = 0.0005; z < 20; z += 0.0911) CHECK(std::abs(ev2.profile_at(z).R - ev2.wave().R(z)) < 1e-9);
}

TEST_CASE("matrix tends to the far-field matrices") {
    ModelParams p{1, 0.5, 0};
    EvansFunction ev(Family::S1, p);
    const double s = ev.speed();
    const Complex l(0.3, -0.7);
    ComplexMat3 left = ev.matrix(-30, l);
    CHECK((left - asymptotic_matrix(Side::Minus, Family::S1, l, s, 1)).cwiseAbs().maxCoeff() < 1e-8);

    // right of the front R is constant; only the A' entry still varies
    const double z = 2.5;
    ComplexMat3 right = ev.matrix(z, l);
    ComplexMat3 plus = asymptotic_matrix(Side::Plus, Family::S1, l, s, 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!(i == 2 && j == 1)) CHECK(std::abs(right(i, j) - plus(i, j)) < 1e-12);
    const double a_prime = (p.alpha - 1) / (s - 1) * std::exp(z / (s - 1));
    CHECK(std::abs(right(2, 1) - (a_prime - 1) / (s - 1)) < 1e-12);
    CHECK(std::abs(ev.matrix(40, l)(2, 1) - 1.0 / (1 - s)) < 1e-8);
    CHECK(right(0, 2) == Complex(0, 0));
    CHECK(right(1, 2) == Complex(0, 0));

    EvansFunction ev2(Family::S2, {1, 0.2, 0});
    ComplexMat3 far = ev2.matrix(30, l);
    CHECK((far - asymptotic_matrix(Side::Plus, Family::S2, l, ev2.speed(), 1)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("closed-form boundary vectors") {
    for (double alpha : {0.2, 0.5}) {
        ModelParams p{1.5, alpha, 0};
        EvansFunction ev(Family::S1, p);
        const double s = ev.speed(), k = p.kappa;
        auto [x, y] = ev.boundary_vectors({0.4, 0.9});
        CHECK(y(2) == Complex(0, 0));
        CHECK(std::abs(x(0) + s * s * s / ((s - 1) * (s - 1) * (alpha - 1) * k)) < 1e-12);
        CHECK(std::abs(x(1) + s * s / ((alpha - 1) * k)) < 1e-12);
        CHECK(x(2) == Complex(1, 0));
        auto [x2, y2] = ev.boundary_vectors({-0.03, 2.0});
        CHECK((x - x2).norm() == 0.0);
        auto [x0, y0] = ev.boundary_vectors(0.0);
        CHECK(std::abs(y0(0) - (-2 * s * s * s / ((s - 1) * (s - 1) * k))) < 1e-12);
        CHECK(y0(1) == Complex(0, 0));
    }
    // Y spans the decaying direction of the (rho, v) block on the closed-form side
    for (Family f : {Family::S1, Family::S2}) {
        ModelParams p{1, 0.2, 0};
        EvansFunction ev(f, p);
        const double s = ev.speed();
        const Complex l(0.2, 0.5);
        Side closed = f == Family::S1 ? Side::Plus : Side::Minus;
        ComplexMat3 m = asymptotic_matrix(closed, f, l, s, 1);
        auto mu = spatial_eigenvalues(Side::Plus, l, s, 1);
        Complex want = f == Family::S1 ? mu[2] : mu[1];
        auto [x, y] = ev.boundary_vectors(l);
        Eigen::Vector2cd y2(y(0), y(1));
        Eigen::Matrix2cd b = m.topLeftCorner<2, 2>();
        CHECK((b * y2 - want * y2).norm() < 1e-12 * y2.norm());
    }
}

TEST_CASE("jump across the front") {
    ModelParams p{1, 0.3, 0};
    for (Family f : {Family::S1, Family::S2}) {
        EvansFunction ev(f, p);
        ComplexVec3 v(Complex(1, 2), Complex(-0.5, 0.1), 0.0);
        CHECK((ev.jump(v) - v).norm() == 0.0);
        ComplexVec3 u(0.0, 0.0, 1.0);
        ComplexVec3 j = ev.jump(u);
        // size R^3/(kappa |A'(0)|) in the density entry
        const double s = ev.speed(), r0 = s / (s - 1), ap = (p.alpha - 1) / (s - 1);
        CHECK(std::abs(j(0) + r0 * r0 * r0 / ap) < 1e-12);
        CHECK(std::abs(j(1) + r0 * s / ap) < 1e-12);
    }
}

TEST_CASE("jump matches a mollified delta to first order in its width") {
    const Complex l(0.3, 0.2);
    ComplexVec3 v(0.7, Complex(0.2, -0.4), 1.0);
    for (Family f : {Family::S1, Family::S2}) {
        EvansFunction ev(f, {1, f == Family::S1 ? 0.5 : 0.2, 0});
        double err[3];
        int k = 0;
        for (double m : {1e-2, 1e-3, 1e-4}) {
            MollifiedJump r = mollified_jump(ev, v, l, m);
            err[k] = (r.mollified - r.reference).norm() / r.reference.norm();
            CHECK(err[k] < 5 * m);
            ++k;
        }
        CHECK(err[0] / err[1] == doctest::Approx(10).epsilon(0.5));
        CHECK(err[1] / err[2] == doctest::Approx(10).epsilon(0.5));
    }
}

TEST_CASE("start vectors") {
    ModelParams p{1, 0.5, 0};
    EvansFunction ev(Family::S1, p);
    const double s = ev.speed(), k = p.kappa;
    // lambda = 0 form
    ComplexVec3 v0 = ev.start_vector(0.0);
    ComplexVec3 want0(1 / s, 1, k / (s * s + k));
    CHECK(line_angle(v0, want0) < 1e-12);
    // general form with the 1/lambda written out
    for (Complex l : {Complex(0.5, 0.5), Complex(3, -1), Complex(1e-9, 0)}) {
        Complex q = std::sqrt(s * s * s * s + 4 * s * s * k * l);
        ComplexVec3 w((-s * s + q) / (2.0 * l * s * k), 1.0, 2 * k / (s * s + 2 * k * (1.0 + l) + q));
        CHECK(line_angle(ev.start_vector(l), w) < 1e-7);
    }
    // residual against the matrix at the start point
    const Complex l(0.4, 1.2);
    ComplexVec3 v = ev.start_vector(l);
    ComplexMat3 m = ev.matrix(ev.z_start(), l);
    CHECK((m * v - ev.start_eigenvalue(l) * v).norm() / v.norm() < 1e-6);
    // S2 starts from the decaying far-right mode
    EvansFunction ev2(Family::S2, {1, 0.2, 0});
    ComplexVec3 v2 = ev2.start_vector(0.0);
    CHECK(line_angle(v2, ComplexVec3(1 / ev2.speed(), 1, 1 / (ev2.speed() * ev2.speed() + 1))) < 1e-12);
    CHECK(ev2.start_eigenvalue(0.7).real() < 0);
}

TEST_CASE("shooting is insensitive to the start point") {
    ModelParams p{1, 0.5, 0};
    EvansConfig a, b;
    a.z_start = -20;
    b.z_start = -25;
    ScaledVec3 va = EvansFunction(Family::S1, p, a).shoot(10.0);
    ScaledVec3 vb = EvansFunction(Family::S1, p, b).shoot(10.0);
    CHECK(line_angle(va.v, vb.v) < 1e-6);
    // still aligned with the far-field mode well inside the tail
    EvansFunction ev(Family::S1, p);
    const Complex l(0.5, 0.3);
    CHECK(line_angle(ev.shoot(l, -15).v, ev.start_vector(l)) < 1e-4);
}

TEST_CASE("renormalisation is a positive rescale") {
    ModelParams p{1, 0.2, 0};
    EvansConfig lo, hi;
    lo.renorm_threshold = 1e3;
    hi.renorm_threshold = 1e12;
    ScaledComplex a = evans_det({2, 1}, Family::S1, p, lo);
    ScaledComplex b = evans_det({2, 1}, Family::S1, p, hi);
    CHECK(std::abs(std::arg(a.mantissa / b.mantissa)) < 1e-7);
    CHECK(a.log_abs() == doctest::Approx(b.log_abs()).epsilon(1e-8));
}

TEST_CASE("translation eigenvalue") {
    for (Family f : {Family::S1, Family::S2})
        for (double alpha : {0.2, 0.4}) {
            EvansFunction ev(f, {1, alpha, 0});
            double rel = std::exp(ev(0.0).log_abs() - ev(0.1).log_abs());
            CHECK(rel < 1e-6);
        }
    EvansFunction ev(Family::S1, {1, 0.2, 0});
    ScaledComplex d1 = ev(1.0);
    CHECK(d1.mantissa != Complex(0, 0));
    CHECK(d1.log_abs() > ev(0.0).log_abs() + 10);
}

TEST_CASE("real-coefficient symmetry") {
    EvansFunction ev(Family::S1, {1, 0.4, 0});
    for (Complex l : {Complex(0.3, 0.8), Complex(-0.02, 0.05), Complex(4, 2)}) {
        ScaledComplex a = ev(l), b = ev(std::conj(l));
        CHECK(std::abs(std::arg(a.mantissa * b.mantissa)) < 1e-7);
        CHECK(a.log_abs() == doctest::Approx(b.log_abs()).epsilon(1e-9));
    }
}

TEST_CASE("contour shapes") {
    Contour c1 = Contour::c1(-0.05, 0.1);
    CHECK(c1.closed());
    CHECK(std::abs(c1.point(0) - c1.point(1)) < 1e-14);
    CHECK(c1.min_real() == doctest::Approx(-0.05));
    CHECK(std::abs(std::abs(c1.point(0.2)) - 0.1) < 1e-14);
    Contour c2 = Contour::c2(0.1, 5);
    CHECK(c2.min_real() == doctest::Approx(0.0));
    CHECK(std::abs(c2.point(0) - c2.point(1)) < 1e-14);
    CHECK_THROWS_AS(Contour::c1(-0.2, 0.1), DomainError);
    CHECK_THROWS_AS(Contour::c2(1, 0.5), DomainError);
    CHECK_FALSE(Contour::segment(0.05, 5).closed());
}

TEST_CASE("winding count on functions with known zeros") {
    Contour c1 = Contour::c1(-0.05, 0.1);
    auto one = [](Complex l) { return plain(l - 0.01); };
    auto two = [](Complex l) { return plain((l - 0.01) * (l + Complex(0.02, 0.03))); };
    auto none = [](Complex l) { return plain(l - 1.0); };
    auto pole = [](Complex l) { return plain(1.0 / (l - Complex(0, 0.02))); };
    CHECK(winding_number(c1, one, 16).winding == 1);
    CHECK(winding_number(c1, two, 16).winding == 2);
    CHECK(winding_number(c1, none, 16).winding == 0);
    CHECK(winding_number(c1, pole, 16).winding == -1);
    // fast phase rotation forces refinement
    auto spin = [](Complex l) { return plain(std::exp(Complex(0, 60) * l) * (l - 0.01)); };
    WindingResult r = winding_number(c1, spin, 16);
    CHECK(r.winding == 1);
    CHECK(r.samples.size() > 16);
    // zero on the path
    auto on_path = [](Complex l) { return plain(l - 0.1); };
    CHECK_THROWS_AS(winding_number(c1, on_path, 16), ContourThroughZero);
    CHECK_THROWS_AS(winding_number(Contour::segment(0.1, 1), one, 16), DomainError);
}

TEST_CASE("Evans winding numbers") {
    ModelParams p{1, 0.5, 0};
    EvansFunction ev(Family::S1, p);
    WindingResult w1 = winding_number(Contour::c1(-0.05, 0.1), ev);
    CHECK(w1.winding == 1);
    CHECK(winding_number(Contour::c2(0.1, 5), ev).winding == 0);
    // image of C1 crosses the negative real axis an odd number of times
    int crossings = 0;
    const auto& smp = w1.samples;
    for (std::size_t i = 0; i < smp.size(); ++i) {
        Complex a = smp[i].d.mantissa, b = smp[(i + 1) % smp.size()].d.mantissa;
        if ((a.imag() < 0) != (b.imag() < 0) && a.real() < 0 && b.real() < 0) ++crossings;
    }
    CHECK(crossings % 2 == 1);
    CHECK(winding_number(Contour::c1(-0.05, 0.1), Family::S2, {1, 0.4, 0}) == 1);
    CHECK_THROWS_AS(winding_number(Contour::c1(-0.3, 0.4), ev), DomainError);  // branch point at -0.25
}

TEST_CASE("Evans function along the positive real axis keeps its sign") {
    EvansFunction ev(Family::S1, {1, 0.5, 0});
    auto samples = evans_scan(Contour::segment(0.05, 5), ev, 60);
    CHECK(samples.size() == 60);
    CHECK(samples.front().lambda.real() == doctest::Approx(0.05));
    CHECK(samples.back().lambda.real() == doctest::Approx(5));
    const double sign0 = samples.front().d.mantissa.real() > 0 ? 1 : -1;
    for (const auto& e : samples) {
        CHECK(std::abs(e.d.mantissa.imag()) < 1e-8);
        CHECK(e.d.mantissa.real() * sign0 > 0);
    }
}
