#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "polarwave/spectra.hpp"

using namespace polarwave;

namespace {

bool contains_close(const std::array<Complex, 3>& set, Complex v, double tol) {
    for (const Complex& c : set)
        if (std::abs(c - v) <= tol) return true;
    return false;
}

Complex random_lambda(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    return {u(rng), u(rng)};
}

}  // namespace

TEST_CASE("asymptotic matrix entries") {
    const double s = -2, k = 1;
    ComplexMat3 am = asymptotic_matrix(Side::Minus, Family::S1, 0.0, s, k);
    CHECK(am(1, 0) == Complex(0, 0));
    Complex l(0.3, -1.2);
    ComplexMat3 ap = asymptotic_matrix(Side::Plus, Family::S1, l, s, k);
    CHECK(std::abs(ap(0, 1) - Complex(-s * s * s / (k * std::pow(s - 1, 3)), 0)) < 1e-15);
    // S2: far fields swapped
    CHECK((asymptotic_matrix(Side::Minus, Family::S2, l, 2.0, k) -
           asymptotic_matrix(Side::Plus, Family::S1, l, 2.0, k)).norm() == 0.0);
    CHECK((asymptotic_matrix(Side::Plus, Family::S2, l, 2.0, k) -
           asymptotic_matrix(Side::Minus, Family::S1, l, 2.0, k)).norm() == 0.0);
    CHECK_THROWS_AS(asymptotic_matrix(Side::Minus, Family::S1, l, 1.0, k), DomainError);
}

TEST_CASE("spatial eigenvalues at lambda = 0") {
    auto mu = spatial_eigenvalues(Side::Minus, 0.0, -2, 1);
    CHECK(std::abs(mu[0] - Complex(-0.5, 0)) < 1e-15);
    CHECK(std::abs(mu[1] - Complex(2, 0)) < 1e-15);
    CHECK(std::abs(mu[2]) < 1e-15);
}

TEST_CASE("closed-form eigenvalues agree with the dense eigensolver") {
    std::mt19937 rng(7);
    for (double s : {-2.0, -0.7, 2.0, 3.5})
        for (double k : {1.0, 5.0})
            for (int i = 0; i < 100; ++i) {
                Complex l = random_lambda(rng);
                for (Side side : {Side::Minus, Side::Plus}) {
                    auto closed = spatial_eigenvalues(side, l, s, k);
                    auto dense = dense_eigenvalues(asymptotic_matrix(side, Family::S1, l, s, k));
                    Complex tr = asymptotic_matrix(side, Family::S1, l, s, k).trace();
                    CHECK(std::abs(dense[0] + dense[1] + dense[2] - tr) < 1e-9);
                    for (const Complex& c : closed) CHECK(contains_close(dense, c, 1e-8 * (1 + std::abs(c))));
                }
            }
}

TEST_CASE("plus eigenvalues are the minus ones times s/(s-1)") {
    std::mt19937 rng(11);
    const double s = -2, k = 1;
    for (int i = 0; i < 10; ++i) {
        Complex l = random_lambda(rng);
        auto m = spatial_eigenvalues(Side::Minus, l, s, k);
        auto p = spatial_eigenvalues(Side::Plus, l, s, k);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(p[j] - m[j] * (s / (s - 1))) < 1e-10);
    }
}

TEST_CASE("Morse indices") {
    CHECK(morse_index(Side::Minus, 10.0, -2, 1) == 1);
    CHECK(morse_index_at_infinity(-2, 1) == 1);
    CHECK(morse_index_at_infinity(2, 1) == 2);
    CHECK_THROWS_AS(morse_index(Side::Minus, 0.0, -2, 1), OnBorder);
    std::mt19937 rng(3);
    int compared = 0;
    while (compared < 20) {
        Complex l = random_lambda(rng);
        try {
            CHECK(morse_index(Side::Minus, l, -2, 1) == morse_index(Side::Plus, l, -2, 1));
            ++compared;
        } catch (const OnBorder&) {
        }
    }
    // crossing the parabola right to left, mu3 moves into the right half plane
    for (double mu : {-1.5, -0.4, 0.3, 1.2}) {
        Complex b(-mu * mu, -2 * mu);
        CHECK(morse_index(Side::Minus, b - 0.01, -2, 1) - morse_index(Side::Minus, b + 0.01, -2, 1) == 1);
    }
}

TEST_CASE("Fredholm borders") {
    auto b = fredholm_borders(-2, 1, -3, 3, 61);
    CHECK(b[0].label == "line-border");
    CHECK(b[1].label == "parabola-border");
    CHECK(std::abs(b[0].points[30] - Complex(-1, 0)) < 1e-14);
    CHECK(std::abs(b[1].points[30]) < 1e-14);
    for (const Complex& p : b[1].points) CHECK(p.real() <= 0.0);
    // every border point is on the axis for some spatial eigenvalue, or the index changes across it
    for (const auto& curve : b)
        for (const Complex& p : curve.points) {
            bool on = false;
            try {
                morse_index(Side::Minus, p, -2, 1);
            } catch (const OnBorder&) {
                on = true;
            }
            int left = -1, right = -1;
            try {
                left = morse_index(Side::Minus, p - 0.01, -2, 1);
                right = morse_index(Side::Minus, p + 0.01, -2, 1);
            } catch (const OnBorder&) {
            }
            CHECK((on || left != right));
        }
    CHECK_THROWS_AS(fredholm_borders(-2, 1, 0, 1, 1), DomainError);
}

TEST_CASE("closed-form absolute spectrum") {
    AbsSpectrum a = absolute_spectrum_closed(-2, 1, -8, 101);
    CHECK(a.segment_left == doctest::Approx(-3.0));
    CHECK(a.segment_right == doctest::Approx(-1.0));
    CHECK(a.segment_right < 0);
    CHECK(a.segment.points.front().real() == doctest::Approx(-3.0));
    CHECK(a.segment.points.back().real() == doctest::Approx(-1.0));
    CHECK(std::abs(a.branch_plus.points.front() - Complex(-3, 0)) < 1e-12);
    CHECK(std::abs(absolute_branch_imag(-2, 1, -3.0 - 1e-6)) < 1e-5);
    for (const Complex& p : a.branch_plus.points) CHECK(p.imag() >= 0);
    CHECK_THROWS_AS(absolute_spectrum_closed(2, 1, -8, 10), DomainError);
}

TEST_CASE("numeric absolute spectrum: s = -1, kappa = 1") {
    AbsScanOptions opt;
    opt.line_spacing = 0.01;
    auto pts = absolute_spectrum_numeric(-1, 1, {-1.5, 0.5, -2, 2}, opt);
    REQUIRE(!pts.empty());
    double rightmost = -1e9;
    for (const Complex& p : pts) rightmost = std::max(rightmost, p.real());
    CHECK(rightmost == doctest::Approx(-0.25).epsilon(0.05));
    CHECK(rightmost <= -0.25 + 1e-6);
}

TEST_CASE("ideal weights") {
    Weights w = ideal_weights(-2, 1);
    CHECK(w.eta_minus == doctest::Approx(1.0));
    CHECK(w.eta_plus == doctest::Approx(2.0 / 3.0));
    CHECK(w.eta_plus / w.eta_minus == doctest::Approx(-2.0 / (-2.0 - 1.0)));
    CHECK_THROWS_AS(ideal_weights(1.5, 1), DomainError);
    // plus-side profile decay 1/(1-s) stays inside the admissible range
    CHECK(1.0 / 3.0 < weight_limit_plus(-2, 1));
    CHECK(weight_limit_plus(-2, 1) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("weighted borders") {
    CHECK(weighted_border_max_real(-2, 1, {0, 0}, -5, 5) == doctest::Approx(0.0).epsilon(1e-14));
    Weights w = ideal_weights(-2, 1);
    CHECK(std::abs(weighted_border_max_real(-2, 1, w, -5, 5) - (-1.0)) < 1e-6);
    for (double s : {-2.0, -0.5, -3.0})
        for (double k : {1.0, 5.0}) {
            Weights iw = ideal_weights(s, k);
            CHECK(std::abs(weighted_border_max_real(s, k, iw, -5, 5) + s * s / (4 * k)) < 1e-6);
        }
    // the closed endpoint of the minus interval only reaches the axis
    CHECK(std::abs(weighted_border_max_real(-2, 1, {2.0, 2.0 / 3.0}, -5, 5)) < 1e-12);
}
