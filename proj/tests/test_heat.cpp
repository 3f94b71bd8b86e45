#include <doctest.h>

#include <cmath>

#include "qbheat/error.hpp"
#include "qbheat/heat.hpp"

using qbheat::ScalarHeatField;

namespace {

ScalarHeatField checkerboard(std::size_t n, double dx) {
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] = (i + j) % 2 == 0 ? 1.0 : -1.0;
    return ScalarHeatField(n, n, dx, v);
}

}  // namespace

TEST_CASE("ScalarHeatField invariants") {
    CHECK_THROWS_AS(ScalarHeatField(2, 5, 1.0, std::vector<double>(10)), qbheat::ShapeError);
    CHECK_THROWS_AS(ScalarHeatField(3, 3, 1.0, std::vector<double>(8)), qbheat::ShapeError);
    CHECK_THROWS_AS(ScalarHeatField(3, 3, -1.0, std::vector<double>(9)), qbheat::DataError);
    CHECK_THROWS_AS(ScalarHeatField(3, 3, 1.0, std::vector<double>(9, NAN)), qbheat::NonFiniteError);
}

TEST_CASE("uniform field is a fixed point") {
    const ScalarHeatField u(5, 7, 0.1, std::vector<double>(35, 3.25));
    const auto next = qbheat::heat_step(u, qbheat::max_stable_dt(0.1));
    CHECK(next.values() == u.values());
}

TEST_CASE("hot cell conserves heat") {
    std::vector<double> v(15 * 15, 0.0);
    v[7 * 15 + 3] = 100.0;
    ScalarHeatField u(15, 15, 0.2, v);
    const double start = u.total();
    for (int step = 0; step < 100; ++step) u = qbheat::heat_step(u, qbheat::max_stable_dt(0.2));
    CHECK(std::abs(u.total() - start) <= 1e-9 * std::abs(start));
    CHECK(u.max_abs() < 100.0);
}

TEST_CASE("corner cell conserves heat with reflective walls") {
    std::vector<double> v(6 * 9, 0.0);
    v[0] = 1.0;
    ScalarHeatField u(6, 9, 1.0, v);
    for (int step = 0; step < 1000; ++step) u = qbheat::heat_step(u, 0.25);
    CHECK(std::abs(u.total() - 1.0) <= 1e-9);
    // Long-run state is uniform.
    for (double x : u.values()) CHECK(x == doctest::Approx(1.0 / 54.0).epsilon(1e-6));
}

TEST_CASE("checkerboard decays strictly below the stability limit") {
    const double dx = 0.5;
    ScalarHeatField u = checkerboard(10, dx);
    double previous = u.max_abs();
    for (int step = 0; step < 50; ++step) {
        u = qbheat::heat_step(u, 0.2 * dx * dx);
        CHECK(u.max_abs() < previous);
        previous = u.max_abs();
    }
}

TEST_CASE("max|u| never grows at the stability limit") {
    const double dx = 0.5;
    ScalarHeatField u = checkerboard(10, dx);
    double previous = u.max_abs();
    for (int step = 0; step < 50; ++step) {
        u = qbheat::heat_step(u, qbheat::max_stable_dt(dx));
        CHECK(u.max_abs() <= previous);
        previous = u.max_abs();
    }
}

TEST_CASE("matches the discrete cosine mode decay") {
    // cos(πx/L) modes of the Neumann Laplacian decay by a known factor.
    const std::size_t n = 16;
    const double dx = 1.0, dt = 0.2;
    std::vector<double> v(n * n);
    const double k = M_PI / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] = std::cos(k * (static_cast<double>(j) + 0.5));
    const auto next = qbheat::heat_step(ScalarHeatField(n, n, dx, v), dt);
    const double factor = 1.0 - dt / (dx * dx) * (2.0 - 2.0 * std::cos(k));
    for (std::size_t idx = 0; idx < n * n; ++idx) CHECK(next.values()[idx] == doctest::Approx(factor * v[idx]).epsilon(1e-12));
}

TEST_CASE("unstable steps are rejected") {
    const ScalarHeatField u(4, 4, 0.1, std::vector<double>(16, 0.0));
    CHECK_THROWS_AS(qbheat::heat_step(u, 0.0026), qbheat::DataError);
    CHECK_THROWS_AS(qbheat::heat_step(u, -1e-3), qbheat::DataError);
    CHECK_NOTHROW(qbheat::heat_step(u, 0.0025));
}

TEST_CASE("feature field view") {
    const ScalarHeatField u(3, 4, 0.5, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    const auto f = u.to_feature_field();
    CHECK(f.channels() == 1);
    CHECK(f.spacing() == 0.5);
    CHECK(f.at(2, 3, 0) == 11.0);
}
