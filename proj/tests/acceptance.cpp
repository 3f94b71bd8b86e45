// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cli_harness.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "qbheat/error.hpp"
#include "qbheat/field_io.hpp"
#include "qbheat/fitting.hpp"
#include "qbheat/heat.hpp"
#include "qbheat/predictor.hpp"
#include "qbheat/spectrum.hpp"

using qbheat::Axis;
using qbheat::Complex;
using qbheat::FeatureField;
using qbheat::FitConfig;
using qbheat::GenerationMode;
using qbheat::Matrix;
using qbheat::Position;
using qbheat::QuarterLayout;

namespace {

struct Outcome {
    bool ok;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

double shift_error(const FeatureField& f, const Matrix& step, std::size_t k, Axis axis) {
    double worst = 0.0;
    const std::size_t rows = axis == Axis::y ? f.height() - k : f.height();
    const std::size_t cols = axis == Axis::x ? f.width() - k : f.width();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const auto moved = qbheat::multiply(step, f.cell(i, j));
            const auto actual = axis == Axis::x ? f.cell(i, j + k) : f.cell(i + k, j);
            for (std::size_t c = 0; c < f.channels(); ++c) worst = std::max(worst, std::abs(moved[c] - actual[c]));
        }
    return worst / fixture::max_abs(f.values());
}

// ---- 1 -------------------------------------------------------------------

Outcome mat_exp_oracle() {
    qbheat::SplitMix64 rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Matrix m = oracle::random_matrix(rng, 6);
        m *= 2.0 * rng.uniform() / m.frobenius_norm();
        worst = std::max(worst, oracle::rel_diff(qbheat::mat_exp(m, 1.0), oracle::taylor_exp(m, 1.0)));
    }
    return {worst <= 1e-10, fmt("100 matrices 6x6, worst relative error %.2e", worst)};
}

// ---- 2 -------------------------------------------------------------------

Outcome eigen_sanity() {
    qbheat::SplitMix64 rng(202);
    double worst_trace = 0.0, worst_det = 0.0;
    int unpaired = 0, complex_count = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix m = oracle::random_matrix(rng, 8);
        const auto eig = qbheat::eigen_spectrum(m);
        Complex sum{}, prod{1.0, 0.0};
        for (const Complex& l : eig.eigenvalues) {
            sum += l;
            prod *= l;
            if (l.imag() == 0.0) continue;
            ++complex_count;
            const bool paired = std::any_of(eig.eigenvalues.begin(), eig.eigenvalues.end(),
                                            [&](const Complex& o) { return std::abs(o - std::conj(l)) < 1e-10; });
            if (!paired) ++unpaired;
        }
        const double det = static_cast<double>(oracle::determinant_ld(m));
        worst_trace = std::max(worst_trace, std::abs(sum - Complex(m.trace(), 0.0)));
        worst_det = std::max(worst_det, std::abs(prod - Complex(det, 0.0)) / std::abs(det));
    }
    const bool ok = worst_trace <= 1e-8 && worst_det <= 1e-6 && unpaired == 0 && complex_count > 0;
    return {ok, fmt("trace err %.2e, det rel err %.2e, ", worst_trace, worst_det) +
                    std::to_string(complex_count) + " complex eigenvalues, " + std::to_string(unpaired) +
                    " unpaired"};
}

// ---- 3 -------------------------------------------------------------------

Outcome exact_field_consistency() {
    double worst_shift = 0.0, min_lap = INFINITY, min_cross = INFINITY;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto spec = fixture::commuting_spec(4, 1.0, seed, GenerationMode::continuous);
        const Matrix s = qbheat::compute_S(spec.a, spec.b);
        double prev_lap = 0.0, prev_cross = 0.0;
        for (int level = 0; level < 4; ++level) {
            const double h = 0.05 / std::pow(2.0, level);
            // State anchored at the grid center so the refined domains stay nested.
            const auto f = qbheat::generate_exact_field(fixture::centered(spec, 33, h), 33, 33, h);
            if (level == 0) {
                for (std::size_t k = 1; k <= 4; ++k) {
                    const double t = static_cast<double>(k) * h;
                    worst_shift = std::max({worst_shift, shift_error(f, qbheat::mat_exp(spec.a, t), k, Axis::x),
                                            shift_error(f, qbheat::mat_exp(spec.b, t), k, Axis::y)});
                }
            }
            const double lap = qbheat::laplacian_residual(f, s);
            const double cross = qbheat::cross_derivative_residual(f, spec.a, spec.b, 1, 1);
            if (level > 0) {
                min_lap = std::min(min_lap, prev_lap / lap);
                min_cross = std::min(min_cross, prev_cross / cross);
            }
            prev_lap = lap;
            prev_cross = cross;
        }
    }
    const bool ok = worst_shift <= 1e-8 && min_lap >= 3.5 && min_cross >= 3.5;
    return {ok, fmt("shift err %.2e, min halving ratio laplacian %.3f, cross %.3f", worst_shift, min_lap, min_cross)};
}

// ---- 4 -------------------------------------------------------------------

Outcome projector_identities() {
    double worst_diag = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto p = qbheat::random_commuting_pair(5, 1.0, seed);
        const double dx = 0.3, dy = 0.2;
        const auto m = qbheat::make_models(p.a, p.b, dx, dy);
        const Matrix eye = Matrix::identity(5);
        worst_diag = std::max(worst_diag, oracle::rel_diff(qbheat::projector(m, qbheat::Direction::down_right),
                                                           (eye + p.a * dx) * (eye + p.b * dy)));
    }

    qbheat::SplitMix64 rng(404);
    double ratio_lo = INFINITY, ratio_hi = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a0 = oracle::random_matrix(rng, 5);
        const Matrix eye = Matrix::identity(5);
        double previous = 0.0;
        for (double eps : {0.1, 0.05, 0.025}) {
            const Matrix a = a0 * (eps / a0.frobenius_norm());
            const auto m = qbheat::make_models(a, a, 1.0, 1.0);
            const double err =
                (qbheat::inverse(eye + a) - qbheat::projector(m, qbheat::Direction::left)).frobenius_norm() +
                (qbheat::inverse(eye + a) - qbheat::projector(m, qbheat::Direction::up)).frobenius_norm();
            if (previous > 0.0) {
                ratio_lo = std::min(ratio_lo, previous / err);
                ratio_hi = std::max(ratio_hi, previous / err);
            }
            previous = err;
        }
    }
    const bool ok = worst_diag <= 1e-12 && ratio_lo >= 3.5 && ratio_hi <= 4.5;
    return {ok, fmt("averaged vs product %.2e, inverse error halving ratios in [%.3f, %.3f]", worst_diag, ratio_lo,
                    ratio_hi)};
}

// ---- 5 -------------------------------------------------------------------

struct Batch {
    qbheat::CommutingPair truth;
    std::vector<FeatureField> fields;
    std::vector<QuarterLayout> layouts;
};

Batch discrete_batch(std::uint64_t seed, std::size_t c, std::size_t n, double spacing, double rho, int count,
                     Position position, double noise) {
    Batch b{qbheat::random_commuting_pair(c, rho, seed), {}, {}};
    qbheat::SplitMix64 rng(seed * 7919 + 1);
    for (int k = 0; k < count; ++k) {
        const qbheat::FieldGenSpec spec{b.truth.a, b.truth.b, fixture::random_vector(seed * 131 + k, c),
                                        GenerationMode::discrete, {}};
        const auto f = qbheat::generate_exact_field(spec, n, n, spacing);
        std::vector<double> v(f.values().begin(), f.values().end());
        for (double& x : v) x += noise * rng.normal();
        b.fields.emplace_back(n, n, c, spacing, std::move(v));
        b.layouts.push_back(qbheat::make_layout(n, n, position));
    }
    return b;
}

Outcome identification() {
    // 32x32, C = 8, spacing 0.1, rho 4: spacing·rho = 0.4. Truth is the
    // generator's effective matrix at the 16-cell corner offset.
    const double spacing = 0.1, rho = 4.0;
    double worst_clean = 0.0, worst_noisy = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (double noise : {0.0, 0.01}) {
            const auto b = discrete_batch(seed, 8, 32, spacing, rho, 4, Position::corner_tl, noise);
            FitConfig config;
            config.ridge = noise > 0.0 ? 1e-6 : 0.0;
            const auto r = qbheat::fit_closed_form(b.fields, b.layouts, config);
            const Matrix ea = qbheat::effective_step_matrix(b.truth.a, GenerationMode::discrete, spacing, 16);
            const Matrix eb = qbheat::effective_step_matrix(b.truth.b, GenerationMode::discrete, spacing, 16);
            const double err = std::max(oracle::rel_diff(r.models.a, ea), oracle::rel_diff(r.models.b, eb));
            double& worst = noise > 0.0 ? worst_noisy : worst_clean;
            worst = std::max(worst, err);
        }
    }
    return {worst_clean <= 1e-8 && worst_noisy <= 0.05,
            fmt("20 seeds, noiseless worst %.2e, sigma 0.01 worst %.4f", worst_clean, worst_noisy)};
}

// ---- 6 -------------------------------------------------------------------

Outcome masked_pipeline() {
    const double h = 0.1;
    double worst_mse = 0.0, worst_variant = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto spec = fixture::commuting_spec(6, 1.0, seed, GenerationMode::discrete);
        const auto f = qbheat::generate_exact_field(spec, 32, 32, h);
        for (Position p : {Position::corner_tl, Position::center}) {
            const auto layout = qbheat::make_layout(32, 32, p);
            auto models = qbheat::make_models(
                qbheat::effective_step_matrix(spec.a, spec.mode, h, layout.dx_cells),
                qbheat::effective_step_matrix(spec.b, spec.mode, h, layout.dy_cells),
                static_cast<double>(layout.dx_cells) * h, static_cast<double>(layout.dy_cells) * h);
            models.exact_inverse = true;
            const auto p2 = qbheat::predict_masked(f, layout, models);
            const auto p8 = qbheat::predict_masked(f, layout, qbheat::promote(models, 8));
            worst_mse = std::max({worst_mse, p2.report.total, p8.report.total});
            for (std::size_t k = 0; k < p2.field.values().size(); ++k) {
                worst_variant = std::max(worst_variant, std::abs(p2.field.values()[k] - p8.field.values()[k]));
            }
        }
    }
    return {worst_mse <= 1e-12 && worst_variant <= 1e-12,
            fmt("worst masked MSE %.2e, variant 2 vs 8 max diff %.2e", worst_mse, worst_variant)};
}

// ---- 7 -------------------------------------------------------------------

Outcome scale_invariance() {
    // One continuous field per seed, fitted once from the center layout and
    // once from corner-TL. 32x32, spacing 0.005, rho 1.
    double worst_gap = 0.0, worst_align = 0.0;
    FitConfig config;
    config.ridge = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto spec = fixture::commuting_spec(4, 1.0, seed, GenerationMode::continuous);
        const auto f = qbheat::generate_exact_field(spec, 32, 32, 0.005);
        const auto q = qbheat::fit_closed_form({f}, {qbheat::make_layout(32, 32, Position::center)}, config);
        const auto c = qbheat::fit_closed_form({f}, {qbheat::make_layout(32, 32, Position::corner_tl)}, config);
        const double rq = qbheat::energy_ratio(q.models.a, q.models.b);
        const double rc = qbheat::energy_ratio(c.models.a, c.models.b);
        worst_gap = std::max(worst_gap, std::abs(rq - rc) / std::abs(rc));
        worst_align = std::max({worst_align, qbheat::alignment(q.models.a, c.models.a),
                                qbheat::alignment(q.models.b, c.models.b)});
    }
    return {worst_gap <= 0.05 && worst_align <= 0.05,
            fmt("10 seeds, worst energy-ratio gap %.4f, worst alignment %.4f", worst_gap, worst_align)};
}

// ---- 8 -------------------------------------------------------------------

Outcome collapse_handling() {
    int constant_cases = 0, raised = 0, flagged = 0, zero_flagged = 0, zero_cases = 0;
    qbheat::SplitMix64 rng(808);
    const FitConfig config;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t c = 2 + trial % 5, n = 8 + 4 * (trial % 3);
        const auto z = fixture::random_vector(rng.next(), c, std::pow(10.0, rng.uniform(-3.0, 3.0)));
        const std::vector<FeatureField> constant{FeatureField::filled(n, n, z, 0.1)};
        for (Position p : {Position::corner_tl, Position::center}) {
            const std::vector<QuarterLayout> layouts{qbheat::make_layout(n, n, p)};
            const auto init = qbheat::make_models(Matrix(c, c), Matrix(c, c), 0.1 * layouts[0].dx_cells,
                                                  0.1 * layouts[0].dy_cells);
            for (int method = 0; method < 2; ++method) {
                ++constant_cases;
                try {
                    if (method == 0) {
                        qbheat::fit_closed_form(constant, layouts, config);
                    } else {
                        qbheat::fit_iterative(constant, layouts, init, config);
                    }
                } catch (const qbheat::CollapseError&) {
                    ++raised;
                }
            }
            if (qbheat::detect_collapse(constant, nullptr, config).field_collapsed) ++flagged;
            const std::vector<FeatureField> live{FeatureField(n, n, c, 0.1, fixture::random_vector(rng.next(), n * n * c))};
            ++zero_cases;
            if (qbheat::detect_collapse(live, &init, config).model_collapsed) ++zero_flagged;
        }
    }
    const bool ok = raised == constant_cases && flagged == zero_cases && zero_flagged == zero_cases;
    return {ok, std::to_string(raised) + "/" + std::to_string(constant_cases) + " fits raised, " +
                    std::to_string(flagged) + "/" + std::to_string(zero_cases) + " field_collapsed, " +
                    std::to_string(zero_flagged) + "/" + std::to_string(zero_cases) + " model_collapsed"};
}

// ---- 9 -------------------------------------------------------------------

Outcome heat_reference() {
    double worst_drift = 0.0;
    int increases = 0;
    qbheat::SplitMix64 rng(909);
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t h = 12 + 5 * trial, w = 16 + 3 * trial;
        const double dx = 0.5 + 0.25 * trial;
        std::vector<double> v(h * w);
        for (double& x : v) x = rng.uniform(-1.0, 2.0);
        qbheat::ScalarHeatField u(h, w, dx, v);
        const double start = u.total();
        double previous = u.max_abs();
        for (int step = 0; step < 1000; ++step) {
            u = qbheat::heat_step(u, qbheat::max_stable_dt(dx));
            if (u.max_abs() > previous) ++increases;
            previous = u.max_abs();
        }
        worst_drift = std::max(worst_drift, std::abs(u.total() - start) / std::abs(start));
    }
    return {worst_drift <= 1e-9 && increases == 0,
            fmt("worst relative drift %.2e over 1000 steps, ", worst_drift) + std::to_string(increases) +
                " max|u| increases"};
}

// ---- 10 ------------------------------------------------------------------

Outcome format_golden() {
    qbheat::SplitMix64 rng(1010);
    int exact = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = 2 + rng.next() % 12, w = 2 + rng.next() % 12, c = 1 + rng.next() % 9;
        const bool f32 = trial % 2 == 0;
        std::vector<double> v(h * w * c);
        for (double& x : v) {
            x = rng.normal() * std::pow(10.0, rng.uniform(-6.0, 6.0));
            if (f32) x = static_cast<double>(static_cast<float>(x));
        }
        const double spacing = static_cast<double>(static_cast<float>(rng.uniform(0.01, 2.0)));
        const FeatureField f(h, w, c, spacing, std::move(v));
        const auto precision = f32 ? qbheat::FieldPrecision::f32 : qbheat::FieldPrecision::f64;
        const auto bytes = qbheat::encode_field(f, precision);
        if (qbheat::decode_field(bytes) == f && qbheat::encode_field(qbheat::decode_field(bytes), precision) == bytes) {
            ++exact;
        }
    }
    const std::size_t size = qbheat::encode_field(FeatureField(16, 16, 8, 1.0, std::vector<double>(2048, 0.5))).size();
    const auto golden = harness::golden_pipeline();
    const bool ok = exact == 100 && size == 8216 && golden.ran && golden.mismatched.empty();
    std::string detail = std::to_string(exact) + "/100 bit-exact round trips, 16x16x8 file " + std::to_string(size) +
                         " bytes, gen->fit->report ";
    if (!golden.ran) {
        detail += "did not run: " + golden.log;
    } else if (golden.mismatched.empty()) {
        detail += "matches golden";
    } else {
        for (const auto& m : golden.mismatched) detail += "differs in " + m + " ";
    }
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "matrix exponential oracle", 5.0, mat_exp_oracle},
        {2, "eigenvalue sanity", 5.0, eigen_sanity},
        {3, "exact-field consistency", 10.0, exact_field_consistency},
        {4, "projector identities", 2.0, projector_identities},
        {5, "identification oracle", 30.0, identification},
        {6, "masked-prediction pipeline", 10.0, masked_pipeline},
        {7, "scale-invariance analogue", 60.0, scale_invariance},
        {8, "collapse handling", 1.0, collapse_handling},
        {9, "heat-equation reference", 5.0, heat_reference},
        {10, "format golden tests", 10.0, format_golden},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool within = secs < c.budget_s;
        const bool pass = o.ok && within;
        if (!pass) ++failures;
        std::printf("%s  %2d  %-28s %s; %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, within ? "" : " over budget");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
