#include "qbheat/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "qbheat/error.hpp"
#include "qbheat/format.hpp"

namespace qbheat {

double energy(const Matrix& m, const NumericSettings& settings) {
    const auto eig = eigen_spectrum(m, false, settings);
    double sum = 0.0;
    for (const auto& l : eig.eigenvalues) sum += std::abs(l);
    return sum;
}

double energy_ratio(const Matrix& a, const Matrix& b, const NumericSettings& settings) {
    const double eb = energy(b, settings);
    if (eb == 0.0) throw DegenerateDataError("energy_ratio: E(B) is zero");
    return energy(a, settings) / eb;
}

SpectrumReport normalized_spectrum(const Matrix& m, std::string tag, const NumericSettings& settings) {
    SpectrumReport r;
    r.matrix_tag = std::move(tag);
    r.eigenvalues = eigen_spectrum(m, false, settings).eigenvalues;
    r.magnitudes.reserve(r.eigenvalues.size());
    for (const auto& l : r.eigenvalues) r.magnitudes.push_back(std::abs(l));
    // Sorting by magnitude is already done; re-sort the magnitudes alone so
    // ties broken by phase cannot leave them out of order.
    std::sort(r.magnitudes.begin(), r.magnitudes.end(), std::greater<>());
    for (double mag : r.magnitudes) r.energy += mag;
    r.normalized.resize(r.magnitudes.size(), 0.0);
    if (r.energy > 0.0) {
        for (std::size_t k = 0; k < r.magnitudes.size(); ++k) r.normalized[k] = r.magnitudes[k] / r.energy;
    }
    return r;
}

double alignment(const SpectrumReport& first, const SpectrumReport& second) {
    if (first.normalized.size() != second.normalized.size()) {
        throw ShapeError("alignment: spectra have " + std::to_string(first.normalized.size()) + " and " +
                         std::to_string(second.normalized.size()) + " entries");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < first.normalized.size(); ++k) {
        worst = std::max(worst, std::abs(first.normalized[k] - second.normalized[k]));
    }
    return worst;
}

double alignment(const Matrix& first, const Matrix& second, const NumericSettings& settings) {
    if (!first.is_square() || !second.is_square() || first.rows() != second.rows()) {
        throw ShapeError("alignment: matrices must be square with equal dimensions");
    }
    return alignment(normalized_spectrum(first, {}, settings), normalized_spectrum(second, {}, settings));
}

void write_spectrum_csv(std::ostream& out, const SpectrumReport& report) {
    out << "index,re,im,magnitude,normalized_magnitude\n";
    for (std::size_t k = 0; k < report.eigenvalues.size(); ++k) {
        out << k << ',' << format_double(report.eigenvalues[k].real()) << ','
            << format_double(report.eigenvalues[k].imag()) << ',' << format_double(report.magnitudes[k]) << ','
            << format_double(report.normalized[k]) << '\n';
    }
}

namespace {

// Zero-mean, unit-norm copy of a channel vector; empty when its variance is
// zero up to rounding of the mean.
std::vector<double> standardize_cell(std::span<const double> v) {
    const std::size_t c = v.size();
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(c);
    std::vector<double> centered(c);
    double norm2 = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        centered[k] = v[k] - mean;
        norm2 += centered[k] * centered[k];
        scale = std::max(scale, std::abs(v[k]));
    }
    if (norm2 <= 0.0 || std::sqrt(norm2) <= 1e-12 * scale * std::sqrt(static_cast<double>(c))) return {};
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& e : centered) e *= inv;
    return centered;
}

}  // namespace

std::size_t degenerate_positions(const FeatureField& field) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < field.height(); ++i)
        for (std::size_t j = 0; j < field.width(); ++j)
            if (standardize_cell(field.cell(i, j)).empty()) ++count;
    return count;
}

CorrelationReport spatial_correlation(const FeatureField& field) {
    const std::size_t c = field.channels();
    const std::size_t n = field.height() * field.width();
    if (c < 2) throw ShapeError("spatial_correlation: need at least 2 channels");

    // Rows of unit-norm, zero-mean channel vectors; Pearson is their dot product.
    std::vector<std::vector<double>> standardized;
    standardized.reserve(n);
    CorrelationReport report;
    report.n_positions = n;
    for (std::size_t i = 0; i < field.height(); ++i)
        for (std::size_t j = 0; j < field.width(); ++j) {
            auto centered = standardize_cell(field.cell(i, j));
            if (centered.empty()) {
                ++report.excluded_positions;
                continue;
            }
            standardized.push_back(std::move(centered));
        }
    const std::size_t m = standardized.size();
    if (m < 2) {
        throw DegenerateDataError("spatial_correlation: " + std::to_string(report.excluded_positions) + " of " +
                                  std::to_string(n) + " positions have zero channel variance");
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            double dot = 0.0;
            for (std::size_t k = 0; k < c; ++k) dot += standardized[a][k] * standardized[b][k];
            sum += std::min(1.0, std::abs(dot));
        }
    // Symmetric matrix: the ordered-pair mean equals the unordered one.
    report.score = sum / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
    return report;
}

}  // namespace qbheat
