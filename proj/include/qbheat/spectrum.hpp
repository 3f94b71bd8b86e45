#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "qbheat/field.hpp"
#include "qbheat/linalg.hpp"

namespace qbheat {

struct SpectrumReport {
    std::vector<Complex> eigenvalues;  ///< descending magnitude
    std::vector<double> magnitudes;
    std::vector<double> normalized;    ///< magnitudes / Σ magnitudes (all zero when the energy is zero)
    double energy = 0.0;
    std::string matrix_tag;
};

/// E(M) = Σ |λ_k|.
double energy(const Matrix& m, const NumericSettings& settings = default_settings());

/// E(A) / E(B). Throws DegenerateDataError when E(B) = 0.
double energy_ratio(const Matrix& a, const Matrix& b, const NumericSettings& settings = default_settings());

SpectrumReport normalized_spectrum(const Matrix& m, std::string tag = {},
                                   const NumericSettings& settings = default_settings());

/// max_k |normalized₁[k] − normalized₂[k]| over the sorted sequences.
double alignment(const SpectrumReport& first, const SpectrumReport& second);
double alignment(const Matrix& first, const Matrix& second, const NumericSettings& settings = default_settings());

/// CSV with header "index,re,im,magnitude,normalized_magnitude".
void write_spectrum_csv(std::ostream& out, const SpectrumReport& report);

struct CorrelationReport {
    double score = 0.0;
    std::size_t excluded_positions = 0;
    std::size_t n_positions = 0;
};

/// Mean |Pearson correlation| over the channel vectors of every ordered pair
/// of distinct positions. Positions whose channel vector has zero variance
/// are left out and counted.
CorrelationReport spatial_correlation(const FeatureField& field);

/// Positions spatial_correlation would leave out.
std::size_t degenerate_positions(const FeatureField& field);

}  // namespace qbheat
