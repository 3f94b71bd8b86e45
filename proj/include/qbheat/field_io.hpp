#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qbheat/field.hpp"

namespace qbheat {

/// QBHF field files, little-endian:
///   "QBHF" | u32 version | u32 H | u32 W | u32 C | spacing | H·W·C values
/// Values run row-major with the channel innermost. Version 1 stores
/// spacing and values as f32 (the interchange format). Version 2 has the
/// identical layout with f64 scalars, for pipelines that must round-trip
/// double precision.
enum class FieldPrecision : std::uint32_t { f32 = 1, f64 = 2 };

inline constexpr std::size_t kFieldHeaderBytes = 20;

std::size_t encoded_field_size(std::size_t height, std::size_t width, std::size_t channels,
                               FieldPrecision precision = FieldPrecision::f32);

std::vector<std::uint8_t> encode_field(const FeatureField& field, FieldPrecision precision = FieldPrecision::f32);
FeatureField decode_field(std::span<const std::uint8_t> bytes);

void write_field(const std::filesystem::path& path, const FeatureField& field,
                 FieldPrecision precision = FieldPrecision::f32);
FeatureField read_field(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace qbheat
