#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qbheat/field.hpp"

namespace qbheat {

/// 8-bit gray (1 channel) or RGB (3 channels), interleaved row-major.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> values;

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
        return values[(row * width + col) * channels + ch];
    }
};

/// Binary netpbm P5 (gray) or P6 (RGB) with maxval 255; '#' comments are
/// allowed wherever the header permits whitespace.
Image read_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_image(const Image& image);

struct ExtractorConfig {
    std::uint64_t seed = 0;
    std::size_t out_channels = 8;
    std::size_t kernel = 3;
    std::size_t stride = 4;
};

/// One valid-padding convolution with SplitMix64-seeded weights
/// U(−s, s), s = 1/√(kernel²·in_channels), stride subsampling and ReLU.
/// Pixels are scaled to [0, 1]; the output spacing is 1.
FeatureField extract_features(const Image& image, const ExtractorConfig& config);

}  // namespace qbheat
