#include "qbheat/extractor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "qbheat/error.hpp"
#include "qbheat/field_io.hpp"
#include "qbheat/rng.hpp"

namespace qbheat {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(ch)) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size()) throw ImageError(std::string("read_image: truncated header before ") + what);
        if (!std::isdigit(bytes_[pos_])) throw ImageError(std::string("read_image: expected a number for ") + what);
        std::size_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (v > (1u << 30)) throw ImageError(std::string("read_image: ") + what + " is too large");
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from the raster.
    void end_of_header() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw ImageError("read_image: missing whitespace after maxval");
        }
        ++pos_;
    }

    std::size_t position() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Image read_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw ImageError("read_image: bad magic, expected binary PGM (P5) or PPM (P6)");
    }
    Image img;
    img.channels = bytes[1] == '5' ? 1 : 3;
    HeaderReader reader(bytes);
    reader.advance(2);
    img.width = reader.number("width");
    img.height = reader.number("height");
    const std::size_t maxval = reader.number("maxval");
    if (img.width == 0 || img.height == 0) throw ImageError("read_image: zero image dimension");
    if (maxval != 255) throw ImageError("read_image: maxval " + std::to_string(maxval) + " is not supported (need 255)");
    reader.end_of_header();
    const std::size_t need = img.width * img.height * img.channels;
    const std::size_t have = bytes.size() - reader.position();
    if (have < need) {
        throw ImageError("read_image: truncated raster, expected " + std::to_string(need) + " bytes, found " +
                         std::to_string(have));
    }
    img.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.position()),
                      bytes.begin() + static_cast<std::ptrdiff_t>(reader.position() + need));
    return img;
}

Image read_image(const std::filesystem::path& path) {
    try {
        return read_image(read_file_bytes(path));
    } catch (const ImageError& e) {
        throw ImageError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_image(const Image& image) {
    if (image.channels != 1 && image.channels != 3) throw ImageError("encode_image: channels must be 1 or 3");
    if (image.values.size() != image.height * image.width * image.channels) {
        throw ImageError("encode_image: value count does not match dimensions");
    }
    const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(image.width) +
                               " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.values.begin(), image.values.end());
    return out;
}

FeatureField extract_features(const Image& image, const ExtractorConfig& config) {
    if (config.out_channels < 1) throw DataError("extract_features: out_channels must be at least 1");
    if (config.kernel < 1 || config.kernel % 2 == 0) throw DataError("extract_features: kernel size must be odd");
    if (config.stride < 1) throw DataError("extract_features: stride must be at least 1");
    if (image.channels != 1 && image.channels != 3) throw ImageError("extract_features: image must be gray or RGB");
    if (image.height < config.kernel || image.width < config.kernel) {
        throw ImageError("extract_features: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " is smaller than the kernel");
    }
    const std::size_t valid_h = image.height - config.kernel + 1;
    const std::size_t valid_w = image.width - config.kernel + 1;
    const std::size_t out_h = (valid_h - 1) / config.stride + 1;
    const std::size_t out_w = (valid_w - 1) / config.stride + 1;
    if (out_h < 2 || out_w < 2) {
        throw ImageError("extract_features: image too small, output grid would be " + std::to_string(out_h) + "x" +
                         std::to_string(out_w));
    }

    const std::size_t k = config.kernel;
    const std::size_t in_c = image.channels;
    const std::size_t c = config.out_channels;
    // Weight order: output channel, input channel, kernel row, kernel column.
    SplitMix64 rng(config.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(k * k * in_c));
    std::vector<double> weights(c * in_c * k * k);
    for (double& w : weights) w = rng.uniform(-bound, bound);

    std::vector<double> values(out_h * out_w * c);
    for (std::size_t i = 0; i < out_h; ++i)
        for (std::size_t j = 0; j < out_w; ++j)
            for (std::size_t o = 0; o < c; ++o) {
                double acc = 0.0;
                for (std::size_t ic = 0; ic < in_c; ++ic)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const double px = image.at(i * config.stride + ky, j * config.stride + kx, ic) / 255.0;
                            acc += weights[((o * in_c + ic) * k + ky) * k + kx] * px;
                        }
                values[(i * out_w + j) * c + o] = std::max(0.0, acc);
            }
    return FeatureField(out_h, out_w, c, 1.0, std::move(values));
}

}  // namespace qbheat
