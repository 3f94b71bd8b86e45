#include "qbheat/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "qbheat/error.hpp"

namespace qbheat {

namespace {

constexpr std::uint8_t kMagic[4] = {'Q', 'B', 'H', 'F'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void put_scalar(std::vector<std::uint8_t>& out, double v, FieldPrecision precision) {
    if (precision == FieldPrecision::f64) {
        put_u64(out, std::bit_cast<std::uint64_t>(v));
        return;
    }
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw DataError("write_field: value " + std::to_string(v) + " does not fit in f32");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::size_t scalar_bytes(FieldPrecision precision) { return precision == FieldPrecision::f64 ? 8 : 4; }

}  // namespace

std::size_t encoded_field_size(std::size_t height, std::size_t width, std::size_t channels, FieldPrecision precision) {
    const std::size_t s = scalar_bytes(precision);
    return 8 + 12 + s + height * width * channels * s;
}

std::vector<std::uint8_t> encode_field(const FeatureField& field, FieldPrecision precision) {
    constexpr auto u32_max = std::numeric_limits<std::uint32_t>::max();
    if (field.height() > u32_max || field.width() > u32_max || field.channels() > u32_max) {
        throw FormatError(FormatErrorKind::dimension_overflow, "write_field: dimensions exceed u32");
    }
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(encoded_field_size(field.height(), field.width(), field.channels(), precision));
    put_u32(out, static_cast<std::uint32_t>(precision));
    put_u32(out, static_cast<std::uint32_t>(field.height()));
    put_u32(out, static_cast<std::uint32_t>(field.width()));
    put_u32(out, static_cast<std::uint32_t>(field.channels()));
    put_scalar(out, field.spacing(), precision);
    for (double v : field.values()) put_scalar(out, v, precision);
    return out;
}

FeatureField decode_field(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw FormatError(FormatErrorKind::truncated, "read_field: file shorter than the header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(FormatErrorKind::bad_magic, "read_field: bad magic, expected \"QBHF\"");
    }
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != 1 && version != 2) {
        throw FormatError(FormatErrorKind::unsupported_version,
                          "read_field: unsupported version " + std::to_string(version));
    }
    const auto precision = static_cast<FieldPrecision>(version);
    const std::size_t s = scalar_bytes(precision);
    if (bytes.size() < 20 + s) throw FormatError(FormatErrorKind::truncated, "read_field: truncated header");
    const std::uint64_t h = get_u32(bytes.data() + 8);
    const std::uint64_t w = get_u32(bytes.data() + 12);
    const std::uint64_t c = get_u32(bytes.data() + 16);
    if (h < 2 || w < 2 || c < 1) {
        throw FormatError(FormatErrorKind::invalid_header, "read_field: invalid dimensions " + std::to_string(h) + "x" +
                                                               std::to_string(w) + "x" + std::to_string(c));
    }
    // h, w, c < 2^32 each; the product can still exceed size_t / memory.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / s;
    if (h > limit / w || h * w > limit / c) {
        throw FormatError(FormatErrorKind::dimension_overflow, "read_field: H*W*C overflows");
    }
    const std::uint64_t count = h * w * c;
    const std::uint64_t payload = count * s;
    const std::uint64_t header = 20 + s;
    if (bytes.size() - header < payload) {
        throw FormatError(FormatErrorKind::truncated, "read_field: payload truncated, expected " +
                                                          std::to_string(payload) + " bytes, found " +
                                                          std::to_string(bytes.size() - header));
    }
    if (bytes.size() - header != payload) {
        throw FormatError(FormatErrorKind::invalid_header, "read_field: trailing bytes after payload");
    }

    auto get_scalar = [&](std::size_t offset) -> double {
        if (precision == FieldPrecision::f64) return std::bit_cast<double>(get_u64(bytes.data() + offset));
        return static_cast<double>(std::bit_cast<float>(get_u32(bytes.data() + offset)));
    };
    const double spacing = get_scalar(20);
    std::vector<double> values(count);
    for (std::uint64_t i = 0; i < count; ++i) values[i] = get_scalar(header + i * s);
    return FeatureField(h, w, c, spacing, std::move(values));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrorKind::io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrorKind::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(FormatErrorKind::io, "write failed for " + path.string());
}

void write_field(const std::filesystem::path& path, const FeatureField& field, FieldPrecision precision) {
    write_file_bytes(path, encode_field(field, precision));
}

FeatureField read_field(const std::filesystem::path& path) {
    try {
        return decode_field(read_file_bytes(path));
    } catch (const FormatError& e) {
        throw FormatError(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace qbheat
