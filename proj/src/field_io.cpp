// SPDX-License-Identifier: Apache-2.0
#include "yamabe/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "yamabe/errors.hpp"

namespace yamabe {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint64_t take(int width) {
        if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
            throw InvalidArgument("YAMF: truncated file");
        }
        std::uint64_t v = 0;
        for (int b = 0; b < width; ++b) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(b)]) << (8 * b);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    double f64() { return std::bit_cast<double>(take(8)); }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_yamf(const ScalarField& field) {
    const GridSpec& g = field.grid();
    std::vector<std::uint8_t> out;
    out.reserve(24 + 8 * field.size());
    for (char c : {'Y', 'A', 'M', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, kYamfVersion);
    put_u32(out, static_cast<std::uint32_t>(g.dim()));
    put_u32(out, static_cast<std::uint32_t>(g.points_per_axis()));
    put_f64(out, g.period());
    for (double v : field.values()) put_f64(out, v);
    return out;
}

ScalarField decode_yamf(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "YAMF", 4) != 0) {
        throw InvalidArgument("YAMF: bad magic");
    }
    Reader r(bytes);
    r.take(4);
    const std::uint32_t version = r.u32();
    if (version != kYamfVersion) {
        throw InvalidArgument("YAMF: unsupported version " + std::to_string(version));
    }
    const auto n = static_cast<int>(r.u32());
    const auto m = static_cast<int>(r.u32());
    const double L = r.f64();
    GridSpec grid(n, m, L);
    if (r.remaining() != 8 * grid.size()) {
        throw InvalidArgument("YAMF: payload length does not match m^n values");
    }
    std::vector<double> values(grid.size());
    for (double& v : values) v = r.f64();
    return ScalarField(grid, std::move(values));
}

void write_yamf(const std::filesystem::path& path, const ScalarField& field) {
    const auto bytes = encode_yamf(field);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write failed: " + path.string());
}

ScalarField read_yamf(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return decode_yamf(bytes);
}

}  // namespace yamabe
