// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "yamabe/grid.hpp"

namespace yamabe {

/// YAMF field files: "YAMF", u32 version, u32 n, u32 m, f64 L, then m^n f64
/// values in row-major order. All numbers little-endian, no padding.
inline constexpr std::uint32_t kYamfVersion = 1;

std::vector<std::uint8_t> encode_yamf(const ScalarField& field);
ScalarField decode_yamf(const std::vector<std::uint8_t>& bytes);

void write_yamf(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_yamf(const std::filesystem::path& path);

}  // namespace yamabe
