#pragma once

// Versioned little-endian model file:
//
//   magic        8 bytes  "AMOCLSTK"
//   version      u32      kModelFormatVersion
//   dims         4 x u32  vocab_size, width, n_classes, depth
//   active       u32 count, then count x u32 original layer indices
//   tensors      u32 count, then per tensor: u32 rows, u32 cols, rows*cols x f64
//   freeze mask  u32 bit count, then ceil(count/8) bytes, bit i = tensor i frozen
//
// Integers and IEEE-754 doubles are written byte-by-byte in little-endian
// order regardless of host endianness.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "amoc/netcore.hpp"

namespace amoc {

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize(const LayerStackModel& model);
// Throws FormatError on bad magic, version mismatch, truncation, trailing
// bytes or inconsistent shapes.
LayerStackModel deserialize(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const LayerStackModel& model);
LayerStackModel load_model(const std::filesystem::path& path);

}  // namespace amoc
