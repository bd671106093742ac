#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowood/flow_model.hpp"

namespace flowood {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kFlagNormalized = 1u << 0;
inline constexpr std::uint32_t kFlagRealNvp = 1u << 1;

// Little-endian model file:
//   "FLOD" | version u32 | D u32 | blocks u32 | hidden u32 | flags u32
// then per block: ActNorm log_scale[D], bias[D] (f32); permutation (D x u32);
// strictly-lower L entries row-major (f32); upper U entries row-major with
// each diagonal entry as (sign i8, log-magnitude f32); coupling hidden
// weight, hidden bias, output weight, output bias (f32, row-major).
// RealNVP-mode files contain only the coupling part of each block.
std::vector<std::byte> serialize(const FlowModel& model);
FlowModel deserialize(std::span<const std::byte> bytes);

void save_model(const std::filesystem::path& path, const FlowModel& model);
FlowModel load_model(const std::filesystem::path& path);

}  // namespace flowood
