#pragma once

#include <rotordiag/nn/model.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rotordiag::nn {

// Binary layout, all integers little-endian:
//   "RDGN"  u16 version (=1)  u16 layer count
//   per layer: u8 kind tag, then u32 fields
//     1 Conv     kernel_h kernel_w in_channels out_channels stride
//     2 ReLU     -
//     3 MaxPool  size
//     4 AvgPool  size
//     5 Flatten  -
//     6 Dense    in_dim out_dim
//     7 Softmax  -
//   then for each parametric layer in order: weights, bias as f32.

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelSpec spec;
    ModelParams params;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelSpec& spec, const ModelParams& params);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelSpec& spec, const ModelParams& params, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace rotordiag::nn
