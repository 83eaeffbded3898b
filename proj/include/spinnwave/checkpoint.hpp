#pragma once

#include <filesystem>
#include <string>

#include "spinnwave/network.hpp"

namespace spinnwave {

inline constexpr int kCheckpointFormatVersion = 1;

/// Checkpoint layout: 8-byte magic "SPWNCKPT", u64 little-endian header
/// length, JSON header {format_version, depth, widths, rng_seed, n_params,
/// layout}, then n_params float64 little-endian values, layer by layer with
/// A_l row-major followed by b_l.
std::string encode_checkpoint(const Mlp& params);
Mlp decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Mlp& params);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace spinnwave
