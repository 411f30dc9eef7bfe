#pragma once

// Binary network checkpoints.
//
// Layout (all integers little-endian):
//   char[4]  magic "LDNN"
//   u32      version (1)
//   u32      input_dim
//   u32      hidden layer count, then u32 width per hidden layer
//   u32      head count, then u32 size per head
//   u8       value_head flag
//   f64[]    for each layer in order: weight (out x in, row-major), then bias
//            as IEEE-754 binary64 little-endian

#include <filesystem>

#include "lanedef/policy_net.hpp"

namespace lanedef {

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace lanedef
