#pragma once

#include <filesystem>
#include <iosfwd>

#include "pamrecon/nn/model.hpp"

namespace pam::nn {

/// Checkpoint layout, all integers little-endian:
///   "PAMCKPT1" | u32 version | u32 architecture | i32 depth | i32 base_filters |
///   i32 dense_layers | f64 bn_momentum | f64 bn_epsilon | u32 record count |
///   records: u32 name length, name bytes, u32 dim count, u32 dims..., f32 values
inline constexpr char kCheckpointMagic[] = "PAMCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Model<float>& model);
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model);

/// Rebuilds the model from the stored config and loads every record by
/// name. Throws FormatError on bad magic, truncation, or a record set that
/// does not match the architecture.
Model<float> read_checkpoint(std::istream& in);
Model<float> load_checkpoint(const std::filesystem::path& path);

} // namespace pam::nn
