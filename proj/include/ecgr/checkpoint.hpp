#pragma once

#include <filesystem>
#include <string>

#include "ecgr/cyclegan.hpp"

namespace ecgr {

/**
 * Single-file checkpoint. A plain-text header
 *
 *   ECGR-CHECKPOINT 1
 *   key=value lines (architectures, training config, iteration, Adam steps)
 *   block=<name> <count>   one line per data block, in data order
 *   end_header
 *
 * is followed by the blocks as little-endian float64. Order: the parameter
 * blocks of GX2C, then its Adam first and second moments; the same for GC2X,
 * DC and DX.
 */
std::string serialize_checkpoint(const CycleGanModel& model, const TrainConfig& cfg);

struct LoadedCheckpoint {
  CycleGanModel model;
  TrainConfig config;
};

// Throws InputError on a malformed or inconsistent file.
LoadedCheckpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint");

// Writes through a temporary file and renames, so an existing checkpoint is
// never left half-written.
void save_checkpoint(const std::filesystem::path& path, const CycleGanModel& model, const TrainConfig& cfg);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ecgr
