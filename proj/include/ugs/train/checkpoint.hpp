#pragma once

#include <filesystem>

#include "ugs/train/trainer.hpp"

namespace ugs {

/// Versioned binary container: magic + version, a JSON header (configs,
/// camera parameters, layer widths, counters) and named binary sections
/// holding every tensor as raw little-endian doubles. load(save(x))
/// reproduces parameters, optimizer moments, the RNG seed, the frozen flag
/// and the metric log bit-exactly, so resumed training continues
/// step-for-step. Writes are atomic (temp file + rename).
void save_checkpoint(const Session& session,
                     const std::filesystem::path& path);

Session load_checkpoint(const std::filesystem::path& path);

}  // namespace ugs
