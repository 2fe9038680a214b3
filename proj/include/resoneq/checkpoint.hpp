#pragma once

#include "resoneq/models.hpp"

#include <string>

namespace resoneq {

// Versioned binary container: magic, JSON header (architecture, training
// seed, tensor manifest), then raw little-endian float64 tensor data in
// manifest order. Save/load round-trips bit-exactly.
void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);

// Human-readable architecture config (JSON), used by --spec files and
// embedded in checkpoints.
std::string arch_spec_to_json(const ArchSpec& arch);
ArchSpec arch_spec_from_json(const std::string& text);
ArchSpec load_arch_spec_file(const std::string& path);

} // namespace resoneq
