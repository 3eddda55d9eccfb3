#pragma once

#include "c2f/config.hpp"
#include "c2f/score.hpp"

#include <memory>
#include <string>

namespace c2f {

// Checkpoints are versioned text files carrying the schedule fingerprint, the
// model type/shape and the flat parameter vector in round-trip precision.
// Loading verifies the fingerprint against the active config and fails hard,
// listing the differing keys.

void save_checkpoint(const std::string& path, const LinearScoreModel& model,
                     const ExperimentConfig& cfg);
void save_checkpoint(const std::string& path, const MlpScoreModel& model,
                     const ExperimentConfig& cfg);

std::shared_ptr<ScoreModel> load_checkpoint(const std::string& path,
                                            const ExperimentConfig& cfg,
                                            const DiffusionSchedule& schedule);

}  // namespace c2f
