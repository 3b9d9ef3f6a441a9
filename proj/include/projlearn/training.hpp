#pragma once

#include "projlearn/architectures.hpp"
#include "projlearn/projection.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace projlearn {

/// Trains one model on the training rows of `indices`. Both standardizers
/// are fit on those rows only. Throws NumericalError (with epoch and batch)
/// when the loss stops being finite.
TrainedModel train(const ProjectionPair& pair, const SplitIndices& indices, const TrainingConfig& cfg);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// `epoch,loss,<component>...` with a header line.
void write_training_log(const TrainedModel& model, const std::filesystem::path& path);

struct EnsembleMember {
    TrainedModel model;
    SplitIndices split;
    double train_seconds = 0.0;
};

/// Run k uses seed cfg.seed + k for both its split and its initialization.
std::vector<EnsembleMember> train_ensemble(const ProjectionPair& pair, const TrainingConfig& cfg, int runs = 10,
                                           double test_fraction = 0.2);

}  // namespace projlearn
