#pragma once

// Mini-batch training and batched inference for CaelModel.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cael/model.hpp"
#include "cael/optim.hpp"

namespace cael {

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  std::size_t lr_step_epochs = 15;
  double lr_gamma = 0.1;

  // Keys: train.epochs, train.batch_size, train.lr, train.weight_decay,
  // train.lr_step, train.lr_gamma. Unknown "train.*" keys are rejected.
  void apply(const KeyValues& kv);
  void export_to(KeyValues& kv) const;
  void validate() const;
};

// Inputs with their edge maps computed once up front.
struct LabeledSet {
  std::vector<Image> images;
  std::vector<Image> edges;  // empty when the edge branch is off
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

LabeledSet prepare_set(std::vector<Image> images, std::vector<int> labels, const CaelConfig& cfg);

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global optimiser step, starting at 1
  double loss = 0.0;
  double lr = 0.0;
};

using ProgressFn = std::function<void(const LossRecord&)>;

// Shuffles with a stream derived from (seed, epoch), applies the step-decay
// schedule at the start of each epoch and returns one record per step.
std::vector<LossRecord> train_model(CaelModel& model, Adam& optimizer, const LabeledSet& data,
                                    const TrainConfig& config, std::uint64_t seed,
                                    const ProgressFn& progress = {});

// Softmax class probabilities per example, evaluated without recording.
std::vector<std::vector<double>> predict_probabilities(const CaelModel& model, const LabeledSet& data,
                                                       std::size_t batch_size = 32);

// Probability of class 1 (binary) or of "not real" (multi-class).
std::vector<double> fake_scores(const std::vector<std::vector<double>>& probs);
std::vector<int> argmax_predictions(const std::vector<std::vector<double>>& probs);

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> log);

}  // namespace cael
