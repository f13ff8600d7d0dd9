#pragma once

// Evaluation protocols over a labelled corpus and their report files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cael/corruption.hpp"
#include "cael/dataset.hpp"
#include "cael/train.hpp"

namespace cael {

enum class Protocol { cross_generator, cross_forgery, level, robustness, heldout };
std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view s);

struct EvalSettings {
  Protocol protocol = Protocol::heldout;
  LabelLevel level = LabelLevel::forgery;
  std::vector<std::uint64_t> seeds{1};
  std::size_t max_train = 0;  // per-cell cap on training images, 0 = all

  // Keys: eval.protocol, eval.level, eval.seeds (comma list), eval.max_train.
  void apply(const KeyValues& kv);
  void export_to(KeyValues& kv) const;
};

// Decision threshold on the fake probability for binary cells.
inline constexpr double kDecisionThreshold = 0.5;

struct CellResult {
  std::string train;  // training group, or "model" for a supplied model
  std::string test;
  std::uint64_t seed = 0;
  bool present = true;  // false when a required family is missing
  std::size_t n = 0;
  double acc = 0.0;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RobustnessRow {
  CorruptionKind kind = CorruptionKind::saturation;
  int level = 0;
  std::string method;
  std::uint64_t seed = 0;
  double auc = 0.0;
};

struct EvalReport {
  std::string protocol;
  std::string fingerprint;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> runs;  // one per (cell, seed)
  std::vector<RobustnessRow> robustness;

  // Per-cell means over seeds, in first-appearance order.
  std::vector<CellResult> cells() const;
};

// FNV-1a 64-bit digest of text, as 16 hex digits.
std::string fingerprint(std::string_view text);

// Loads a manifest and every image it lists.
Corpus load_corpus(const std::filesystem::path& manifest);

using CellProgress = std::function<void(const std::string&)>;

// Trains a fresh model per cell and seed unless `model` is given, in which
// case every cell is evaluated with it (the heldout and robustness
// protocols accept a model).
EvalReport run_protocol(const Corpus& corpus, const EvalSettings& settings, const CaelConfig& model_cfg,
                        const TrainConfig& train_cfg, const std::string& config_fingerprint,
                        const CaelModel* model = nullptr, const CellProgress& progress = {});

// Scores a trained binary model on labelled examples.
CellResult evaluate_binary(const CaelModel& model, const LabeledSet& data);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_report_jsonl(const std::filesystem::path& path, const EvalReport& report);
void write_robustness_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace cael
