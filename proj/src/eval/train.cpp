#include "cael/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace cael {

void TrainConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("train.", 0) != 0) continue;
    auto size_value = [&] {
      const long long v = parse_int(key, value);
      if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
      return static_cast<std::size_t>(v);
    };
    if (key == "train.epochs") epochs = size_value();
    else if (key == "train.batch_size") batch_size = size_value();
    else if (key == "train.lr") learning_rate = parse_double(key, value);
    else if (key == "train.weight_decay") weight_decay = parse_double(key, value);
    else if (key == "train.lr_step") lr_step_epochs = size_value();
    else if (key == "train.lr_gamma") lr_gamma = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

void TrainConfig::export_to(KeyValues& kv) const {
  kv.set("train.epochs", std::to_string(epochs));
  kv.set("train.batch_size", std::to_string(batch_size));
  kv.set("train.lr", format_double(learning_rate));
  kv.set("train.weight_decay", format_double(weight_decay));
  kv.set("train.lr_step", std::to_string(lr_step_epochs));
  kv.set("train.lr_gamma", format_double(lr_gamma));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (lr_step_epochs == 0) throw ConfigError("train.lr_step must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
}

LabeledSet prepare_set(std::vector<Image> images, std::vector<int> labels, const CaelConfig& cfg) {
  if (images.size() != labels.size())
    throw std::invalid_argument("prepare_set: images and labels differ in length");
  LabeledSet set;
  if (cfg.branches.edge) {
    set.edges.reserve(images.size());
    for (const Image& img : images) set.edges.push_back(edge_transform(img, cfg.edge_operator));
  }
  set.images = std::move(images);
  set.labels = std::move(labels);
  return set;
}

namespace {

struct Batch {
  Tensor appearance;
  Tensor edge;
  std::vector<int> labels;
};

Batch gather(const LabeledSet& data, std::span<const std::size_t> rows) {
  std::vector<Image> imgs, edges;
  Batch b;
  for (std::size_t r : rows) {
    imgs.push_back(data.images[r]);
    if (!data.edges.empty()) edges.push_back(data.edges[r]);
    b.labels.push_back(data.labels[r]);
  }
  b.appearance = images_to_tensor(imgs);
  if (!edges.empty()) b.edge = images_to_tensor(edges);
  return b;
}

}  // namespace

std::vector<LossRecord> train_model(CaelModel& model, Adam& optimizer, const LabeledSet& data,
                                    const TrainConfig& config, std::uint64_t seed,
                                    const ProgressFn& progress) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("train_model: empty training set");
  std::vector<LossRecord> log;
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = step_decay_lr(config.learning_rate, epoch, config.lr_step_epochs, config.lr_gamma);
    optimizer.set_learning_rate(lr);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + epoch + 1);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const Batch b = gather(data, std::span(order).subspan(start, len));
      model.params().zero_grad();
      Tensor loss = cross_entropy(model.forward(b.appearance, b.edge).logits, b.labels);
      const double value = loss.item();
      backward(loss);
      optimizer.step();
      LossRecord rec{epoch, static_cast<std::size_t>(optimizer.state().step_count), value, lr};
      log.push_back(rec);
      if (progress) progress(rec);
    }
  }
  model.params().zero_grad();
  return log;
}

std::vector<std::vector<double>> predict_probabilities(const CaelModel& model, const LabeledSet& data,
                                                       std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict_probabilities: batch size must be positive");
  NoGradGuard guard;
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, data.size() - start);
    rows.resize(len);
    for (std::size_t i = 0; i < len; ++i) rows[i] = start + i;
    const Batch b = gather(data, rows);
    const Tensor p = softmax(model.forward(b.appearance, b.edge).logits);
    const std::size_t classes = p.dim(1);
    for (std::size_t i = 0; i < len; ++i)
      out.emplace_back(p.data().begin() + i * classes, p.data().begin() + (i + 1) * classes);
  }
  return out;
}

std::vector<double> fake_scores(const std::vector<std::vector<double>>& probs) {
  std::vector<double> s;
  s.reserve(probs.size());
  for (const auto& p : probs) s.push_back(p.size() == 2 ? p[1] : 1.0 - p[0]);
  return s;
}

std::vector<int> argmax_predictions(const std::vector<std::vector<double>>& probs) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (const auto& p : probs)
    out.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  return out;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "epoch,step,loss,lr\n";
  char buf[128];
  for (const LossRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", r.epoch, r.step, r.loss, r.lr);
    out << buf;
  }
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace cael
