#include "cael/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cael {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw std::invalid_argument("auc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum over tie groups: each positive beats every earlier negative and ties
  // with negatives in its own group.
  double wins = 0.0;
  std::size_t negatives_below = 0, positives = 0, negatives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    wins += static_cast<double>(pos) * (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(neg));
    negatives_below += neg;
    positives += pos;
    negatives += neg;
    i = j;
  }
  if (positives == 0 || negatives == 0)
    throw UndefinedMetric("auc is undefined unless both classes are present");
  return wins / (static_cast<double>(positives) * static_cast<double>(negatives));
}

ClassMetrics classification_metrics(std::span<const int> preds, std::span<const int> labels,
                                    std::size_t n_classes) {
  if (preds.empty()) throw std::invalid_argument("classification_metrics: empty input");
  if (preds.size() != labels.size())
    throw std::invalid_argument("classification_metrics: predictions and labels differ in length");
  if (n_classes == 0) throw std::invalid_argument("classification_metrics: no classes");
  ClassMetrics m;
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (int v : {preds[i], labels[i]})
      if (v < 0 || static_cast<std::size_t>(v) >= n_classes)
        throw std::out_of_range("classification_metrics: class id " + std::to_string(v) + " out of range");
    ++m.confusion[labels[i]][preds[i]];
    if (preds[i] == labels[i]) ++correct;
  }
  m.acc = static_cast<double>(correct) / static_cast<double>(preds.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < n_classes; ++k) {
      predicted += m.confusion[k][c];
      actual += m.confusion[c][k];
    }
    const double tp = static_cast<double>(m.confusion[c][c]);
    const double p = predicted ? tp / static_cast<double>(predicted) : 0.0;
    const double r = actual ? tp / static_cast<double>(actual) : 0.0;
    m.precision += p;
    m.recall += r;
    m.f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  const double k = static_cast<double>(n_classes);
  m.precision /= k;
  m.recall /= k;
  m.f1 /= k;
  return m;
}

}  // namespace cael
