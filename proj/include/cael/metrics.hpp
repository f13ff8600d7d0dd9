#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cael {

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mann-Whitney AUC: P(fake score > real score), ties count 0.5.
// labels are 1 for fake, 0 for real. Throws UndefinedMetric unless both occur.
double auc(std::span<const double> scores, std::span<const int> labels);

struct ClassMetrics {
  double acc = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro, mean of per-class F1
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
};

// A class that is never predicted contributes precision 0 (and F1 0).
ClassMetrics classification_metrics(std::span<const int> preds, std::span<const int> labels,
                                    std::size_t n_classes);

}  // namespace cael
