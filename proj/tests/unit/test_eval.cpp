#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cael/metrics.hpp"
#include "cael/probe.hpp"
#include "cael/protocol.hpp"
#include "roc_oracle.hpp"

using namespace cael;
using cael::testing::trapezoid_auc;

namespace {

CaelConfig tiny_model() {
  CaelConfig c;
  c.K = 1;
  c.S = 1;
  c.L = 1;
  c.E = 1;
  c.N = 1;
  c.heads = 2;
  c.dim = 8;
  c.mlp_ratio = 2.0;
  c.fine_channels = 8;
  c.coarse_channels = 4;
  c.image_size = 32;
  return c;
}

TrainConfig tiny_train() {
  TrainConfig t;
  t.epochs = 1;
  t.batch_size = 8;
  t.learning_rate = 1e-3;
  return t;
}

Corpus tiny_corpus() {
  CorpusSpec s;
  s.seed = 4;
  s.image_size = 32;
  s.count(FamilyKind::smooth_real) = 20;
  for (FamilyKind f : kAllFamilies)
    if (f != FamilyKind::smooth_real) s.count(f) = 10;
  s.ratios = {0.5, 0.0, 0.5};
  return generate_corpus(s);
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
  CHECK(auc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, std::vector<int>{1, 1, 0, 0}) == 0.75);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetric);
  CHECK_THROWS(auc(std::vector<double>{0.1}, std::vector<int>{1, 0}));
}

TEST_CASE("auc agrees with the trapezoid oracle and its invariants") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 20) / 20.0;  // plenty of ties
      l[i] = static_cast<int>(rng() % 2);
    }
    l[0] = 0;
    l[1] = 1;
    const double a = auc(s, l);
    CHECK(std::abs(a - trapezoid_auc(s, l)) < 1e-9);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(auc(t, l) == doctest::Approx(a).epsilon(1e-15));
    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - l[i];
    CHECK(a + auc(s, flipped) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("classification metric examples") {
  const std::vector<int> y{0, 1, 0, 1};
  const ClassMetrics perfect = classification_metrics(y, y, 2);
  CHECK(perfect.acc == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  const ClassMetrics constant = classification_metrics(std::vector<int>{1, 1, 1, 1}, y, 2);
  CHECK(constant.acc == 0.5);
  CHECK(constant.recall == 0.5);

  // Confusion [[2,1,0],[0,2,0],[1,0,3]] rows true, columns predicted.
  std::vector<int> labels, preds;
  const int cm[3][3] = {{2, 1, 0}, {0, 2, 0}, {1, 0, 3}};
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      for (int k = 0; k < cm[t][p]; ++k) {
        labels.push_back(t);
        preds.push_back(p);
      }
  const ClassMetrics m = classification_metrics(preds, labels, 3);
  CHECK(m.confusion[0][1] == 1u);
  CHECK(m.confusion[2][0] == 1u);
  CHECK(m.acc == doctest::Approx(7.0 / 9.0));
  const double p0 = 2.0 / 3, p1 = 2.0 / 3, p2 = 1.0;
  const double r0 = 2.0 / 3, r1 = 1.0, r2 = 3.0 / 4;
  CHECK(m.precision == doctest::Approx((p0 + p1 + p2) / 3));
  CHECK(m.recall == doctest::Approx((r0 + r1 + r2) / 3));
  auto f = [](double p, double r) { return 2 * p * r / (p + r); };
  CHECK(m.f1 == doctest::Approx((f(p0, r0) + f(p1, r1) + f(p2, r2)) / 3));

  CHECK_THROWS_AS(classification_metrics(std::vector<int>{}, std::vector<int>{}, 2), std::invalid_argument);
  CHECK_THROWS_AS(classification_metrics(std::vector<int>{0}, std::vector<int>{3}, 2), std::out_of_range);
}

TEST_CASE("dct probe separates grid fakes") {
  CorpusSpec s;
  s.seed = 8;
  s.image_size = 32;
  s.count(FamilyKind::smooth_real) = 60;
  s.count(FamilyKind::grid_artifact_gan) = 60;
  const Corpus c = generate_corpus(s);
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (std::size_t i = 0; i < c.images.size(); ++i) {
    feats.push_back(dct_annulus_features(c.images[i]));
    labels.push_back(class_index(c.entries[i].label, LabelLevel::binary));
  }
  CHECK(feats[0].size() == 8);
  LogisticProbe probe;
  probe.fit(feats, labels);
  CHECK(auc(probe.score_all(feats), labels) > 0.95);
}

TEST_CASE("eval settings keys and fingerprint") {
  EvalSettings s;
  s.apply(KeyValues::parse("eval.protocol = cross_forgery\neval.seeds = 1,2,3\neval.level = generator"));
  CHECK(s.protocol == Protocol::cross_forgery);
  CHECK(s.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(s.level == LabelLevel::generator);
  CHECK_THROWS_AS(s.apply(KeyValues::parse("eval.nope = 1")), ConfigError);
  CHECK(fingerprint("") == "cbf29ce484222325");
  CHECK(fingerprint("a") == "af63dc4c8601ec8c");
}

TEST_CASE("cross-forgery protocol yields a 3x3 matrix") {
  const Corpus c = tiny_corpus();
  EvalSettings s;
  s.protocol = Protocol::cross_forgery;
  const EvalReport r = run_protocol(c, s, tiny_model(), tiny_train(), "fp");
  const auto cells = r.cells();
  CHECK(cells.size() == 9);
  for (const CellResult& cell : cells) {
    CHECK(cell.present);
    CHECK(cell.n > 0);
    for (double v : {cell.acc, cell.auc, cell.precision, cell.recall, cell.f1}) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK(std::count_if(cells.begin(), cells.end(), [](const CellResult& x) { return x.train == x.test; }) == 3);
}

TEST_CASE("missing family marks cells absent and the run continues") {
  CorpusSpec s;
  s.seed = 2;
  s.image_size = 32;
  s.count(FamilyKind::smooth_real) = 10;
  s.count(FamilyKind::grid_artifact_gan) = 10;
  s.ratios = {0.5, 0.0, 0.5};
  EvalSettings e;
  e.protocol = Protocol::cross_generator;
  const auto cells = run_protocol(generate_corpus(s), e, tiny_model(), tiny_train(), "fp").cells();
  CHECK(cells.size() == 16);
  for (const CellResult& c : cells) CHECK(c.present == (c.train == "gridgan" && c.test == "gridgan"));
}

TEST_CASE("report cells do not depend on manifest order") {
  Corpus c = tiny_corpus();
  EvalSettings s;
  s.protocol = Protocol::heldout;
  const auto a = run_protocol(c, s, tiny_model(), tiny_train(), "fp").cells();
  std::vector<std::size_t> perm(c.entries.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  Corpus d;
  for (std::size_t i : perm) {
    d.entries.push_back(c.entries[i]);
    d.images.push_back(c.images[i]);
  }
  const auto b = run_protocol(d, s, tiny_model(), tiny_train(), "fp").cells();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].test == b[i].test);
    CHECK(a[i].auc == b[i].auc);
    CHECK(a[i].acc == b[i].acc);
  }
}

TEST_CASE("robustness level 0 equals the clean evaluation") {
  const Corpus c = tiny_corpus();
  const CaelModel model(tiny_model(), 5);
  EvalSettings s;
  s.protocol = Protocol::robustness;
  const EvalReport r = run_protocol(c, s, tiny_model(), tiny_train(), "fp", &model);
  const auto whole = std::find_if(r.runs.begin(), r.runs.end(), [](const CellResult& x) { return x.test == "all"; });
  REQUIRE(whole != r.runs.end());
  std::size_t zero_rows = 0;
  for (const RobustnessRow& row : r.robustness)
    if (row.level == 0 && row.method == "cael") {
      CHECK(row.auc == whole->auc);
      ++zero_rows;
    }
  CHECK(zero_rows == all_corruptions().size());
  CHECK(r.robustness.size() == all_corruptions().size() * (kMaxCorruptionLevel + 1) * 2);
}

TEST_CASE("level protocol accuracy matches argmax metrics") {
  const Corpus c = tiny_corpus();
  EvalSettings s;
  s.protocol = Protocol::level;
  s.level = LabelLevel::forgery;
  const EvalReport r = run_protocol(c, s, tiny_model(), tiny_train(), "fp");
  REQUIRE(r.runs.size() == 1);
  CHECK(r.runs[0].test == "forgery");
  CHECK((r.runs[0].acc >= 0.0 && r.runs[0].acc <= 1.0));
}
