// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cael/metrics.hpp"
#include "cael/model.hpp"
#include "cael/probe.hpp"
#include "cael/protocol.hpp"
#include "op_cases.hpp"
#include "roc_oracle.hpp"

namespace fs = std::filesystem;
using namespace cael;
using cael::testing::grad_check;
using cael::testing::random_tensor;
using cael::testing::weighted_sum;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::string cli;
  fs::path work;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI; returns its stdout. Throws on a non-zero exit.
std::string run_cli(const Context& ctx, const std::string& args, const fs::path& log_dir,
                    const std::string& tag) {
  fs::create_directories(log_dir);
  const fs::path out = log_dir / (tag + ".stdout"), err = log_dir / (tag + ".stderr");
  const std::string cmd = quote(ctx.cli) + " " + args + " > " + quote(out.string()) + " 2> " + quote(err.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw std::runtime_error(tag + " exited with " + std::to_string(rc) + ": " + read_file(err));
  return read_file(out);
}

CaelConfig toy_config() {
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
  return c;
}

BranchState random_state(const CaelConfig& c, std::size_t batch, std::mt19937_64& rng, double spread = 1.0) {
  const std::size_t t = c.tokens() + 1;
  return {random_tensor({batch, t, c.dim}, rng, -spread, spread),
          random_tensor({batch, t, c.wide_dim()}, rng, -spread, spread),
          random_tensor({batch, t, c.wide_dim()}, rng, -spread, spread)};
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// 1. Gradient suite.
Outcome gradients(const Context&) {
  const auto t0 = Clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  for (const auto& c : cael::testing::check_all_ops()) {
    if (c.result.max_rel_error >= worst_op) {
      worst_op = c.result.max_rel_error;
      worst_name = c.name;
    }
  }

  const CaelConfig c = toy_config();
  std::mt19937_64 rng(19);
  ParamBuilder pb(20);
  const MaetBlock block(pb, "m", c);
  const BranchState s = random_state(c, 1, rng);
  std::vector<Tensor> inputs{s.fine, s.coarse, s.edge};
  for (const Tensor& p : pb.store().tensors()) inputs.push_back(p);
  const auto f = [&](const std::vector<Tensor>& in) {
    const BranchState r = block.forward({in[0], in[1], in[2]});
    return add(add(weighted_sum(r.fine, 1), weighted_sum(r.coarse, 2)), weighted_sum(r.edge, 3));
  };
  const double block_err = grad_check(f, inputs).max_rel_error;
  const double elapsed = seconds_since(t0);
  const bool pass = worst_op < 1e-4 && block_err < 1e-3 && elapsed < 60.0;
  return {pass, fmt("ops max rel err %.2e (%s) < 1e-4; maet block (n=%zu d=%zu heads=%zu, %zu params) %.2e < 1e-3; "
                    "%.1fs < 60s",
                    worst_op, worst_name.c_str(), c.tokens(), c.dim, c.heads, pb.store().total_numel(), block_err,
                    elapsed)};
}

// 2. Attention invariants over randomized forward passes.
Outcome attention_invariants(const Context&) {
  struct Variant {
    CaelConfig cfg;
    std::unique_ptr<ParamBuilder> pb;
    std::unique_ptr<MaetBlock> block;
  };
  std::vector<Variant> variants;
  std::uint64_t seed = 100;
  for (const char* branches : {"F+C+E", "F+E", "C+E"})
    for (QueryMode q : {QueryMode::cls, QueryMode::patch, QueryMode::all})
      for (std::size_t heads : {1, 2, 4}) {
        Variant v;
        v.cfg = toy_config();
        v.cfg.branches = BranchSet::parse(branches);
        v.cfg.query = q;
        v.cfg.heads = heads;
        v.pb = std::make_unique<ParamBuilder>(seed++);
        v.block = std::make_unique<MaetBlock>(*v.pb, "m", v.cfg);
        variants.push_back(std::move(v));
      }

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> spread(0.1, 8.0);
  double worst_row = 0.0;
  std::size_t rows = 0, structure_failures = 0;
  constexpr std::size_t kPasses = 10000;
  NoGradGuard guard;
  for (std::size_t pass = 0; pass < kPasses; ++pass) {
    const Variant& v = variants[pass % variants.size()];
    const std::size_t batch = 1 + rng() % 3;
    BranchState s = random_state(v.cfg, batch, rng, spread(rng));
    if (!v.cfg.branches.fine) s.fine = Tensor();
    if (!v.cfg.branches.coarse) s.coarse = Tensor();

    AttentionTrace trace;
    v.block->forward(s, &trace);
    const AecaOutput out = v.block->aeca.forward(s.fine, s.coarse, s.edge, &trace);
    for (const auto& map : trace.maps) {
      const std::size_t width = map.probs.shape().back();
      const auto data = map.probs.data();
      for (std::size_t r = 0; r < data.size() / width; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) sum += data[r * width + j];
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
        ++rows;
      }
    }
    const std::size_t n = v.cfg.tokens();
    Tensor expected_cls;
    if (out.cls_fine.defined()) expected_cls = out.cls_fine;
    if (out.cls_coarse.defined()) expected_cls = expected_cls.defined() ? add(expected_cls, out.cls_coarse) : out.cls_coarse;
    if (!bit_equal(token_rows(out.tokens, 0, 1), expected_cls) ||
        !bit_equal(token_rows(out.tokens, 1, n), token_rows(s.edge, 1, n)))
      ++structure_failures;
  }
  const bool pass = worst_row <= 1e-9 && structure_failures == 0 && rows > 0;
  return {pass, fmt("%zu passes, %zu attention rows, max |row sum - 1| %.2e <= 1e-9; aeca structure mismatches %zu",
                    kPasses, rows, worst_row, structure_failures)};
}

// Minimum per-call seconds of fn over several timed trials.
double min_time(const std::function<void()>& fn) {
  fn();
  std::size_t reps = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < reps; ++i) fn();
    if (seconds_since(t0) > 0.05) break;
    reps *= 2;
  }
  double best = 1e300;
  for (int trial = 0; trial < 7; ++trial) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < reps; ++i) fn();
    best = std::min(best, seconds_since(t0) / static_cast<double>(reps));
  }
  return best;
}

// 3. Score-step complexity of AECA against full self-attention.
Outcome complexity(const Context&) {
  const CaelConfig full;
  const std::size_t d = full.dim, heads = full.heads;
  auto macs = [&](std::size_t n) {
    std::mt19937_64 rng(3);
    ParamBuilder pb(4);
    const AecaSide side(pb, "a", 2 * d, d, heads);
    const EncoderBlock enc(pb, "s", d, heads, full.mlp_ratio);
    const Tensor edge = random_tensor({1, n + 1, 2 * d}, rng);
    const Tensor appearance = random_tensor({1, n + 1, d}, rng);
    AttentionTrace trace;
    trace.keep_maps = false;
    NoGradGuard guard;
    side.forward(edge, appearance, QueryMode::cls, &trace, "aeca");
    enc.forward(appearance, &trace, "mhsa");
    return std::pair{trace.score_mults.at("aeca"), trace.score_mults.at("mhsa")};
  };
  const auto [a49, s49] = macs(49);
  const auto [a196, s196] = macs(196);
  const double aeca_ratio = static_cast<double>(a196) / static_cast<double>(a49);
  const double mhsa_ratio = static_cast<double>(s196) / static_cast<double>(s49);
  const bool flops_ok = std::lround(aeca_ratio) == 4 && std::lround(mhsa_ratio) == 16;

  // Wall time of the score product q k^T / sqrt(dh) alone.
  const std::size_t dh = d / heads;
  auto score_time = [&](std::size_t n, bool class_query) {
    std::mt19937_64 rng(5);
    const Tensor q = random_tensor({heads, class_query ? 1 : n + 1, dh}, rng);
    const Tensor kt = random_tensor({heads, dh, n + 1}, rng);
    NoGradGuard guard;
    return min_time([&] { scale(matmul(q, kt), 1.0 / std::sqrt(static_cast<double>(dh))); });
  };
  const double aeca_wall = score_time(1024, true) / score_time(256, true);
  const double mhsa_wall = score_time(1024, false) / score_time(256, false);
  const bool wall_ok = aeca_wall < 8.0 && mhsa_wall > 10.0;
  return {flops_ok && wall_ok,
          fmt("score MACs n 49->196 (n+1 keys with the class token): aeca x%.3f (~4), self-attention x%.3f (~16); "
              "wall time n 256->1024: aeca x%.2f < 8, self-attention x%.2f > 10",
              aeca_ratio, mhsa_ratio, aeca_wall, mhsa_wall)};
}

// 4. Constant parameter deltas over E and K at full dims, and the bench table.
Outcome parameter_ablation(const Context& ctx) {
  CaelConfig full;
  full.image_size = 224;
  auto deltas = [&](std::size_t CaelConfig::*field, std::size_t lo, std::size_t hi) {
    std::vector<long long> counts, d;
    for (std::size_t v = lo; v <= hi; ++v) {
      CaelConfig c = full;
      c.*field = v;
      counts.push_back(static_cast<long long>(count_parameters(c)));
    }
    for (std::size_t i = 1; i < counts.size(); ++i) d.push_back(counts[i] - counts[i - 1]);
    return std::pair{counts, d};
  };
  const auto [e_counts, e_d] = deltas(&CaelConfig::E, 0, 4);
  const auto [k_counts, k_d] = deltas(&CaelConfig::K, 1, 5);
  auto constant = [](const std::vector<long long>& d) {
    return std::all_of(d.begin(), d.end(), [&](long long x) { return x == d.front() && x > 0; });
  };

  const fs::path dir = ctx.work / "c4";
  run_cli(ctx, "bench --out " + quote(dir.string()) + " --set model.image_size=224", dir, "bench");
  std::istringstream csv(read_file(dir / "bench.csv"));
  std::string line;
  std::map<std::string, long long> table;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f.size() >= 3 && f[0] == "params") table[f[1]] = std::stoll(f[2]);
  }
  bool table_ok = true;
  for (std::size_t i = 0; i < e_counts.size(); ++i) table_ok &= table["E=" + std::to_string(i)] == e_counts[i];
  for (std::size_t i = 0; i < k_counts.size(); ++i) table_ok &= table["K=" + std::to_string(i + 1)] == k_counts[i];

  return {constant(e_d) && constant(k_d) && table_ok,
          fmt("image 224: E 0..4 delta %lld x4 %s, K 1..5 delta %lld x4 %s; bench.csv rows %s",
              e_d.front(), constant(e_d) ? "constant" : "varying", k_d.front(), constant(k_d) ? "constant" : "varying",
              table_ok ? "match" : "differ")};
}

// 5. End-to-end synthetic task through the CLI, with the spectral probe as oracle.
Outcome end_to_end(const Context& ctx) {
  const auto t0 = Clock::now();
  const fs::path dir = ctx.work / "c5", data = dir / "data", run = dir / "run";
  run_cli(ctx, "gen --seed 1 --out " + quote(data.string()), dir, "gen");

  const Corpus corpus = load_corpus(data / "manifest.tsv");
  std::vector<std::vector<double>> train_x, test_x;
  std::vector<int> train_y, test_y;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const int y = class_index(corpus.entries[i].label, LabelLevel::binary);
    if (corpus.entries[i].split == Split::train) {
      train_x.push_back(dct_annulus_features(corpus.images[i]));
      train_y.push_back(y);
    } else if (corpus.entries[i].split == Split::test) {
      test_x.push_back(dct_annulus_features(corpus.images[i]));
      test_y.push_back(y);
    }
  }
  LogisticProbe probe;
  probe.fit(train_x, train_y);
  const double probe_auc = auc(probe.score_all(test_x), test_y);
  if (probe_auc < 0.90)
    return {false, fmt("learnability oracle failed: dct probe auc %.4f < 0.90; corpus generator at fault", probe_auc)};

  const std::string out = run_cli(ctx, "train --seed 1 --data " + quote(data.string()) + " --out " + quote(run.string()),
                                  dir, "train");
  const auto j = nlohmann::json::parse(out);
  const double model_auc = j.at("auc_all").get<double>();
  const double elapsed = seconds_since(t0);
  return {model_auc >= 0.95 && elapsed <= 900.0,
          fmt("dct probe auc %.4f >= 0.90; %zu test images; held-out auc %.4f >= 0.95; gen+probe+train %.0fs <= 900s "
              "on %u core(s)",
              probe_auc, test_y.size(), model_auc, elapsed, std::max(1u, std::thread::hardware_concurrency()))};
}

// Shared cross-family runs for criteria 6 and 7.
struct CrossRuns {
  std::map<std::string, EvalReport> reports;
  double seconds = 0.0;
};

CaelConfig reduced_config() {
  CaelConfig m;
  m.K = 1;
  m.S = 1;
  m.L = 1;
  m.E = 1;
  m.N = 1;
  m.heads = 4;
  m.dim = 32;
  m.mlp_ratio = 2.0;
  m.fine_channels = 32;
  m.coarse_channels = 16;
  return m;
}

const CrossRuns& cross_runs() {
  static CrossRuns runs = [] {
    CrossRuns r;
    const auto t0 = Clock::now();
    CorpusSpec spec;
    spec.seed = 7;
    for (FamilyKind f : kAllFamilies) spec.count(f) = 200;
    spec.ratios = {0.7, 0.0, 0.3};
    const Corpus corpus = generate_corpus(spec);
    TrainConfig t;
    t.epochs = 6;
    t.batch_size = 16;
    t.learning_rate = 3e-4;
    EvalSettings e;
    e.protocol = Protocol::cross_generator;
    e.seeds = {1, 2, 3};
    for (const auto& [name, branches, aeca] : {std::tuple{"F+C+E aeca", "F+C+E", true},
                                               std::tuple{"F+C+E no-aeca", "F+C+E", false},
                                               std::tuple{"F+C", "F+C", false}}) {
      CaelConfig m = reduced_config();
      m.branches = BranchSet::parse(branches);
      m.aeca = aeca;
      r.reports[name] = run_protocol(corpus, e, m, t, name);
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

double mean_auc(const EvalReport& r) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const CellResult& c : r.cells())
    if (c.present) {
      sum += c.auc;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// 6. Directional ablations.
Outcome directional_ablations(const Context&) {
  const CrossRuns& r = cross_runs();
  const double full = mean_auc(r.reports.at("F+C+E aeca"));
  const double no_aeca = mean_auc(r.reports.at("F+C+E no-aeca"));
  const double appearance = mean_auc(r.reports.at("F+C"));
  const bool edge_ok = full >= appearance, aeca_ok = full >= no_aeca;
  return {edge_ok && aeca_ok,
          fmt("cross-generator, 3 seeds: F+C+E %.4f >= F+C %.4f %s; aeca on %.4f >= aeca off %.4f %s (%.0fs)", full,
              appearance, edge_ok ? "ok" : "violated", full, no_aeca, aeca_ok ? "ok" : "violated", r.seconds)};
}

// 7. Training on GAN fakes transfers worse to diffusion fakes than the reverse.
Outcome hardness_direction(const Context&) {
  const EvalReport& report = cross_runs().reports.at("F+C+E aeca");
  double gan_to_diff = -1.0, diff_to_gan = -1.0;
  for (const CellResult& c : report.cells()) {
    if (c.train == "gridgan" && c.test == "lowdiff") gan_to_diff = c.auc;
    if (c.train == "lowdiff" && c.test == "gridgan") diff_to_gan = c.auc;
  }
  return {gan_to_diff >= 0.0 && diff_to_gan >= 0.0 && gan_to_diff < diff_to_gan,
          fmt("mean over 3 seeds: gridgan->lowdiff auc %.4f < lowdiff->gridgan auc %.4f", gan_to_diff, diff_to_gan)};
}

// 8. Metric oracles.
Outcome metric_oracles(const Context&) {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    const bool ties = trial % 2 == 0;
    std::vector<double> s(n);
    std::vector<int> l(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ties ? static_cast<double>(rng() % 10) / 10.0 : u(rng);
      l[i] = static_cast<int>(rng() % 2);
    }
    l[0] = 0;
    l[1] = 1;
    worst = std::max(worst, std::abs(auc(s, l) - cael::testing::trapezoid_auc(s, l)));
  }

  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  expect(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0, "separated");
  expect(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1, 0}) == 0.5, "all ties");
  expect(auc(std::vector<double>{0.9, 0.4, 0.6, 0.1}, std::vector<int>{1, 1, 0, 0}) == 0.75, "3 of 4 pairs");
  bool threw = false;
  try {
    auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1});
  } catch (const UndefinedMetric&) {
    threw = true;
  }
  expect(threw, "single class");
  const std::vector<int> y{0, 1, 0, 1};
  const ClassMetrics perfect = classification_metrics(y, y, 2);
  expect(perfect.acc == 1.0 && perfect.precision == 1.0 && perfect.recall == 1.0 && perfect.f1 == 1.0, "perfect");
  const ClassMetrics constant = classification_metrics(std::vector<int>{1, 1, 1, 1}, y, 2);
  expect(constant.acc == 0.5 && constant.recall == 0.5, "constant");
  std::vector<int> labels, preds;
  const int cm[3][3] = {{2, 1, 0}, {0, 2, 0}, {1, 0, 3}};
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      for (int k = 0; k < cm[t][p]; ++k) {
        labels.push_back(t);
        preds.push_back(p);
      }
  const ClassMetrics m = classification_metrics(preds, labels, 3);
  const double p0 = 2.0 / 3, p1 = 2.0 / 3, p2 = 1.0, r0 = 2.0 / 3, r1 = 1.0, r2 = 3.0 / 4;
  auto f1 = [](double p, double r) { return 2 * p * r / (p + r); };
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-15; };
  expect(near(m.acc, 7.0 / 9.0) && near(m.precision, (p0 + p1 + p2) / 3) && near(m.recall, (r0 + r1 + r2) / 3) &&
             near(m.f1, (f1(p0, r0) + f1(p1, r1) + f1(p2, r2)) / 3),
         "3-class confusion");

  std::string names;
  for (const auto& f : failed) names += " " + f;
  return {worst <= 1e-9 && failed.empty(),
          fmt("1000 random sets: max |mann-whitney - trapezoid| %.2e <= 1e-9; worked examples %zu/7 reproduced%s",
              worst, 7 - failed.size(), names.c_str())};
}

// 9. Byte-identical reruns of train.
Outcome determinism(const Context& ctx) {
  const fs::path dir = ctx.work / "c9", data = dir / "data";
  const std::string small = " --set gen.smooth_real=60 --set gen.grid_artifact_gan=60";
  const std::string model =
      " --set model.K=1 --set model.S=1 --set model.L=1 --set model.E=1 --set model.N=1 --set model.heads=2"
      " --set model.dim=8 --set model.mlp_ratio=2 --set model.fine_channels=8 --set model.coarse_channels=4"
      " --set train.epochs=2 --set train.batch_size=8";
  run_cli(ctx, "gen --seed 3 --out " + quote(data.string()) + small, dir, "gen");
  for (const char* r : {"a", "b"})
    run_cli(ctx, "train --seed 5 --data " + quote(data.string()) + " --out " + quote((dir / r).string()) + model, dir,
            std::string("train_") + r);
  std::vector<std::string> differing;
  std::size_t bytes = 0;
  for (const char* file : {"model.ckpt", "report.csv", "report.jsonl", "loss.csv", "effective.cfg"}) {
    const std::string a = read_file(dir / "a" / file), b = read_file(dir / "b" / file);
    bytes += a.size();
    if (a != b) differing.emplace_back(file);
  }
  std::string names;
  for (const auto& f : differing) names += " " + f;
  return {differing.empty(), differing.empty()
                                 ? fmt("two train runs: model.ckpt, report.csv, report.jsonl, loss.csv, effective.cfg "
                                       "identical (%zu bytes)",
                                       bytes)
                                 : "files differ:" + names};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cael acceptance suite"};
  Context ctx;
  std::vector<int> only, known_fail;
  app.add_option("--cli", ctx.cli, "path to the cael binary")->required();
  app.add_option("--work", ctx.work, "scratch directory")->required();
  app.add_option("--only", only, "criteria to run (default all)");
  app.add_option("--known-fail", known_fail, "criteria whose failure does not fail the run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, Outcome (*)(const Context&)>> criteria{
      {"gradient suite", gradients},
      {"attention invariants", attention_invariants},
      {"complexity", complexity},
      {"parameter ablation", parameter_ablation},
      {"end-to-end synthetic task", end_to_end},
      {"directional ablations", directional_ablations},
      {"hardness direction", hardness_direction},
      {"metric oracles", metric_oracles},
      {"determinism", determinism},
  };
  fs::create_directories(ctx.work);
  const std::set<int> selected(only.begin(), only.end()), allowed(known_fail.begin(), known_fail.end());
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool tolerated = !o.pass && allowed.count(id);
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first << "] "
              << o.detail << fmt(" (%.1fs)", seconds_since(t0)) << (tolerated ? " (known failure)" : "")
              << std::endl;
    if (!o.pass && !tolerated) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
