#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "cael/checkpoint.hpp"
#include "cael/ops.hpp"
#include "cael/optim.hpp"

using namespace cael;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cael_test_" + name);
}

}  // namespace

TEST_CASE("step decay schedule") {
  CHECK(step_decay_lr(1e-4, 0) == 1e-4);
  CHECK(step_decay_lr(1e-4, 14) == 1e-4);
  CHECK(step_decay_lr(1e-4, 15) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(step_decay_lr(1e-4, 29) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(step_decay_lr(1e-4, 30) == doctest::Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("adam with zero gradients and no weight decay leaves parameters unchanged") {
  ParamStore store;
  store.add("w", Tensor({3}, std::vector<double>{1, -2, 3}));
  Adam opt(store, AdamConfig{1e-3, 0.0});
  store.entries()[0].tensor.grad_buffer();
  opt.step();
  opt.step();
  const auto d = store.entries()[0].tensor.data();
  CHECK(d[0] == 1.0);
  CHECK(d[1] == -2.0);
  CHECK(d[2] == 3.0);
  CHECK(opt.state().step_count == 2);
}

TEST_CASE("adam single scalar step matches the hand-computed recurrence") {
  // p=0.5, g=1, wd=0.01 -> g' = 1.005; m = 0.1005; v = 0.001*1.005^2;
  // mhat = 1.005; vhat = 1.005^2; p -= lr * 1.005 / (1.005 + eps)
  ParamStore store;
  store.add("w", Tensor({1}, std::vector<double>{0.5}));
  const AdamConfig cfg{0.1, 0.01, 0.9, 0.999, 1e-8};
  Adam opt(store, cfg);
  store.entries()[0].tensor.grad_buffer()[0] = 1.0;
  opt.step();
  const double g = 1.0 + 0.01 * 0.5;
  const double m = 0.1 * g, v = 0.001 * g * g;
  const double want = 0.5 - 0.1 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
  CHECK(store.entries()[0].tensor.data()[0] == doctest::Approx(want).epsilon(1e-14));
  CHECK(opt.state().first_moment[0][0] == doctest::Approx(m).epsilon(1e-15));
  CHECK(opt.state().second_moment[0][0] == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("adam moments match parameter shapes") {
  ParamStore store;
  store.add("a", Tensor({2, 3}));
  store.add("b", Tensor({4}));
  Adam opt(store, AdamConfig{});
  REQUIRE(opt.state().first_moment.size() == 2);
  CHECK(opt.state().first_moment[0].size() == 6);
  CHECK(opt.state().second_moment[1].size() == 4);
}

TEST_CASE("adam aborts on a non-finite gradient before touching state") {
  ParamStore store;
  store.add("good", Tensor({2}, 1.0));
  store.add("bad", Tensor({2}, 1.0));
  Adam opt(store, AdamConfig{});
  store.entries()[0].tensor.grad_buffer()[0] = 1.0;
  store.entries()[1].tensor.grad_buffer()[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    opt.step();
    FAIL("expected NonFiniteGradient");
  } catch (const NonFiniteGradient& e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  CHECK(store.entries()[0].tensor.data()[0] == 1.0);
  CHECK(opt.state().step_count == 0);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  auto run = [] {
    ParamBuilder pb(42);
    Tensor w = pb.make("w", {4, 3}, Init::trunc_normal);
    Tensor b = pb.make("b", {3}, Init::zeros);
    Adam opt(pb.store(), AdamConfig{1e-2, 1e-4});
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    Tensor x({8, 4});
    for (double& v : x.data()) v = n(rng);
    const std::vector<int> labels{0, 1, 2, 1, 0, 2, 2, 1};
    for (int step = 0; step < 20; ++step) {
      pb.store().zero_grad();
      Tensor loss = cross_entropy(linear(x, w, b), labels);
      backward(loss);
      opt.step();
    }
    return std::vector<double>(w.data().begin(), w.data().end());
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip preserves tensors and optimiser state") {
  ParamBuilder pb(3);
  pb.make("layer.weight", {2, 3}, Init::trunc_normal);
  pb.make("layer.bias", {3}, Init::ones);
  Adam opt(pb.store(), AdamConfig{2e-4, 1e-4});
  for (auto& e : pb.store().entries())
    for (double& g : e.tensor.grad_buffer()) g = 0.25;
  opt.step();
  opt.set_learning_rate(2e-5);
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, pb.store(), &opt.state());

  const Checkpoint ck = load_checkpoint(path);
  REQUIRE(ck.tensors.size() == 2);
  CHECK(ck.tensors[0].name == "layer.weight");
  CHECK(ck.tensors[0].tensor.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 6; ++i) CHECK(ck.tensors[0].tensor.data()[i] == pb.store().entries()[0].tensor.data()[i]);
  REQUIRE(ck.adam.has_value());
  CHECK(ck.adam->step_count == 1);
  CHECK(ck.adam->learning_rate == 2e-5);
  CHECK(ck.adam->config.learning_rate == 2e-4);
  CHECK(ck.adam->first_moment == opt.state().first_moment);
  CHECK(ck.adam->second_moment == opt.state().second_moment);

  ParamBuilder other(99);
  other.make("layer.weight", {2, 3}, Init::zeros);
  other.make("layer.bias", {3}, Init::zeros);
  restore_params(other.store(), ck);
  CHECK(other.store().entries()[1].tensor.data()[0] == pb.store().entries()[1].tensor.data()[0]);

  ParamBuilder wrong(1);
  wrong.make("layer.weight", {3, 2}, Init::zeros);
  wrong.make("layer.bias", {3}, Init::zeros);
  CHECK_THROWS_AS(restore_params(wrong.store(), ck), CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint layout starts with the magic and version") {
  ParamStore store;
  store.add("x", Tensor({1}, std::vector<double>{1.0}));
  const auto path = temp_path("layout.ckpt");
  save_checkpoint(path, store, nullptr);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // magic 8 + version 4 + count 4 + name len 4 + "x" + rank 4 + dim 8 + value 8 + has_adam 1
  REQUIRE(bytes.size() == 8 + 4 + 4 + 4 + 1 + 4 + 8 + 8 + 1);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "CAELCKPT");
  CHECK(bytes[8] == 1);
  CHECK(bytes[12] == 1);
  CHECK(bytes.back() == 0);
  in.close();
  auto rewrite = [&](std::size_t n, const std::string& extra) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(n));
    out << extra;
  };
  rewrite(bytes.size(), "");
  CHECK(load_checkpoint(path).tensors.size() == 1);
  rewrite(bytes.size() - 5, "");
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  rewrite(bytes.size(), "x");
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  std::ofstream(path, std::ios::binary) << "NOTACKPT";
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("parameter builder counting mode allocates nothing") {
  ParamBuilder pb = ParamBuilder::counting();
  const Tensor t = pb.make("a", {10, 20}, Init::trunc_normal);
  CHECK(!t.defined());
  CHECK(pb.count() == 200);
  CHECK(pb.declared().size() == 1);
}

TEST_CASE("truncated normal init stays within two standard deviations") {
  ParamBuilder pb(8);
  const Tensor t = pb.make("w", {100, 100}, Init::trunc_normal);
  double sq = 0.0;
  for (double v : t.data()) {
    CHECK(std::abs(v) <= 0.04);
    sq += v * v;
  }
  const double sd = std::sqrt(sq / 10000.0);
  CHECK(sd > 0.015);
  CHECK(sd < 0.02);
}
