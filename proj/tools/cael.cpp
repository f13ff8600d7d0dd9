#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cael/checkpoint.hpp"
#include "cael/dataset.hpp"
#include "cael/metrics.hpp"
#include "cael/model.hpp"
#include "cael/protocol.hpp"
#include "cael/spectrum.hpp"
#include "cael/train.hpp"

namespace fs = std::filesystem;
using namespace cael;

namespace {

// Failures the user can fix: bad flags, config, data or paths.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::vector<std::string> overrides;
  std::string data;
  std::string model;
  std::string axis;
};

struct Settings {
  KeyValues kv;  // file + overrides, as given
  CaelConfig model;
  TrainConfig train;
  CorpusSpec gen;
  EvalSettings eval;
};

CorpusSpec default_corpus() {
  CorpusSpec s;
  s.count(FamilyKind::smooth_real) = 2000;
  s.count(FamilyKind::grid_artifact_gan) = 2000;
  return s;
}

Settings resolve(const Options& o, const KeyValues& base) {
  Settings s;
  s.kv = base;
  if (!o.config_path.empty()) {
    const KeyValues file = KeyValues::load(o.config_path);
    for (const auto& [k, v] : file.entries()) s.kv.set(k, v);
  }
  for (const std::string& a : o.overrides) s.kv.set_assignment(a);
  for (const auto& [key, value] : s.kv.entries()) {
    const bool known = key.rfind("model.", 0) == 0 || key.rfind("train.", 0) == 0 ||
                       key.rfind("gen.", 0) == 0 || key.rfind("eval.", 0) == 0;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
  s.gen = default_corpus();
  s.model.apply(s.kv);
  s.model.validate();
  s.train.apply(s.kv);
  s.train.validate();
  s.gen.apply(s.kv);
  s.gen.seed = o.seed;
  s.eval.apply(s.kv);
  return s;
}

KeyValues effective(const Settings& s) {
  KeyValues kv;
  s.model.export_to(kv);
  s.train.export_to(kv);
  s.gen.export_to(kv);
  s.eval.export_to(kv);
  return kv;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UserError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw UserError("cannot write " + path.string());
}

std::string echo_config(const Options& o, const Settings& s) {
  const std::string text = "# command: " + o.command + "\n# seed: " + std::to_string(o.seed) + "\n" +
                           effective(s).to_string();
  write_text(fs::path(o.out) / "effective.cfg", text);
  return fingerprint(effective(s).to_string() + "seed=" + std::to_string(o.seed));
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

fs::path manifest_path(const Options& o) {
  if (o.data.empty()) throw UserError(o.command + " needs --data <corpus dir>");
  const fs::path p = fs::path(o.data) / "manifest.tsv";
  if (!fs::exists(p)) throw UserError("no manifest.tsv under " + o.data);
  return p;
}

Corpus load_checked(const Options& o, const CaelConfig& cfg) {
  Corpus c = load_corpus(manifest_path(o));
  for (std::size_t i = 0; i < c.images.size(); ++i)
    if (c.images[i].height != cfg.image_size || c.images[i].width != cfg.image_size)
      throw UserError(c.entries[i].path + " is " + std::to_string(c.images[i].height) + "x" +
                      std::to_string(c.images[i].width) + " but model.image_size is " +
                      std::to_string(cfg.image_size));
  return c;
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump() << std::endl; }

int cmd_gen(const Options& o, const Settings& s) {
  ensure_dir(o.out);
  echo_config(o, s);
  const Corpus c = generate_corpus(s.gen);
  write_corpus(c, o.out);
  print_json({{"command", "gen"}, {"entries", c.entries.size()}, {"manifest", (fs::path(o.out) / "manifest.tsv").string()}});
  return 0;
}

int cmd_train(const Options& o, Settings s) {
  ensure_dir(o.out);
  s.model.num_classes = 2;
  const std::string fp = echo_config(o, s);
  const Corpus corpus = load_checked(o, s.model);
  std::vector<Image> images;
  std::vector<int> labels;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i)
    if (corpus.entries[i].split == Split::train) {
      images.push_back(corpus.images[i]);
      labels.push_back(class_index(corpus.entries[i].label, LabelLevel::binary));
    }
  if (images.empty()) throw UserError("corpus has no training split");
  const LabeledSet train = prepare_set(std::move(images), std::move(labels), s.model);

  CaelModel model(s.model, o.seed);
  Adam adam(model.params(), AdamConfig{s.train.learning_rate, s.train.weight_decay});
  const auto start = std::chrono::steady_clock::now();
  const auto log = train_model(model, adam, train, s.train, o.seed, [&](const LossRecord& r) {
    if (r.step % 10 == 0) {
      const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      char buf[96];
      std::snprintf(buf, sizeof buf, "epoch %zu step %zu loss %.4f (%.0fs)", r.epoch, r.step, r.loss, t);
      log_line(buf);
    }
  });
  save_checkpoint(fs::path(o.out) / "model.ckpt", model.params(), &adam.state());
  write_loss_csv(fs::path(o.out) / "loss.csv", log);

  EvalSettings heldout = s.eval;
  heldout.protocol = Protocol::heldout;
  heldout.seeds = {o.seed};
  const EvalReport report = run_protocol(corpus, heldout, s.model, s.train, fp, &model);
  write_report_csv(fs::path(o.out) / "report.csv", report);
  write_report_jsonl(fs::path(o.out) / "report.jsonl", report);
  nlohmann::ordered_json j{{"command", "train"}, {"steps", log.size()}};
  for (const CellResult& c : report.cells())
    if (c.present) j["auc_" + c.test] = c.auc;
  print_json(j);
  return 0;
}

// Model keys saved next to a checkpoint, so eval rebuilds the same network.
KeyValues checkpoint_model_keys(const fs::path& ckpt) {
  KeyValues kv;
  const fs::path cfg = ckpt.parent_path() / "effective.cfg";
  if (!fs::exists(cfg)) return kv;
  const KeyValues saved = KeyValues::load(cfg);
  for (const auto& [k, v] : saved.entries())
    if (k.rfind("model.", 0) == 0) kv.set(k, v);
  return kv;
}

int cmd_eval(const Options& o, Settings s) {
  ensure_dir(o.out);
  std::unique_ptr<CaelModel> model;
  if (!o.model.empty()) {
    if (!fs::exists(o.model)) throw UserError("no checkpoint at " + o.model);
    s.model.apply(checkpoint_model_keys(o.model));
    s.model.apply(s.kv);  // explicit settings win
    s.model.num_classes = 2;
    if (s.eval.protocol != Protocol::heldout && s.eval.protocol != Protocol::robustness)
      throw UserError("--model works with eval.protocol heldout or robustness");
  }
  const std::string fp = echo_config(o, s);
  const Corpus corpus = load_checked(o, s.model);
  if (!o.model.empty()) {
    model = std::make_unique<CaelModel>(s.model, o.seed);
    restore_params(model->params(), load_checkpoint(o.model));
  }
  const EvalReport report = run_protocol(corpus, s.eval, s.model, s.train, fp, model.get(), log_line);
  write_report_csv(fs::path(o.out) / "report.csv", report);
  write_report_jsonl(fs::path(o.out) / "report.jsonl", report);
  if (!report.robustness.empty()) write_robustness_csv(fs::path(o.out) / "robustness.csv", report);
  print_json({{"command", "eval"}, {"protocol", report.protocol}, {"cells", report.cells().size()}});
  return 0;
}

std::vector<std::pair<std::string, std::string>> axis_values(const std::string& axis) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](const std::string& key, std::initializer_list<const char*> values) {
    for (const char* v : values) out.emplace_back(key, v);
  };
  if (axis == "branches") add("model.branches", {"F", "C", "E", "F+C", "F+E", "C+E", "F+C+E"});
  else if (axis == "operator") add("model.operator", {"sobel", "canny", "log", "mh", "dct"});
  else if (axis == "fusion") add("model.fusion", {"cross_attention", "concatenation", "summation"});
  else if (axis == "query") add("model.query", {"cls", "patch", "all"});
  else if (axis == "aeca") add("model.aeca", {"true", "false"});
  else if (axis == "E") add("model.E", {"0", "1", "2", "3", "4"});
  else if (axis == "K") add("model.K", {"1", "2", "3", "4", "5"});
  else throw UserError("unknown ablation axis '" + axis + "' (branches, operator, fusion, query, aeca, E, K)");
  return out;
}

int cmd_ablate(const Options& o, const Settings& s) {
  if (o.axis.empty()) throw UserError("ablate needs --axis");
  const auto values = axis_values(o.axis);
  ensure_dir(o.out);
  const std::string fp = echo_config(o, s);
  const Corpus corpus = load_checked(o, s.model);
  std::ofstream csv(fs::path(o.out) / "ablation.csv", std::ios::binary);
  if (!csv) throw UserError("cannot write ablation.csv");
  csv << "axis,value,params,auc,acc,seeds\n";
  EvalSettings es = s.eval;
  es.protocol = Protocol::heldout;
  for (const auto& [key, value] : values) {
    KeyValues kv = s.kv;
    kv.set(key, value);
    CaelConfig cfg = s.model;
    cfg.apply(kv);
    cfg.validate();
    log_line("ablate " + key + "=" + value);
    const EvalReport r = run_protocol(corpus, es, cfg, s.train, fp, nullptr, log_line);
    for (const CellResult& c : r.cells())
      if (c.test == "all") {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f,%.6f,%zu\n", o.axis.c_str(), value.c_str(),
                      count_parameters(cfg), c.present ? c.auc : 0.0, c.present ? c.acc : 0.0,
                      es.seeds.size());
        csv << buf;
        std::cout << buf;
      }
  }
  if (!csv.flush()) throw UserError("failed writing ablation.csv");
  return 0;
}

// Score multiply-accumulates for one image, per attention site family.
std::map<std::string, std::uint64_t> score_macs(const CaelConfig& cfg) {
  CaelModel model(cfg, 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(3, cfg.image_size, cfg.image_size);
  for (double& v : img.pixels) v = u(rng);
  AttentionTrace trace;
  NoGradGuard guard;
  model.forward(std::span<const Image>(&img, 1), &trace);
  std::map<std::string, std::uint64_t> out;
  for (const auto& [site, macs] : trace.score_mults) out[site.substr(0, site.find('.'))] += macs;
  return out;
}

int cmd_bench(const Options& o, const Settings& s) {
  ensure_dir(o.out);
  echo_config(o, s);
  std::ostringstream table;
  table << "table,setting,params,delta,aeca_score_macs,mhsa_score_macs,cross_score_macs\n";
  auto param_rows = [&](const char* name, std::size_t CaelConfig::*field, std::size_t lo, std::size_t hi) {
    long long prev = -1;
    for (std::size_t v = lo; v <= hi; ++v) {
      CaelConfig c = s.model;
      c.*field = v;
      const long long p = static_cast<long long>(count_parameters(c));
      table << "params," << name << "=" << v << "," << p << "," << (prev < 0 ? std::string() : std::to_string(p - prev))
            << ",,,\n";
      prev = p;
    }
  };
  param_rows("E", &CaelConfig::E, 0, 4);
  param_rows("K", &CaelConfig::K, 1, 5);
  {
    CaelConfig c = s.model;
    table << "params,E=" << c.E << ";K=" << c.K << "," << count_parameters(c) << ",,,,\n";
  }
  for (QueryMode q : {QueryMode::cls, QueryMode::patch, QueryMode::all}) {
    CaelConfig c = s.model;
    c.query = q;
    auto m = score_macs(c);
    table << "flops,query=" << query_name(q) << "," << count_parameters(c) << ",," << m["aeca"] << ","
          << m["mhsa"] << "," << m["cross"] << "\n";
  }
  for (std::size_t K = 1; K <= 5; ++K) {
    CaelConfig c = s.model;
    c.K = K;
    auto m = score_macs(c);
    table << "flops,K=" << K << "," << count_parameters(c) << ",," << m["aeca"] << "," << m["mhsa"] << ","
          << m["cross"] << "\n";
  }
  write_text(fs::path(o.out) / "bench.csv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_spectrum(const Options& o, const Settings& s) {
  ensure_dir(o.out);
  echo_config(o, s);
  const Corpus corpus = load_corpus(manifest_path(o));
  std::map<std::string, std::vector<Image>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto fam = family_of(corpus.entries[i].label);
    const std::string name = fam ? std::string(family_name(*fam)) : corpus.entries[i].label.level4;
    auto [it, inserted] = groups.try_emplace(name);
    if (inserted) order.push_back(name);
    it->second.push_back(corpus.images[i]);
  }
  if (groups.empty()) throw UserError("corpus is empty");
  constexpr std::size_t kBands = 8;
  std::ostringstream csv;
  csv << "family,count";
  for (std::size_t b = 0; b < kBands; ++b) csv << ",band" << b;
  csv << "\n";
  for (const std::string& name : order) {
    const Plane mean = mean_spectrum(groups[name]);
    csv << name << "," << groups[name].size();
    for (std::size_t b = 0; b < kBands; ++b) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.6f", annulus_mean(mean, double(b) / kBands, double(b + 1) / kBands));
      csv << buf;
    }
    csv << "\n";
    double hi = 0.0;
    for (double v : mean.values) hi = std::max(hi, v);
    Image img(1, mean.height, mean.width);
    for (std::size_t i = 0; i < mean.values.size(); ++i) img.pixels[i] = hi > 0 ? mean.values[i] / hi : 0.0;
    write_pnm(fs::path(o.out) / ("spectrum_" + name + ".pgm"), img);
  }
  write_text(fs::path(o.out) / "spectrum.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

void report_error(const char* kind, const std::string& msg) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", msg}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cael: appearance-edge forgery detector"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--config", o.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "run seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--set", o.overrides, "override key=value (repeatable)")->allow_extra_args(false);
  app.add_option("--data", o.data, "corpus directory holding manifest.tsv");
  app.add_option("--model", o.model, "checkpoint to evaluate");
  app.add_option("--axis", o.axis, "ablation axis");
  for (const char* name : {"gen", "train", "eval", "ablate", "bench", "spectrum"})
    app.add_subcommand(name)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 1;
  }
  o.command = app.get_subcommands().front()->get_name();
  try {
    const Settings s = resolve(o, KeyValues{});
    if (o.command == "gen") return cmd_gen(o, s);
    if (o.command == "train") return cmd_train(o, s);
    if (o.command == "eval") return cmd_eval(o, s);
    if (o.command == "ablate") return cmd_ablate(o, s);
    if (o.command == "bench") return cmd_bench(o, s);
    return cmd_spectrum(o, s);
  } catch (const UserError& e) {
    report_error("user", e.what());
    return 1;
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return 1;
  } catch (const ManifestError& e) {
    report_error("manifest", e.what());
    return 1;
  } catch (const CheckpointError& e) {
    report_error("checkpoint", e.what());
    return 1;
  } catch (const ImageError& e) {
    report_error("image", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 2;
  }
}
