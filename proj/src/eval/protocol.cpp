#include "cael/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "json.hpp"

#include "cael/metrics.hpp"
#include "cael/probe.hpp"

namespace cael {

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::cross_generator: return "cross_generator";
    case Protocol::cross_forgery: return "cross_forgery";
    case Protocol::level: return "level";
    case Protocol::robustness: return "robustness";
    case Protocol::heldout: return "heldout";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  for (Protocol p : {Protocol::cross_generator, Protocol::cross_forgery, Protocol::level,
                     Protocol::robustness, Protocol::heldout})
    if (s == protocol_name(p)) return p;
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

void EvalSettings::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("eval.", 0) != 0) continue;
    if (key == "eval.protocol") {
      protocol = parse_protocol(value);
    } else if (key == "eval.level") {
      try {
        level = parse_level(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "eval.seeds") {
      seeds.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        const std::size_t comma = std::min(value.find(',', start), value.size());
        const long long s = parse_int(key, value.substr(start, comma - start));
        if (s < 0) throw ConfigError("eval.seeds must be non-negative");
        seeds.push_back(static_cast<std::uint64_t>(s));
        start = comma + 1;
      }
    } else if (key == "eval.max_train") {
      const long long v = parse_int(key, value);
      if (v < 0) throw ConfigError("eval.max_train must be non-negative");
      max_train = static_cast<std::size_t>(v);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("eval.seeds must list at least one seed");
}

void EvalSettings::export_to(KeyValues& kv) const {
  kv.set("eval.protocol", std::string(protocol_name(protocol)));
  kv.set("eval.level", std::string(level_name(level)));
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  kv.set("eval.seeds", s);
  kv.set("eval.max_train", std::to_string(max_train));
}

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Corpus load_corpus(const std::filesystem::path& manifest) {
  Corpus c;
  c.entries = load_manifest(manifest);
  const std::filesystem::path base = manifest.parent_path();
  c.images.reserve(c.entries.size());
  for (const ManifestEntry& e : c.entries) c.images.push_back(read_pnm(base / e.path));
  return c;
}

std::vector<CellResult> EvalReport::cells() const {
  std::vector<CellResult> out;
  std::vector<std::size_t> counts;
  for (const CellResult& r : runs) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const CellResult& c) { return c.train == r.train && c.test == r.test; });
    if (it == out.end()) {
      out.push_back(r);
      out.back().seed = 0;
      counts.push_back(r.present ? 1 : 0);
      if (!r.present) out.back() = CellResult{r.train, r.test, 0, false};
      continue;
    }
    const std::size_t i = static_cast<std::size_t>(it - out.begin());
    if (!r.present) continue;
    if (counts[i] == 0) {
      *it = r;
      it->seed = 0;
    } else {
      it->acc += r.acc;
      it->auc += r.auc;
      it->precision += r.precision;
      it->recall += r.recall;
      it->f1 += r.f1;
    }
    ++counts[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (counts[i] > 1) {
      const double k = static_cast<double>(counts[i]);
      out[i].acc /= k;
      out[i].auc /= k;
      out[i].precision /= k;
      out[i].recall /= k;
      out[i].f1 /= k;
    }
  return out;
}

namespace {

std::string generator_group(const ManifestEntry& e) { return e.label.level4; }
std::string forgery_group(const ManifestEntry& e) { return std::string(forgery_name(e.label.level2)); }

using GroupFn = std::string (*)(const ManifestEntry&);

// Row indices sorted by path so results do not depend on manifest order.
std::vector<std::size_t> select(const Corpus& corpus, Split split,
                                const std::function<bool(const ManifestEntry&)>& keep) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i)
    if (corpus.entries[i].split == split && keep(corpus.entries[i])) rows.push_back(i);
  std::sort(rows.begin(), rows.end(),
            [&](std::size_t a, std::size_t b) { return corpus.entries[a].path < corpus.entries[b].path; });
  return rows;
}

void cap_rows(std::vector<std::size_t>& rows, std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || rows.size() <= cap) return;
  std::mt19937_64 rng(seed ^ 0xC0FFEEULL);
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng() % i]);
  rows.resize(cap);
  std::sort(rows.begin(), rows.end());
}

LabeledSet make_set(const Corpus& corpus, const std::vector<std::size_t>& rows, const CaelConfig& cfg,
                    LabelLevel level) {
  std::vector<Image> images;
  std::vector<int> labels;
  for (std::size_t r : rows) {
    images.push_back(corpus.images[r]);
    labels.push_back(class_index(corpus.entries[r].label, level));
  }
  return prepare_set(std::move(images), std::move(labels), cfg);
}

bool has_both_classes(const std::vector<int>& labels) {
  bool real = false, fake = false;
  for (int l : labels) (l == 0 ? real : fake) = true;
  return real && fake;
}

CellResult binary_result(std::span<const double> scores, std::span<const int> labels) {
  std::vector<int> preds;
  preds.reserve(scores.size());
  for (double s : scores) preds.push_back(s > kDecisionThreshold ? 1 : 0);
  const ClassMetrics m = classification_metrics(preds, labels, 2);
  CellResult r;
  r.n = labels.size();
  r.acc = m.acc;
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.auc = auc(scores, labels);
  return r;
}

std::unique_ptr<CaelModel> fit_model(const LabeledSet& train, const CaelConfig& cfg,
                                     const TrainConfig& tc, std::uint64_t seed) {
  auto model = std::make_unique<CaelModel>(cfg, seed);
  Adam opt(model->params(), AdamConfig{tc.learning_rate, tc.weight_decay});
  train_model(*model, opt, train, tc, seed);
  return model;
}

std::vector<std::string> cross_groups(const Corpus& corpus, Protocol p) {
  std::vector<std::string> groups;
  if (p == Protocol::cross_forgery) {
    groups = {"EFS", "AM", "FS"};
  } else {
    for (FamilyKind f : kAllFamilies)
      if (f != FamilyKind::smooth_real) groups.push_back(family_label(f).level4);
    std::set<std::string> extra;
    for (const ManifestEntry& e : corpus.entries)
      if (e.label.level1 == Authenticity::fake &&
          std::find(groups.begin(), groups.end(), e.label.level4) == groups.end())
        extra.insert(e.label.level4);
    groups.insert(groups.end(), extra.begin(), extra.end());
  }
  return groups;
}

void run_cross(const Corpus& corpus, const EvalSettings& s, const CaelConfig& cfg,
               const TrainConfig& tc, std::uint64_t seed, EvalReport& report,
               const CellProgress& progress) {
  const GroupFn group = s.protocol == Protocol::cross_forgery ? forgery_group : generator_group;
  const auto groups = cross_groups(corpus, s.protocol);
  auto of_group = [&](const std::string& g) {
    return [&, g](const ManifestEntry& e) { return e.label.level1 == Authenticity::real || group(e) == g; };
  };
  std::vector<LabeledSet> tests;
  for (const std::string& g : groups)
    tests.push_back(make_set(corpus, select(corpus, Split::test, of_group(g)), cfg, LabelLevel::binary));
  for (const std::string& tg : groups) {
    auto train_rows = select(corpus, Split::train, of_group(tg));
    cap_rows(train_rows, s.max_train, seed);
    const LabeledSet train = make_set(corpus, train_rows, cfg, LabelLevel::binary);
    std::unique_ptr<CaelModel> model;
    if (has_both_classes(train.labels)) {
      if (progress) progress("training " + tg + " seed " + std::to_string(seed));
      model = fit_model(train, cfg, tc, seed);
    }
    for (std::size_t h = 0; h < groups.size(); ++h) {
      CellResult r;
      if (model && has_both_classes(tests[h].labels)) {
        r = evaluate_binary(*model, tests[h]);
      } else {
        r.present = false;
      }
      r.train = tg;
      r.test = groups[h];
      r.seed = seed;
      report.runs.push_back(r);
    }
  }
}

std::vector<std::string> test_groups(const Corpus& corpus) {
  std::vector<std::string> groups;
  for (const std::string& g : cross_groups(corpus, Protocol::cross_generator))
    for (const ManifestEntry& e : corpus.entries)
      if (e.split == Split::test && e.label.level4 == g) {
        groups.push_back(g);
        break;
      }
  return groups;
}

}  // namespace

CellResult evaluate_binary(const CaelModel& model, const LabeledSet& data) {
  const auto scores = fake_scores(predict_probabilities(model, data));
  return binary_result(scores, data.labels);
}

EvalReport run_protocol(const Corpus& corpus, const EvalSettings& s, const CaelConfig& model_cfg,
                        const TrainConfig& tc, const std::string& config_fingerprint,
                        const CaelModel* supplied, const CellProgress& progress) {
  if (corpus.entries.size() != corpus.images.size())
    throw std::invalid_argument("run_protocol: corpus entries and images differ in length");
  if (s.seeds.empty()) throw std::invalid_argument("run_protocol: no seeds");
  if (supplied && s.protocol != Protocol::heldout && s.protocol != Protocol::robustness)
    throw std::invalid_argument("run_protocol: only heldout and robustness accept a trained model");
  EvalReport report;
  report.protocol = std::string(protocol_name(s.protocol));
  report.fingerprint = config_fingerprint;
  report.seeds = s.seeds;

  for (std::uint64_t seed : s.seeds) {
    if (s.protocol == Protocol::cross_generator || s.protocol == Protocol::cross_forgery) {
      run_cross(corpus, s, model_cfg, tc, seed, report, progress);
      continue;
    }
    CaelConfig cfg = supplied ? supplied->config() : model_cfg;
    const LabelLevel level = s.protocol == Protocol::level ? s.level : LabelLevel::binary;
    cfg.num_classes = level_classes(level);
    auto all = [](const ManifestEntry&) { return true; };
    const auto test_rows = select(corpus, Split::test, all);
    std::unique_ptr<CaelModel> trained;
    const CaelModel* model = supplied;
    if (!model) {
      auto train_rows = select(corpus, Split::train, all);
      cap_rows(train_rows, s.max_train, seed);
      const LabeledSet train = make_set(corpus, train_rows, cfg, level);
      if (progress) progress("training all seed " + std::to_string(seed));
      trained = fit_model(train, cfg, tc, seed);
      model = trained.get();
    }
    const LabeledSet test = make_set(corpus, test_rows, cfg, level);
    if (s.protocol == Protocol::level) {
      const auto probs = predict_probabilities(*model, test);
      const ClassMetrics m = classification_metrics(argmax_predictions(probs), test.labels, cfg.num_classes);
      CellResult r{"all", std::string(level_name(level)), seed, true, test.size(), m.acc, 0.0,
                   m.precision, m.recall, m.f1};
      std::vector<int> binary;
      for (int l : test.labels) binary.push_back(l == 0 ? 0 : 1);
      r.auc = has_both_classes(binary) ? auc(fake_scores(probs), binary) : 0.0;
      r.present = has_both_classes(binary);
      report.runs.push_back(r);
      continue;
    }
    const std::string train_name = supplied ? "model" : "all";
    // Heldout cells: every test generator against the test reals, then everything.
    for (const std::string& g : test_groups(corpus)) {
      const auto rows = select(corpus, Split::test, [&](const ManifestEntry& e) {
        return e.label.level1 == Authenticity::real || e.label.level4 == g;
      });
      const LabeledSet cell = make_set(corpus, rows, cfg, LabelLevel::binary);
      CellResult r{train_name, g, seed, false};
      if (has_both_classes(cell.labels)) r = evaluate_binary(*model, cell);
      r.train = train_name;
      r.test = g;
      r.seed = seed;
      report.runs.push_back(r);
    }
    CellResult whole{train_name, "all", seed, false};
    if (has_both_classes(test.labels)) whole = evaluate_binary(*model, test);
    whole.train = train_name;
    whole.test = "all";
    whole.seed = seed;
    report.runs.push_back(whole);

    if (s.protocol != Protocol::robustness || !whole.present) continue;
    LogisticProbe probe;
    {
      auto train_rows = select(corpus, Split::train, all);
      std::vector<std::vector<double>> feats;
      std::vector<int> labels;
      for (std::size_t r : train_rows) {
        feats.push_back(dct_annulus_features(corpus.images[r]));
        labels.push_back(class_index(corpus.entries[r].label, LabelLevel::binary));
      }
      if (has_both_classes(labels)) probe.fit(feats, labels);
      else probe = LogisticProbe();
    }
    for (CorruptionKind kind : all_corruptions())
      for (int lvl = 0; lvl <= kMaxCorruptionLevel; ++lvl) {
        if (progress) progress(std::string(corruption_name(kind)) + " level " + std::to_string(lvl));
        std::vector<Image> imgs;
        std::vector<std::vector<double>> feats;
        for (std::size_t i = 0; i < test.size(); ++i) {
          imgs.push_back(corrupt(test.images[i], {kind, lvl}, entry_stream(seed, i)));
          feats.push_back(dct_annulus_features(imgs.back()));
        }
        const LabeledSet corrupted = prepare_set(std::move(imgs), test.labels, cfg);
        const auto scores = fake_scores(predict_probabilities(*model, corrupted));
        report.robustness.push_back({kind, lvl, "cael", seed, auc(scores, test.labels)});
        if (!probe.weights().empty())
          report.robustness.push_back({kind, lvl, "dct_probe", seed, auc(probe.score_all(feats), test.labels)});
      }
  }
  return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "protocol,train,test,status,n,acc,auc,precision,recall,f1,seeds,fingerprint\n";
  std::string seeds;
  for (std::size_t i = 0; i < report.seeds.size(); ++i) seeds += (i ? ";" : "") + std::to_string(report.seeds[i]);
  for (const CellResult& c : report.cells()) {
    out << report.protocol << ',' << c.train << ',' << c.test << ',' << (c.present ? "ok" : "absent")
        << ',' << c.n << ',';
    if (c.present)
      out << num(c.acc) << ',' << num(c.auc) << ',' << num(c.precision) << ',' << num(c.recall) << ','
          << num(c.f1);
    else
      out << ",,,,";
    out << ',' << seeds << ',' << report.fingerprint << '\n';
  }
  close_out(out, path);
}

void write_report_jsonl(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  nlohmann::ordered_json head;
  head["record"] = "report";
  head["protocol"] = report.protocol;
  head["fingerprint"] = report.fingerprint;
  head["seeds"] = report.seeds;
  out << head.dump() << '\n';
  for (const CellResult& c : report.runs) {
    nlohmann::ordered_json j;
    j["record"] = "cell";
    j["train"] = c.train;
    j["test"] = c.test;
    j["seed"] = c.seed;
    j["present"] = c.present;
    if (c.present) {
      j["n"] = c.n;
      j["acc"] = c.acc;
      j["auc"] = c.auc;
      j["precision"] = c.precision;
      j["recall"] = c.recall;
      j["f1"] = c.f1;
    }
    out << j.dump() << '\n';
  }
  for (const RobustnessRow& r : report.robustness) {
    nlohmann::ordered_json j;
    j["record"] = "robustness";
    j["kind"] = corruption_name(r.kind);
    j["level"] = r.level;
    j["method"] = r.method;
    j["seed"] = r.seed;
    j["auc"] = r.auc;
    out << j.dump() << '\n';
  }
  close_out(out, path);
}

void write_robustness_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "kind,level,method,auc\n";
  // Mean over seeds per (kind, level, method).
  std::map<std::tuple<int, int, std::string>, std::pair<double, std::size_t>> acc;
  std::vector<std::tuple<int, int, std::string>> order;
  for (const RobustnessRow& r : report.robustness) {
    const auto key = std::make_tuple(static_cast<int>(r.kind), r.level, r.method);
    auto [it, inserted] = acc.try_emplace(key, 0.0, 0);
    if (inserted) order.push_back(key);
    it->second.first += r.auc;
    ++it->second.second;
  }
  for (const auto& key : order) {
    const auto& [sum, count] = acc[key];
    out << corruption_name(static_cast<CorruptionKind>(std::get<0>(key))) << ',' << std::get<1>(key) << ','
        << std::get<2>(key) << ',' << num(sum / static_cast<double>(count)) << '\n';
  }
  close_out(out, path);
}

}  // namespace cael
