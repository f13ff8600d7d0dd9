#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "cael/dataset.hpp"

namespace cael {

namespace {

void check_ratios(const SplitRatios& r) {
  for (double v : {r.train, r.val, r.test})
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("split ratios must be non-negative");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
}

// Fisher-Yates with an explicit index draw, identical across standard libraries.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

constexpr std::array<Split, 3> kSplits{Split::train, Split::val, Split::test};

}  // namespace

std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatios& ratios) {
  check_ratios(ratios);
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(total) * r[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned > total) {
    const std::size_t i = static_cast<std::size_t>(
        std::min_element(remainder.begin(), remainder.end()) - remainder.begin());
    --counts[i];
    remainder[i] += 1.0;
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  return counts;
}

std::vector<ManifestEntry> split_corpus(std::vector<ManifestEntry> entries, const SplitRatios& ratios,
                                        std::uint64_t seed, const SplitOptions& options) {
  check_ratios(ratios);
  std::mt19937_64 rng(seed ^ 0x5EED5EED5EED5EEDULL);

  std::map<std::int64_t, std::vector<std::size_t>> by_identity;
  std::map<std::string, std::vector<std::size_t>> free_by_family;
  std::vector<std::string> family_order;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].identity) {
      by_identity[*entries[i].identity].push_back(i);
      continue;
    }
    const TaxonomyLabel& l = entries[i].label;
    const std::string key = std::string(authenticity_name(l.level1)) + "/" +
                            std::string(forgery_name(l.level2)) + "/" +
                            std::string(method_name(l.level3)) + "/" + l.level4;
    auto [it, inserted] = free_by_family.try_emplace(key);
    if (inserted) family_order.push_back(key);
    it->second.push_back(i);
  }

  std::vector<std::int64_t> ids;
  for (const auto& [id, rows] : by_identity) ids.push_back(id);
  shuffle(ids, rng);
  const auto id_counts = apportion(ids.size(), ratios);
  if (options.require_every_split) {
    const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
    const std::size_t wanted = static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](double v) { return v > 0.0; }));
    for (std::size_t s = 0; s < 3; ++s)
      if (r[s] > 0.0 && id_counts[s] == 0)
        throw std::invalid_argument("fewer identities (" + std::to_string(ids.size()) +
                                    ") than splits requested (" + std::to_string(wanted) + ")");
  }
  std::size_t next = 0;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < id_counts[s]; ++k, ++next)
      for (std::size_t row : by_identity[ids[next]]) entries[row].split = kSplits[s];

  for (const std::string& key : family_order) {
    std::vector<std::size_t> rows = free_by_family[key];
    shuffle(rows, rng);
    const auto counts = apportion(rows.size(), ratios);
    std::size_t r = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < counts[s]; ++k, ++r) entries[rows[r]].split = kSplits[s];
  }
  return entries;
}

}  // namespace cael
