#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cael/dataset.hpp"
#include "cael/spectrum.hpp"

using namespace cael;

namespace {

ManifestEntry entry(std::string path, FamilyKind f, Split s, std::optional<std::int64_t> id) {
  return {std::move(path), family_label(f), s, id};
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void check_identity_exclusive(const std::vector<ManifestEntry>& entries) {
  std::map<std::int64_t, std::set<Split>> seen;
  for (const ManifestEntry& e : entries)
    if (e.identity) seen[*e.identity].insert(e.split);
  for (const auto& [id, splits] : seen) CHECK(splits.size() == 1);
}

CorpusSpec small_spec(std::uint64_t seed) {
  CorpusSpec s;
  s.seed = seed;
  s.image_size = 32;
  for (FamilyKind f : kAllFamilies) s.count(f) = 6;
  s.count(FamilyKind::smooth_real) = 12;
  return s;
}

}  // namespace

TEST_CASE("taxonomy invariants") {
  TaxonomyLabel real;
  CHECK(real.problem().empty());
  real.level4 = "ddpm";
  CHECK_FALSE(real.problem().empty());
  TaxonomyLabel fake{Authenticity::fake, ForgeryType::efs, MethodFamily::none, "x"};
  CHECK_FALSE(fake.problem().empty());
  for (FamilyKind f : kAllFamilies) {
    const TaxonomyLabel l = family_label(f);
    CHECK(l.problem().empty());
    CHECK(family_of(l) == f);
    CHECK(parse_family(family_name(f)) == f);
    if (l.level1 == Authenticity::fake) {
      CHECK(l.level2 != ForgeryType::none);
      CHECK(l.level3 != MethodFamily::none);
    }
  }
}

TEST_CASE("manifest round trip and loading") {
  const std::vector<ManifestEntry> entries{
      entry("real/a.ppm", FamilyKind::smooth_real, Split::train, 3),
      entry("am/b.ppm", FamilyKind::patch_edit_am, Split::train, 3),
      entry("gan/c.ppm", FamilyKind::grid_artifact_gan, Split::test, std::nullopt)};
  CHECK(parse_manifest(format_manifest(entries)) == entries);
  CHECK(parse_manifest("").empty());
  CHECK(parse_manifest("# only a comment\n\n").empty());

  const auto dir = temp_dir("cael_manifest_test");
  write_manifest(dir / "manifest.tsv", entries);
  CHECK_THROWS_AS(load_manifest(dir / "manifest.tsv"), ManifestError);  // images missing
  for (const ManifestEntry& e : entries) {
    std::filesystem::create_directories((dir / e.path).parent_path());
    std::ofstream(dir / e.path) << "x";
  }
  CHECK(load_manifest(dir / "manifest.tsv") == entries);
  std::ofstream(dir / "empty.tsv").close();
  CHECK(load_manifest(dir / "empty.tsv").empty());
  CHECK_THROWS_AS(load_manifest(dir / "absent.tsv"), ManifestError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest problems are collected with line numbers") {
  const std::string text =
      "a.ppm\treal\tnone\tnone\tddpm\ttrain\t-\n"
      "b.ppm\tfake\tEFS\n"
      "c.ppm\treal\tnone\tnone\tnone\ttrain\t7\n"
      "d.ppm\treal\tnone\tnone\tnone\ttest\t7\n"
      "e.ppm\treal\tnone\tnone\tnone\tholdout\tx\n";
  try {
    parse_manifest(text);
    FAIL("expected a manifest error");
  } catch (const ManifestError& e) {
    const auto& p = e.problems();
    REQUIRE(p.size() >= 4);
    const std::string all = e.what();
    CHECK(all.find("line 1") != std::string::npos);
    CHECK(all.find("line 2") != std::string::npos);
    CHECK(all.find("identity 7") != std::string::npos);
    CHECK(all.find("line 5") != std::string::npos);
  }
}

TEST_CASE("split apportionment") {
  CHECK(apportion(30000, {0.806, 0.100, 0.094}) == std::array<std::size_t, 3>{24180, 3000, 2820});
  // Published counts for the same ratios differ by a few images.
  const std::array<long, 3> published{24183, 2993, 2824};
  const auto got = apportion(30000, {0.806, 0.100, 0.094});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(static_cast<long>(got[i]) - published[i]) <= 7);
  CHECK(apportion(10, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(apportion(7, {0.5, 0.25, 0.25}) == std::array<std::size_t, 3>{3, 2, 2});
  for (std::size_t n = 0; n < 50; ++n) {
    const auto a = apportion(n, {0.7, 0.2, 0.1});
    CHECK(a[0] + a[1] + a[2] == n);
    CHECK(std::abs(static_cast<double>(a[0]) - 0.7 * n) < 1.0);
  }
  CHECK_THROWS(apportion(10, {0.5, 0.5, 0.5}));
}

TEST_CASE("split_corpus examples and properties") {
  SUBCASE("single identity lands in one split") {
    std::vector<ManifestEntry> e;
    for (int i = 0; i < 5; ++i) e.push_back(entry("r" + std::to_string(i), FamilyKind::smooth_real, Split::train, 42));
    const auto out = split_corpus(e, {0.8, 0.1, 0.1}, 1);
    for (const ManifestEntry& x : out) CHECK(x.split == out[0].split);
    CHECK_THROWS_AS(split_corpus(e, {0.8, 0.1, 0.1}, 1, {true}), std::invalid_argument);
  }
  SUBCASE("identity-free items follow the ratio per family") {
    std::vector<ManifestEntry> e;
    for (int i = 0; i < 1000; ++i) e.push_back(entry("g" + std::to_string(i), FamilyKind::grid_artifact_gan, Split::train, std::nullopt));
    for (int i = 0; i < 100; ++i) e.push_back(entry("d" + std::to_string(i), FamilyKind::low_artifact_diffusion, Split::train, std::nullopt));
    const auto out = split_corpus(e, {0.806, 0.100, 0.094}, 5);
    std::map<std::string, std::array<std::size_t, 3>> counts;
    for (const ManifestEntry& x : out) ++counts[x.label.level4][static_cast<std::size_t>(x.split)];
    CHECK(counts["gridgan"] == apportion(1000, {0.806, 0.100, 0.094}));
    CHECK(counts["lowdiff"] == apportion(100, {0.806, 0.100, 0.094}));
  }
  SUBCASE("same seed same assignment, identities stay exclusive") {
    const Corpus c = generate_corpus(small_spec(3));
    check_identity_exclusive(c.entries);
    CHECK(split_corpus(c.entries, {0.8, 0.1, 0.1}, 9) == split_corpus(c.entries, {0.8, 0.1, 0.1}, 9));
    CHECK(validate_entries(c.entries).empty());
  }
}

TEST_CASE("generate_corpus contracts") {
  SUBCASE("all-zero counts give an empty, loadable manifest") {
    const Corpus c = generate_corpus(CorpusSpec{});
    CHECK(c.entries.empty());
    const auto dir = temp_dir("cael_empty_corpus");
    write_corpus(c, dir);
    CHECK(load_manifest(dir / "manifest.tsv").empty());
    std::filesystem::remove_all(dir);
  }
  SUBCASE("pure in spec and seed") {
    const Corpus a = generate_corpus(small_spec(11)), b = generate_corpus(small_spec(11));
    CHECK(a.entries == b.entries);
    CHECK(a.images == b.images);
    CHECK_FALSE(generate_corpus(small_spec(12)).images == a.images);
  }
  SUBCASE("attribute edits and swaps share their base identity") {
    const Corpus c = generate_corpus(small_spec(13));
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      const auto fam = family_of(c.entries[i].label);
      if (fam == FamilyKind::patch_edit_am || fam == FamilyKind::blend_boundary_fs ||
          fam == FamilyKind::smooth_real)
        CHECK(c.entries[i].identity.has_value());
      else
        CHECK_FALSE(c.entries[i].identity.has_value());
    }
  }
  SUBCASE("zero strength leaves the base bit-exact") {
    CorpusSpec s;
    s.seed = 5;
    s.image_size = 32;
    s.count(FamilyKind::grid_artifact_gan) = 3;
    s.artifact_strength(FamilyKind::grid_artifact_gan) = 0.0;
    const Corpus c = generate_corpus(s);
    for (std::size_t i = 0; i < 3; ++i) CHECK(c.images[i] == render_real(entry_stream(5, i), 32));
    const Image base = render_real(1, 32);
    for (FamilyKind f : kAllFamilies) CHECK(apply_family({f, 0.0}, base, 2, &base) == base);
  }
  SUBCASE("pixel values stay in range") {
    const Corpus c = generate_corpus(small_spec(14));
    for (const Image& img : c.images)
      for (double v : img.pixels) CHECK((v >= 0.0 && v <= 1.0));
  }
  SUBCASE("write failures name the path") {
    const auto dir = temp_dir("cael_blocked");
    std::ofstream(dir / "file") << "x";
    try {
      write_corpus(generate_corpus(small_spec(1)), dir / "file" / "sub");
      FAIL("expected a write error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("file") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
  }
  CHECK_THROWS(generate_corpus([] {
    CorpusSpec s;
    s.image_size = 48;
    return s;
  }()));
}

TEST_CASE("grid family adds annulus energy over reals") {
  CorpusSpec s;
  s.seed = 21;
  s.image_size = 64;
  s.count(FamilyKind::smooth_real) = 40;
  s.count(FamilyKind::grid_artifact_gan) = 40;
  const Corpus c = generate_corpus(s);
  std::vector<Image> reals(c.images.begin(), c.images.begin() + 40), gans(c.images.begin() + 40, c.images.end());
  const Plane r = mean_spectrum(reals), g = mean_spectrum(gans);
  Plane diff = g;
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= r.values[i];
  // Checkerboard fundamentals sit at 2*sqrt(2)/period of the half-band radius.
  CHECK(annulus_mean(diff, 0.3, 0.8) > 0.05);
}

TEST_CASE("corpus spec keys") {
  CorpusSpec s;
  s.apply(KeyValues::parse("gen.smooth_real = 5\ngen.strength.grid_artifact_gan = 0.5\ngen.split = 0.6,0.2,0.2"));
  CHECK(s.count(FamilyKind::smooth_real) == 5);
  CHECK(s.artifact_strength(FamilyKind::grid_artifact_gan) == 0.5);
  CHECK(s.ratios.val == 0.2);
  KeyValues kv;
  s.export_to(kv);
  CorpusSpec t;
  t.apply(kv);
  CHECK(t.counts == s.counts);
  CHECK_THROWS_AS(s.apply(KeyValues::parse("gen.unknown = 1")), ConfigError);
}

TEST_CASE("label levels") {
  CHECK(level_classes(LabelLevel::binary) == 2);
  CHECK(level_classes(LabelLevel::forgery) == 4);
  CHECK(level_classes(LabelLevel::generator) == 5);
  std::set<int> gen;
  for (FamilyKind f : kAllFamilies) gen.insert(class_index(family_label(f), LabelLevel::generator));
  CHECK(gen == std::set<int>{0, 1, 2, 3, 4});
  CHECK(class_index(family_label(FamilyKind::patch_edit_am), LabelLevel::forgery) == 2);
  CHECK(class_index(family_label(FamilyKind::blend_boundary_fs), LabelLevel::binary) == 1);
}
