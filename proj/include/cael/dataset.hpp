#pragma once

// Four-level forgery taxonomy, tab-separated manifests, identity-exclusive
// splits and the procedural synthetic corpus.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cael/image.hpp"
#include "cael/keyvalue.hpp"

namespace cael {

enum class Authenticity { real, fake };
enum class ForgeryType { none, efs, am, fs };
enum class MethodFamily { none, diffusion, gan };

std::string_view authenticity_name(Authenticity a);
std::string_view forgery_name(ForgeryType f);  // "EFS", "AM", "FS", "none"
std::string_view method_name(MethodFamily m);

struct TaxonomyLabel {
  Authenticity level1 = Authenticity::real;
  ForgeryType level2 = ForgeryType::none;
  MethodFamily level3 = MethodFamily::none;
  std::string level4 = "none";  // generator name

  bool operator==(const TaxonomyLabel&) const = default;
  // Empty when the label is consistent, otherwise the reason.
  std::string problem() const;
};

enum class Split { train, val, test };
std::string_view split_name(Split s);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  TaxonomyLabel label;
  Split split = Split::train;
  std::optional<std::int64_t> identity;

  bool operator==(const ManifestEntry&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  explicit ManifestError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

std::string format_manifest(std::span<const ManifestEntry> entries);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
// Parses and validates; every problem found is reported in one ManifestError.
// When base_dir is given, image paths are checked for existence relative to it.
std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::optional<std::filesystem::path>& base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
// Label invariants and identity exclusivity across splits.
std::vector<std::string> validate_entries(std::span<const ManifestEntry> entries);

// Synthetic families standing in for real and generated faces.
enum class FamilyKind {
  smooth_real,
  grid_artifact_gan,
  low_artifact_diffusion,
  patch_edit_am,
  blend_boundary_fs,
};
inline constexpr std::size_t kFamilyCount = 5;
inline constexpr std::array<FamilyKind, kFamilyCount> kAllFamilies{
    FamilyKind::smooth_real, FamilyKind::grid_artifact_gan, FamilyKind::low_artifact_diffusion,
    FamilyKind::patch_edit_am, FamilyKind::blend_boundary_fs};

std::string_view family_name(FamilyKind f);
FamilyKind parse_family(std::string_view s);
std::string_view family_dir(FamilyKind f);
TaxonomyLabel family_label(FamilyKind f);
std::optional<FamilyKind> family_of(const TaxonomyLabel& label);

struct SyntheticFamily {
  FamilyKind kind = FamilyKind::smooth_real;
  double artifact_strength = 1.0;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusSpec {
  std::array<std::size_t, kFamilyCount> counts{};
  std::array<double, kFamilyCount> strength{1.0, 1.0, 1.0, 1.0, 1.0};
  std::size_t image_size = 64;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::size_t& count(FamilyKind f) { return counts[static_cast<std::size_t>(f)]; }
  std::size_t count(FamilyKind f) const { return counts[static_cast<std::size_t>(f)]; }
  double& artifact_strength(FamilyKind f) { return strength[static_cast<std::size_t>(f)]; }
  double artifact_strength(FamilyKind f) const { return strength[static_cast<std::size_t>(f)]; }

  // Keys: gen.<family>=count, gen.strength.<family>, gen.image_size,
  // gen.split=train,val,test. Unknown "gen.*" keys are rejected.
  void apply(const KeyValues& kv);
  void export_to(KeyValues& kv) const;
};

struct Corpus {
  std::vector<ManifestEntry> entries;
  std::vector<Image> images;  // parallel to entries
};

// Seed of the RNG stream owned by entry `index` of a corpus seeded with `seed`.
std::uint64_t entry_stream(std::uint64_t corpus_seed, std::size_t index);

// The smooth real image drawn from one stream.
Image render_real(std::uint64_t stream, std::size_t size);
// Adds a family's artefact to `base`. `donor` is the second face for face swaps.
Image apply_family(const SyntheticFamily& family, const Image& base, std::uint64_t stream,
                   const Image* donor = nullptr);

// Deterministic in (spec). Entries are ordered by family then index, and
// splits are assigned with split_corpus(entries, spec.ratios, spec.seed).
Corpus generate_corpus(const CorpusSpec& spec);
// Writes images and manifest.tsv under dir; failures name the path.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

struct SplitOptions {
  // Fail unless every split with a positive ratio receives an identity.
  bool require_every_split = false;
};

// Identity groups are dealt to splits as units; identity-free entries are
// divided per family by count. Counts use the largest-remainder rule.
std::vector<ManifestEntry> split_corpus(std::vector<ManifestEntry> entries, const SplitRatios& ratios,
                                        std::uint64_t seed, const SplitOptions& options = {});

// Largest-remainder apportionment of `total` items over the three ratios.
std::array<std::size_t, 3> apportion(std::size_t total, const SplitRatios& ratios);

// Classification levels used by the multi-class protocols.
enum class LabelLevel { binary, forgery, generator };
std::string_view level_name(LabelLevel l);
LabelLevel parse_level(std::string_view s);
std::size_t level_classes(LabelLevel l);
// real=0; forgery: EFS=1, AM=2, FS=3; generator: gan EFS=1, diffusion EFS=2, AM=3, FS=4.
int class_index(const TaxonomyLabel& label, LabelLevel level);

}  // namespace cael
