#include <stdexcept>
#include <string>

#include "cael/dataset.hpp"

namespace cael {

std::string_view authenticity_name(Authenticity a) {
  return a == Authenticity::real ? "real" : "fake";
}

std::string_view forgery_name(ForgeryType f) {
  switch (f) {
    case ForgeryType::none: return "none";
    case ForgeryType::efs: return "EFS";
    case ForgeryType::am: return "AM";
    case ForgeryType::fs: return "FS";
  }
  return "?";
}

std::string_view method_name(MethodFamily m) {
  switch (m) {
    case MethodFamily::none: return "none";
    case MethodFamily::diffusion: return "diffusion";
    case MethodFamily::gan: return "gan";
  }
  return "?";
}

std::string TaxonomyLabel::problem() const {
  const bool no_generator = level4.empty() || level4 == "none";
  if (level1 == Authenticity::real) {
    if (level2 != ForgeryType::none || level3 != MethodFamily::none || !no_generator)
      return "real entries must have level2, level3 and level4 set to none";
    return {};
  }
  if (level2 == ForgeryType::none || level3 == MethodFamily::none || no_generator)
    return "fake entries need level2, level3 and level4";
  return {};
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view family_name(FamilyKind f) {
  switch (f) {
    case FamilyKind::smooth_real: return "smooth_real";
    case FamilyKind::grid_artifact_gan: return "grid_artifact_gan";
    case FamilyKind::low_artifact_diffusion: return "low_artifact_diffusion";
    case FamilyKind::patch_edit_am: return "patch_edit_am";
    case FamilyKind::blend_boundary_fs: return "blend_boundary_fs";
  }
  return "?";
}

FamilyKind parse_family(std::string_view s) {
  for (FamilyKind f : kAllFamilies)
    if (s == family_name(f) || s == family_dir(f)) return f;
  throw std::invalid_argument("unknown family '" + std::string(s) + "'");
}

std::string_view family_dir(FamilyKind f) {
  switch (f) {
    case FamilyKind::smooth_real: return "real";
    case FamilyKind::grid_artifact_gan: return "gan";
    case FamilyKind::low_artifact_diffusion: return "diffusion";
    case FamilyKind::patch_edit_am: return "am";
    case FamilyKind::blend_boundary_fs: return "fs";
  }
  return "?";
}

TaxonomyLabel family_label(FamilyKind f) {
  switch (f) {
    case FamilyKind::smooth_real: return {};
    case FamilyKind::grid_artifact_gan:
      return {Authenticity::fake, ForgeryType::efs, MethodFamily::gan, "gridgan"};
    case FamilyKind::low_artifact_diffusion:
      return {Authenticity::fake, ForgeryType::efs, MethodFamily::diffusion, "lowdiff"};
    case FamilyKind::patch_edit_am:
      return {Authenticity::fake, ForgeryType::am, MethodFamily::diffusion, "rectedit"};
    case FamilyKind::blend_boundary_fs:
      return {Authenticity::fake, ForgeryType::fs, MethodFamily::gan, "ellipseswap"};
  }
  return {};
}

std::optional<FamilyKind> family_of(const TaxonomyLabel& label) {
  for (FamilyKind f : kAllFamilies)
    if (family_label(f) == label) return f;
  return std::nullopt;
}

std::string_view level_name(LabelLevel l) {
  switch (l) {
    case LabelLevel::binary: return "coarse";
    case LabelLevel::forgery: return "forgery";
    case LabelLevel::generator: return "generator";
  }
  return "?";
}

LabelLevel parse_level(std::string_view s) {
  if (s == "coarse" || s == "binary") return LabelLevel::binary;
  if (s == "forgery") return LabelLevel::forgery;
  if (s == "generator") return LabelLevel::generator;
  throw std::invalid_argument("unknown label level '" + std::string(s) + "'");
}

std::size_t level_classes(LabelLevel l) {
  switch (l) {
    case LabelLevel::binary: return 2;
    case LabelLevel::forgery: return 4;
    case LabelLevel::generator: return 5;
  }
  return 0;
}

int class_index(const TaxonomyLabel& label, LabelLevel level) {
  if (label.level1 == Authenticity::real) return 0;
  switch (level) {
    case LabelLevel::binary: return 1;
    case LabelLevel::forgery:
      return label.level2 == ForgeryType::efs ? 1 : label.level2 == ForgeryType::am ? 2 : 3;
    case LabelLevel::generator:
      if (label.level2 == ForgeryType::efs) return label.level3 == MethodFamily::gan ? 1 : 2;
      return label.level2 == ForgeryType::am ? 3 : 4;
  }
  return 0;
}

}  // namespace cael
