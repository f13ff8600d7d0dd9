#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "cael/edges.hpp"
#include "cael/keyvalue.hpp"

namespace cael {

enum class FusionMode { cross_attention, concatenation, summation };
enum class QueryMode { cls, patch, all };

std::string_view fusion_name(FusionMode m);
FusionMode parse_fusion(std::string_view s);
std::string_view query_name(QueryMode m);
QueryMode parse_query(std::string_view s);

struct BranchSet {
  bool fine = true;
  bool coarse = true;
  bool edge = true;

  bool empty() const { return !fine && !coarse && !edge; }
  std::size_t count() const { return std::size_t{fine} + coarse + edge; }
  // "F,C,E", "F+C", "FC" ... any separator.
  static BranchSet parse(std::string_view s);
  std::string to_string() const;  // "F+C+E"
  bool operator==(const BranchSet&) const = default;
};

// Architecture hyperparameters. Defaults are the published block counts,
// head count and token width at desk-scale input resolution.
struct CaelConfig {
  std::size_t K = 4;  // MAET blocks
  std::size_t S = 2;  // fine encoder depth
  std::size_t L = 3;  // coarse encoder depth
  std::size_t E = 3;  // edge encoder depth
  std::size_t N = 2;  // multi-grained cross-attention blocks
  std::size_t heads = 8;
  std::size_t dim = 192;  // fine token width d; coarse/edge use 2d
  std::size_t image_size = 64;
  double mlp_ratio = 4.0;
  FusionMode fusion = FusionMode::cross_attention;
  QueryMode query = QueryMode::cls;
  bool aeca = true;
  BranchSet branches;
  OperatorKind edge_operator = OperatorKind::sobel;
  std::size_t fine_channels = 192;   // C_f
  std::size_t coarse_channels = 64;  // C_c
  std::size_t patch = 8;             // patch side on the H/4 grid
  std::size_t num_classes = 2;

  std::size_t grid_fine() const { return image_size / 32; }
  std::size_t grid_coarse() const { return image_size / 4; }
  std::size_t tokens() const { return grid_fine() * grid_fine(); }  // n
  std::size_t wide_dim() const { return 2 * dim; }

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  // Reads every "model.*" key; unknown model keys are rejected.
  void apply(const KeyValues& kv);
  void export_to(KeyValues& kv) const;
};

}  // namespace cael
