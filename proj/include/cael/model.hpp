#pragma once

// The CAEL detector: convolutional stems, per-branch tokenisers, K stacked
// MAET blocks and per-branch expert heads.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cael/config.hpp"
#include "cael/image.hpp"
#include "cael/layers.hpp"

namespace cael {

// Undefined members belong to disabled branches.
struct StemOutput {
  Tensor fine;    // [B, C_f, H/32, W/32]
  Tensor coarse;  // [B, C_c, H/4, W/4]
  Tensor edge;    // [B, C_c, H/4, W/4]
};

// Token sets [B, n+1, dim]; row 0 is the class token.
struct BranchState {
  Tensor fine;    // dim d
  Tensor coarse;  // dim 2d
  Tensor edge;    // dim 2d
};

struct Stems {
  std::vector<Conv> fine, coarse, edge;

  Stems() = default;
  Stems(ParamBuilder& pb, const CaelConfig& cfg);
  // appearance [B,3,H,W], edge [B,1,H,W].
  StemOutput forward(const Tensor& appearance, const Tensor& edge) const;
};

struct BranchTokenizer {
  Linear proj;
  Tensor cls;  // [1, 1, dim]
  Tensor pos;  // [n+1, dim]
  std::size_t patch = 1;

  BranchTokenizer() = default;
  BranchTokenizer(ParamBuilder& pb, const std::string& name, std::size_t in_features,
                  std::size_t dim, std::size_t tokens, std::size_t patch);
  // grid [B,C,G,G] -> [B, n+1, dim]
  Tensor forward(const Tensor& grid) const;
};

struct Tokenizer {
  BranchTokenizer fine, coarse, edge;

  Tokenizer() = default;
  Tokenizer(ParamBuilder& pb, const CaelConfig& cfg);
  BranchState forward(const StemOutput& stems) const;
};

// One direction of the CrossViT exchange: a class token of width `self_dim`
// attends over the other branch's patch tokens (width `other_dim`).
struct CrossDirection {
  LayerNorm pre_norm;
  Linear to_other;
  LayerNorm norm;
  Linear q, k, v, out;
  LayerNorm back_norm;
  Linear back;
  std::size_t heads = 1;

  CrossDirection() = default;
  CrossDirection(ParamBuilder& pb, const std::string& name, std::size_t self_dim,
                 std::size_t other_dim, std::size_t heads);
  // cls [B,1,self_dim], patches [B,n,other_dim] -> updated cls [B,1,self_dim]
  Tensor forward(const Tensor& cls, const Tensor& patches, AttentionTrace* trace,
                 const std::string& site) const;
};

struct CrossAttentionBlock {
  CrossDirection fine_to_coarse, coarse_to_fine;

  CrossAttentionBlock() = default;
  CrossAttentionBlock(ParamBuilder& pb, const std::string& name, std::size_t d,
                      std::size_t heads);
  // Only the class tokens change.
  void forward(Tensor& fine, Tensor& coarse, AttentionTrace* trace = nullptr) const;
};

// Appearance-edge cross-attention against one appearance granularity.
struct AecaSide {
  Linear project;  // F: 2d -> appearance dim
  Linear q, k, v;
  Linear back;  // appearance dim -> 2d
  std::size_t heads = 1;

  AecaSide() = default;
  AecaSide(ParamBuilder& pb, const std::string& name, std::size_t edge_dim,
           std::size_t appearance_dim, std::size_t heads);
  // edge tokens [B,n+1,2d], appearance tokens [B,n+1,dim] -> fused class token [B,1,2d]
  Tensor forward(const Tensor& edge, const Tensor& appearance, QueryMode mode,
                 AttentionTrace* trace, const std::string& site) const;
};

struct AecaOutput {
  Tensor tokens;      // T_i^e [B,n+1,2d]
  Tensor cls_fine;    // T_cls^{ef}, undefined when the fine branch is off
  Tensor cls_coarse;  // T_cls^{ec}, undefined when the coarse branch is off
};

struct Aeca {
  AecaSide fine, coarse;
  QueryMode mode = QueryMode::cls;

  Aeca() = default;
  Aeca(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg);
  // fine / coarse may be undefined; at least one must be present.
  AecaOutput forward(const Tensor& fine, const Tensor& coarse, const Tensor& edge,
                     AttentionTrace* trace = nullptr) const;
};

// Non-attention alternatives for the edge class-token update.
struct PooledFusion {
  FusionMode mode = FusionMode::summation;
  Linear from_fine, from_coarse;  // summation
  Linear mix;                     // concatenation
  bool use_fine = false, use_coarse = false;

  PooledFusion() = default;
  PooledFusion(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg);
  Tensor forward(const Tensor& fine, const Tensor& coarse, const Tensor& edge) const;
};

struct MaetBlock {
  std::vector<EncoderBlock> fine_encoders, coarse_encoders, edge_encoders;
  std::vector<CrossAttentionBlock> cross;
  Aeca aeca;
  PooledFusion pooled;
  bool fuse_edge = false;
  bool use_attention_fusion = true;
  BranchSet branches;

  MaetBlock() = default;
  MaetBlock(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg);
  BranchState forward(const BranchState& in, AttentionTrace* trace = nullptr) const;
};

struct Expert {
  LayerNorm norm;
  Linear head;

  Expert() = default;
  Expert(ParamBuilder& pb, const std::string& name, std::size_t dim, std::size_t classes);
  Tensor forward(const Tensor& tokens) const;  // uses row 0
};

struct ModelOutput {
  Tensor logits;  // [B, classes], mean of the active experts
  Tensor fine_logits, coarse_logits, edge_logits;
  BranchState tokens;  // after the last MAET block
};

// Builds (or counts, with a counting builder) every module in `cfg`.
struct CaelModules {
  Stems stems;
  Tokenizer tokenizer;
  std::vector<MaetBlock> blocks;
  Expert fine_expert, coarse_expert, edge_expert;
};
CaelModules build_modules(ParamBuilder& pb, const CaelConfig& cfg);

class CaelModel {
 public:
  CaelModel(const CaelConfig& cfg, std::uint64_t seed);

  const CaelConfig& config() const { return cfg_; }
  ParamStore& params() { return builder_.store(); }
  const ParamStore& params() const { return builder_.store(); }

  // appearance [B,3,H,W], edge [B,1,H,W] (ignored when the edge branch is off).
  ModelOutput forward(const Tensor& appearance, const Tensor& edge,
                      AttentionTrace* trace = nullptr) const;
  // Computes the edge images with cfg.edge_operator.
  ModelOutput forward(std::span<const Image> images, AttentionTrace* trace = nullptr) const;

  const CaelModules& modules() const { return modules_; }

 private:
  CaelConfig cfg_;
  ParamBuilder builder_;
  CaelModules modules_;
};

// Declares every parameter of `cfg` without allocating; returns the scalar count.
std::size_t count_parameters(const CaelConfig& cfg);

// Stacks images into [B,C,H,W]; all must share shape.
Tensor images_to_tensor(std::span<const Image> images);
// Edge maps for RGB images with the given operator, stacked [B,1,H,W].
Tensor edge_tensor(std::span<const Image> images, OperatorKind op, const EdgeParams& params = {});

}  // namespace cael
