#include "cael/model.hpp"

#include <array>
#include <stdexcept>

#include "cael/edges.hpp"

namespace cael {

namespace {

Tensor class_row(const Tensor& tokens) { return token_rows(tokens, 0, 1); }

Tensor patch_rows(const Tensor& tokens) { return token_rows(tokens, 1, tokens.dim(1) - 1); }

Tensor with_class_row(const Tensor& cls, const Tensor& patches) {
  const std::array<Tensor, 2> parts{cls, patches};
  return concat(parts, 1);
}

// [B,T,D] -> [B,1,D]
Tensor pool_rows(const Tensor& x) {
  const std::size_t b = x.dim(0), d = x.dim(2);
  return reshape(mean_axis(x, 1), {b, 1, d});
}

Tensor run_stage(const std::vector<Conv>& convs, Tensor x) {
  for (const Conv& c : convs) x = gelu(c(x));
  return x;
}

std::vector<Conv> make_stem(ParamBuilder& pb, const std::string& name,
                            const std::vector<std::size_t>& channels) {
  std::vector<Conv> out;
  for (std::size_t i = 0; i + 1 < channels.size(); ++i)
    out.emplace_back(pb, join_name(name, "conv" + std::to_string(i)), channels[i], channels[i + 1], 2);
  return out;
}

void expect_shape(std::string_view op, const Tensor& t, const Shape& want) {
  if (t.shape() != want) shape_mismatch(op, "unexpected shape", t.shape(), want);
}

}  // namespace

Stems::Stems(ParamBuilder& pb, const CaelConfig& cfg) {
  if (cfg.branches.fine)
    fine = make_stem(pb, "stem.fine", {3, 16, 32, 64, 128, cfg.fine_channels});
  if (cfg.branches.coarse) coarse = make_stem(pb, "stem.coarse", {3, 32, cfg.coarse_channels});
  if (cfg.branches.edge) edge = make_stem(pb, "stem.edge", {1, 32, cfg.coarse_channels});
}

StemOutput Stems::forward(const Tensor& appearance, const Tensor& edge_image) const {
  StemOutput out;
  if (!fine.empty() || !coarse.empty()) {
    if (appearance.rank() != 4 || appearance.dim(1) != 3)
      shape_mismatch("stems", "appearance must be [B,3,H,W]", appearance.shape(), Shape{0, 3, 0, 0});
    if (appearance.dim(2) % 32 != 0 || appearance.dim(3) != appearance.dim(2))
      shape_mismatch("stems", "input must be square with side a multiple of 32", appearance.shape(),
                     Shape{appearance.dim(0), 3, 32, 32});
  }
  if (!fine.empty()) out.fine = run_stage(fine, appearance);
  if (!coarse.empty()) out.coarse = run_stage(coarse, appearance);
  if (!edge.empty()) {
    if (!edge_image.defined() || edge_image.rank() != 4 || edge_image.dim(1) != 1)
      throw ShapeError("stems: edge branch needs a [B,1,H,W] edge image");
    if (appearance.defined() && (edge_image.dim(2) != appearance.dim(2) ||
                                 edge_image.dim(3) != appearance.dim(3)))
      shape_mismatch("stems", "edge and appearance sizes differ", edge_image.shape(),
                     appearance.shape());
    if (edge_image.dim(2) % 32 != 0 || edge_image.dim(3) != edge_image.dim(2))
      shape_mismatch("stems", "input must be square with side a multiple of 32", edge_image.shape(),
                     Shape{edge_image.dim(0), 1, 32, 32});
    out.edge = run_stage(edge, edge_image);
  }
  return out;
}

BranchTokenizer::BranchTokenizer(ParamBuilder& pb, const std::string& name,
                                 std::size_t in_features, std::size_t dim, std::size_t tokens,
                                 std::size_t patch_)
    : proj(pb, join_name(name, "proj"), in_features, dim),
      cls(pb.make(join_name(name, "cls"), {1, 1, dim}, Init::trunc_normal)),
      pos(pb.make(join_name(name, "pos"), {tokens + 1, dim}, Init::trunc_normal)),
      patch(patch_) {}

Tensor BranchTokenizer::forward(const Tensor& grid) const {
  if (grid.rank() != 4 || grid.dim(2) % patch != 0 || grid.dim(3) % patch != 0)
    shape_mismatch("tokenize", "grid not divisible by patch size", grid.shape(), Shape{patch, patch});
  const Tensor tokens = proj(patchify(grid, patch));
  if (tokens.dim(1) + 1 != pos.dim(0))
    shape_mismatch("tokenize", "token count differs from positional table", tokens.shape(),
                   pos.shape());
  return add(with_class_row(repeat_leading(cls, grid.dim(0)), tokens), pos);
}

Tokenizer::Tokenizer(ParamBuilder& pb, const CaelConfig& cfg) {
  const std::size_t n = cfg.tokens();
  const std::size_t patch_in = cfg.coarse_channels * cfg.patch * cfg.patch;
  if (cfg.branches.fine)
    fine = BranchTokenizer(pb, "tokens.fine", cfg.fine_channels, cfg.dim, n, 1);
  if (cfg.branches.coarse)
    coarse = BranchTokenizer(pb, "tokens.coarse", patch_in, cfg.wide_dim(), n, cfg.patch);
  if (cfg.branches.edge)
    edge = BranchTokenizer(pb, "tokens.edge", patch_in, cfg.wide_dim(), n, cfg.patch);
}

BranchState Tokenizer::forward(const StemOutput& stems) const {
  BranchState s;
  if (stems.fine.defined()) s.fine = fine.forward(stems.fine);
  if (stems.coarse.defined()) s.coarse = coarse.forward(stems.coarse);
  if (stems.edge.defined()) s.edge = edge.forward(stems.edge);
  return s;
}

CrossDirection::CrossDirection(ParamBuilder& pb, const std::string& name, std::size_t self_dim,
                               std::size_t other_dim, std::size_t heads_)
    : pre_norm(pb, join_name(name, "pre_norm"), self_dim),
      to_other(pb, join_name(name, "to_other"), self_dim, other_dim),
      norm(pb, join_name(name, "norm"), other_dim),
      q(pb, join_name(name, "q"), other_dim, other_dim),
      k(pb, join_name(name, "k"), other_dim, other_dim),
      v(pb, join_name(name, "v"), other_dim, other_dim),
      out(pb, join_name(name, "out"), other_dim, other_dim),
      back_norm(pb, join_name(name, "back_norm"), other_dim),
      back(pb, join_name(name, "back"), other_dim, self_dim),
      heads(heads_) {}

Tensor CrossDirection::forward(const Tensor& cls, const Tensor& patches, AttentionTrace* trace,
                               const std::string& site) const {
  const Tensor p = to_other(gelu(pre_norm(cls)));
  if (p.dim(2) != patches.dim(2))
    shape_mismatch("cross_attention", "projected class token width", p.shape(), patches.shape());
  const Tensor pn = norm(p);
  const Tensor kv = norm(patches);
  const Tensor a = add(p, out(multi_head_attention(q(pn), k(kv), v(kv), heads, trace, site)));
  return add(cls, back(gelu(back_norm(a))));
}

CrossAttentionBlock::CrossAttentionBlock(ParamBuilder& pb, const std::string& name, std::size_t d,
                                         std::size_t heads)
    : fine_to_coarse(pb, join_name(name, "fine"), d, 2 * d, heads),
      coarse_to_fine(pb, join_name(name, "coarse"), 2 * d, d, heads) {}

void CrossAttentionBlock::forward(Tensor& fine, Tensor& coarse, AttentionTrace* trace) const {
  if (fine.dim(1) != coarse.dim(1))
    shape_mismatch("cross_attention", "token counts differ", fine.shape(), coarse.shape());
  const Tensor fine_patches = patch_rows(fine);
  const Tensor coarse_patches = patch_rows(coarse);
  const Tensor f = fine_to_coarse.forward(class_row(fine), coarse_patches, trace, "cross.fine");
  const Tensor c = coarse_to_fine.forward(class_row(coarse), fine_patches, trace, "cross.coarse");
  fine = with_class_row(f, fine_patches);
  coarse = with_class_row(c, coarse_patches);
}

AecaSide::AecaSide(ParamBuilder& pb, const std::string& name, std::size_t edge_dim,
                   std::size_t appearance_dim, std::size_t heads_)
    : project(pb, join_name(name, "project"), edge_dim, appearance_dim),
      q(pb, join_name(name, "q"), appearance_dim, appearance_dim),
      k(pb, join_name(name, "k"), appearance_dim, appearance_dim),
      v(pb, join_name(name, "v"), appearance_dim, appearance_dim),
      back(pb, join_name(name, "back"), appearance_dim, edge_dim),
      heads(heads_) {}

Tensor AecaSide::forward(const Tensor& edge, const Tensor& appearance, QueryMode mode,
                         AttentionTrace* trace, const std::string& site) const {
  if (edge.dim(1) != appearance.dim(1))
    shape_mismatch("aeca", "token counts differ", edge.shape(), appearance.shape());
  const std::size_t n = edge.dim(1) - 1;
  if (mode == QueryMode::patch && n == 0)
    throw ShapeError("aeca: patch queries need at least one patch token");
  const Tensor cls_e = class_row(edge);
  const Tensor projected = mode == QueryMode::cls ? project(cls_e) : project(edge);
  const Tensor all = with_class_row(class_row(projected), patch_rows(appearance));
  Tensor queries = projected;
  if (mode == QueryMode::patch) queries = patch_rows(projected);
  Tensor fused = multi_head_attention(q(queries), k(all), v(all), heads, trace, site);
  if (mode != QueryMode::cls) fused = pool_rows(fused);
  return add(cls_e, back(fused));
}

Aeca::Aeca(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg) : mode(cfg.query) {
  if (cfg.branches.fine)
    fine = AecaSide(pb, join_name(name, "fine"), cfg.wide_dim(), cfg.dim, cfg.heads);
  if (cfg.branches.coarse)
    coarse = AecaSide(pb, join_name(name, "coarse"), cfg.wide_dim(), cfg.wide_dim(), cfg.heads);
}

AecaOutput Aeca::forward(const Tensor& fine_tokens, const Tensor& coarse_tokens,
                         const Tensor& edge, AttentionTrace* trace) const {
  if (!fine_tokens.defined() && !coarse_tokens.defined())
    throw std::invalid_argument("aeca: needs at least one appearance branch");
  AecaOutput out;
  Tensor cls;
  if (fine_tokens.defined()) {
    out.cls_fine = fine.forward(edge, fine_tokens, mode, trace, "aeca.fine");
    cls = out.cls_fine;
  }
  if (coarse_tokens.defined()) {
    out.cls_coarse = coarse.forward(edge, coarse_tokens, mode, trace, "aeca.coarse");
    cls = cls.defined() ? add(cls, out.cls_coarse) : out.cls_coarse;
  }
  out.tokens = with_class_row(cls, patch_rows(edge));
  expect_shape("aeca", out.tokens, edge.shape());
  return out;
}

PooledFusion::PooledFusion(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg)
    : mode(cfg.fusion), use_fine(cfg.branches.fine), use_coarse(cfg.branches.coarse) {
  const std::size_t wide = cfg.wide_dim();
  if (mode == FusionMode::summation) {
    if (use_fine) from_fine = Linear(pb, join_name(name, "from_fine"), cfg.dim, wide);
    if (use_coarse) from_coarse = Linear(pb, join_name(name, "from_coarse"), wide, wide);
  } else if (mode == FusionMode::concatenation) {
    const std::size_t in = wide + (use_fine ? cfg.dim : 0) + (use_coarse ? wide : 0);
    mix = Linear(pb, join_name(name, "mix"), in, wide);
  }
}

Tensor PooledFusion::forward(const Tensor& fine_tokens, const Tensor& coarse_tokens,
                             const Tensor& edge) const {
  const Tensor cls_e = class_row(edge);
  Tensor cls = cls_e;
  if (mode == FusionMode::summation) {
    if (use_fine) cls = add(cls, from_fine(pool_rows(patch_rows(fine_tokens))));
    if (use_coarse) cls = add(cls, from_coarse(pool_rows(patch_rows(coarse_tokens))));
  } else {
    std::vector<Tensor> parts{cls_e};
    if (use_fine) parts.push_back(pool_rows(patch_rows(fine_tokens)));
    if (use_coarse) parts.push_back(pool_rows(patch_rows(coarse_tokens)));
    cls = add(cls_e, mix(concat(parts, 2)));
  }
  return with_class_row(cls, patch_rows(edge));
}

MaetBlock::MaetBlock(ParamBuilder& pb, const std::string& name, const CaelConfig& cfg)
    : fuse_edge(cfg.aeca && cfg.branches.edge && (cfg.branches.fine || cfg.branches.coarse)),
      use_attention_fusion(cfg.fusion == FusionMode::cross_attention),
      branches(cfg.branches) {
  const std::size_t wide = cfg.wide_dim();
  auto encoders = [&](std::size_t depth, const std::string& tag, std::size_t dim) {
    std::vector<EncoderBlock> out;
    for (std::size_t i = 0; i < depth; ++i)
      out.emplace_back(pb, join_name(name, tag + "." + std::to_string(i)), dim, cfg.heads,
                       cfg.mlp_ratio);
    return out;
  };
  if (branches.fine) fine_encoders = encoders(cfg.S, "fine", cfg.dim);
  if (branches.coarse) coarse_encoders = encoders(cfg.L, "coarse", wide);
  if (branches.edge) edge_encoders = encoders(cfg.E, "edge", wide);
  if (branches.fine && branches.coarse)
    for (std::size_t i = 0; i < cfg.N; ++i)
      cross.emplace_back(pb, join_name(name, "cross." + std::to_string(i)), cfg.dim, cfg.heads);
  if (fuse_edge) {
    if (use_attention_fusion)
      aeca = Aeca(pb, join_name(name, "aeca"), cfg);
    else
      pooled = PooledFusion(pb, join_name(name, "fusion"), cfg);
  }
}

BranchState MaetBlock::forward(const BranchState& in, AttentionTrace* trace) const {
  BranchState s = in;
  auto run = [&](const std::vector<EncoderBlock>& blocks, Tensor& x, const char* site) {
    const Shape before = x.shape();
    for (const EncoderBlock& b : blocks) x = b.forward(x, trace, site);
    expect_shape("maet_block", x, before);
  };
  if (branches.fine) run(fine_encoders, s.fine, "mhsa.fine");
  if (branches.coarse) run(coarse_encoders, s.coarse, "mhsa.coarse");
  if (branches.edge) run(edge_encoders, s.edge, "mhsa.edge");
  for (const CrossAttentionBlock& c : cross) c.forward(s.fine, s.coarse, trace);
  if (fuse_edge) {
    const Tensor f = branches.fine ? s.fine : Tensor();
    const Tensor c = branches.coarse ? s.coarse : Tensor();
    s.edge = use_attention_fusion ? aeca.forward(f, c, s.edge, trace).tokens
                                  : pooled.forward(f, c, s.edge);
  }
  return s;
}

Expert::Expert(ParamBuilder& pb, const std::string& name, std::size_t dim, std::size_t classes)
    : norm(pb, join_name(name, "norm"), dim), head(pb, join_name(name, "head"), dim, classes) {}

Tensor Expert::forward(const Tensor& tokens) const {
  const Tensor cls = reshape(class_row(tokens), {tokens.dim(0), tokens.dim(2)});
  return head(norm(cls));
}

CaelModules build_modules(ParamBuilder& pb, const CaelConfig& cfg) {
  cfg.validate();
  CaelModules m;
  m.stems = Stems(pb, cfg);
  m.tokenizer = Tokenizer(pb, cfg);
  for (std::size_t i = 0; i < cfg.K; ++i)
    m.blocks.emplace_back(pb, "maet." + std::to_string(i), cfg);
  if (cfg.branches.fine) m.fine_expert = Expert(pb, "expert.fine", cfg.dim, cfg.num_classes);
  if (cfg.branches.coarse)
    m.coarse_expert = Expert(pb, "expert.coarse", cfg.wide_dim(), cfg.num_classes);
  if (cfg.branches.edge)
    m.edge_expert = Expert(pb, "expert.edge", cfg.wide_dim(), cfg.num_classes);
  return m;
}

std::size_t count_parameters(const CaelConfig& cfg) {
  ParamBuilder pb = ParamBuilder::counting();
  build_modules(pb, cfg);
  return pb.count();
}

CaelModel::CaelModel(const CaelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), builder_(seed), modules_(build_modules(builder_, cfg_)) {}

ModelOutput CaelModel::forward(const Tensor& appearance, const Tensor& edge,
                               AttentionTrace* trace) const {
  const StemOutput stems = modules_.stems.forward(appearance, edge);
  BranchState s = modules_.tokenizer.forward(stems);
  for (const MaetBlock& b : modules_.blocks) s = b.forward(s, trace);
  ModelOutput out;
  Tensor total;
  std::size_t active = 0;
  auto accumulate = [&](const Tensor& logits) {
    total = total.defined() ? add(total, logits) : logits;
    ++active;
  };
  if (cfg_.branches.fine) accumulate(out.fine_logits = modules_.fine_expert.forward(s.fine));
  if (cfg_.branches.coarse) accumulate(out.coarse_logits = modules_.coarse_expert.forward(s.coarse));
  if (cfg_.branches.edge) accumulate(out.edge_logits = modules_.edge_expert.forward(s.edge));
  out.logits = active == 1 ? total : scale(total, 1.0 / static_cast<double>(active));
  out.tokens = std::move(s);
  return out;
}

ModelOutput CaelModel::forward(std::span<const Image> images, AttentionTrace* trace) const {
  const Tensor appearance = images_to_tensor(images);
  const Tensor edge = cfg_.branches.edge ? edge_tensor(images, cfg_.edge_operator) : Tensor();
  return forward(appearance, edge, trace);
}

Tensor images_to_tensor(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("images_to_tensor: empty batch");
  const Image& first = images.front();
  const std::size_t per = first.pixels.size();
  std::vector<double> data;
  data.reserve(per * images.size());
  for (const Image& img : images) {
    if (img.channels != first.channels || img.height != first.height || img.width != first.width)
      shape_mismatch("images_to_tensor", "images differ in shape",
                     Shape{img.channels, img.height, img.width},
                     Shape{first.channels, first.height, first.width});
    data.insert(data.end(), img.pixels.begin(), img.pixels.end());
  }
  return Tensor({images.size(), first.channels, first.height, first.width}, std::move(data));
}

Tensor edge_tensor(std::span<const Image> images, OperatorKind op, const EdgeParams& params) {
  std::vector<Image> edges;
  edges.reserve(images.size());
  for (const Image& img : images) edges.push_back(edge_transform(img, op, params));
  return images_to_tensor(edges);
}

}  // namespace cael
