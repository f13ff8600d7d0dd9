#include "cael/layers.hpp"

#include <cmath>

namespace cael {

Linear::Linear(ParamBuilder& pb, const std::string& name, std::size_t in, std::size_t out)
    : weight(pb.make(join_name(name, "weight"), {in, out}, Init::trunc_normal)),
      bias(pb.make(join_name(name, "bias"), {out}, Init::zeros)) {}

LayerNorm::LayerNorm(ParamBuilder& pb, const std::string& name, std::size_t dim)
    : gamma(pb.make(join_name(name, "gamma"), {dim}, Init::ones)),
      beta(pb.make(join_name(name, "beta"), {dim}, Init::zeros)) {}

Conv::Conv(ParamBuilder& pb, const std::string& name, std::size_t in, std::size_t out,
           std::size_t stride_)
    : weight(pb.make(join_name(name, "weight"), {out, in, 3, 3}, Init::kaiming, in * 9)),
      bias(pb.make(join_name(name, "bias"), {out}, Init::zeros)),
      stride(stride_) {}

namespace {

// [B,T,D] -> [B*heads, T, D/heads]
Tensor split_heads(const Tensor& x, std::size_t heads) {
  const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2);
  return reshape(transpose(reshape(x, {b, t, heads, d / heads}), 1, 2), {b * heads, t, d / heads});
}

// [B*heads, T, dh] -> [B,T,heads*dh]
Tensor merge_heads(const Tensor& x, std::size_t batch, std::size_t heads) {
  const std::size_t t = x.dim(1), dh = x.dim(2);
  return reshape(transpose(reshape(x, {batch, heads, t, dh}), 1, 2), {batch, t, heads * dh});
}

}  // namespace

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            AttentionTrace* trace, const std::string& site) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
    shape_mismatch("attention", "expected [B,T,D] inputs", q.shape(), k.shape());
  if (q.dim(0) != k.dim(0) || q.dim(2) != k.dim(2) || k.shape() != v.shape())
    shape_mismatch("attention", "query/key/value dims differ", q.shape(), k.shape());
  const std::size_t batch = q.dim(0), dim = q.dim(2);
  if (heads == 0 || dim % heads != 0)
    shape_mismatch("attention", "width not divisible by heads", q.shape(), Shape{heads});
  const std::size_t dh = dim / heads;
  const Tensor qh = split_heads(q, heads);
  const Tensor kt = transpose(split_heads(k, heads), 1, 2);
  const Tensor vh = split_heads(v, heads);
  const Tensor scores = scale(matmul(qh, kt), 1.0 / std::sqrt(static_cast<double>(dh)));
  const Tensor probs = softmax(scores);
  if (trace) {
    trace->score_mults[site] += batch * heads * q.dim(1) * k.dim(1) * dh;
    if (trace->keep_maps) trace->maps.push_back({site, probs.clone()});
  }
  return merge_heads(matmul(probs, vh), batch, heads);
}

EncoderBlock::EncoderBlock(ParamBuilder& pb, const std::string& name, std::size_t dim,
                           std::size_t heads_, double mlp_ratio)
    : norm1(pb, join_name(name, "norm1"), dim),
      q(pb, join_name(name, "attn.q"), dim, dim),
      k(pb, join_name(name, "attn.k"), dim, dim),
      v(pb, join_name(name, "attn.v"), dim, dim),
      proj(pb, join_name(name, "attn.proj"), dim, dim),
      norm2(pb, join_name(name, "norm2"), dim),
      fc1(pb, join_name(name, "mlp.fc1"), dim,
          static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(dim)))),
      fc2(pb, join_name(name, "mlp.fc2"),
          static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(dim))), dim),
      heads(heads_) {}

Tensor EncoderBlock::forward(const Tensor& x, AttentionTrace* trace, const std::string& site) const {
  const Tensor y = norm1(x);
  const Tensor a = multi_head_attention(q(y), k(y), v(y), heads, trace, site);
  const Tensor x1 = add(x, proj(a));
  return add(x1, fc2(gelu(fc1(norm2(x1)))));
}

}  // namespace cael
