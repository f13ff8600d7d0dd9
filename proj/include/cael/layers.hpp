#pragma once

// Parameterised building blocks shared by the CAEL modules.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cael/ops.hpp"
#include "cael/params.hpp"

namespace cael {

// Records attention probabilities and score-step multiply counts per call site.
struct AttentionTrace {
  struct Map {
    std::string site;
    Tensor probs;  // [B*heads, Tq, Tk]
  };
  bool keep_maps = true;
  std::vector<Map> maps;
  std::map<std::string, std::uint64_t> score_mults;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(ParamBuilder& pb, const std::string& name, std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParamBuilder& pb, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

struct Conv {
  Tensor weight;  // [out, in, 3, 3]
  Tensor bias;
  std::size_t stride = 2;

  Conv() = default;
  Conv(ParamBuilder& pb, const std::string& name, std::size_t in, std::size_t out,
       std::size_t stride);
  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, stride, 1); }
};

// Scaled dot-product attention over `heads` heads.
// q [B,Tq,D], k/v [B,Tk,D] -> [B,Tq,D].
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            AttentionTrace* trace = nullptr, const std::string& site = "attn");

// Pre-norm ViT encoder block: x + MHSA(LN(x)), then x + MLP(LN(x)).
struct EncoderBlock {
  LayerNorm norm1;
  Linear q, k, v, proj;
  LayerNorm norm2;
  Linear fc1, fc2;
  std::size_t heads = 1;

  EncoderBlock() = default;
  EncoderBlock(ParamBuilder& pb, const std::string& name, std::size_t dim, std::size_t heads,
               double mlp_ratio);
  Tensor forward(const Tensor& x, AttentionTrace* trace = nullptr,
                 const std::string& site = "mhsa") const;
};

// Rows [start, start+len) of a [B,T,D] token tensor.
inline Tensor token_rows(const Tensor& x, std::size_t start, std::size_t len) {
  return slice(x, 1, start, len);
}

}  // namespace cael
