#pragma once

#include <array>
#include <string>
#include <vector>

#include "numlex/rng.hpp"
#include "numlex/tensor.hpp"

namespace numlex {

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [1, out]
  Linear() = default;
  Linear(ParamSet& ps, const std::string& prefix, size_t in, size_t out, Rng& rng);
  // Rebind to existing parameters (e.g. after checkpoint load).
  Linear(ParamSet& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const;  // x: [n, in]
};

// Multi-layer, optionally bidirectional LSTM over a sequence of row vectors.
struct Lstm {
  size_t input_dim = 0, hidden = 0, layers = 1;
  bool bidirectional = false;

  struct DirParams {
    Tensor wx;  // [in, 4H], gate order i|f|g|o
    Tensor wh;  // [H, 4H]
    Tensor b;   // [1, 4H]
  };
  std::vector<std::array<DirParams, 2>> params;  // [layer][direction]

  Lstm() = default;
  Lstm(ParamSet& ps, const std::string& prefix, size_t input_dim, size_t hidden, size_t layers,
       bool bidirectional, Rng& rng);
  Lstm(ParamSet& ps, const std::string& prefix, size_t input_dim, size_t hidden, size_t layers,
       bool bidirectional);

  struct Output {
    Tensor seq;                        // [T, H * dirs]
    std::vector<Tensor> final_hidden;  // one [1, H] per (layer, direction)
  };
  Output forward(const Tensor& seq) const;  // seq: [T, input_dim]

  size_t directions() const { return bidirectional ? 2 : 1; }
};

// Single pre-norm transformer encoder layer: multi-head self-attention and a
// feed-forward block, each behind a residual connection.
struct TransformerEncoderLayer {
  size_t dim = 0, heads = 0, ff_dim = 0;
  Tensor wq, wk, wv, wo;          // [dim, dim]
  Tensor bq, bk, bv, bo;          // [1, dim]
  Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  Tensor w1, b1, w2, b2;          // feed-forward

  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(ParamSet& ps, const std::string& prefix, size_t dim, size_t heads,
                          size_t ff_dim, Rng& rng);
  TransformerEncoderLayer(ParamSet& ps, const std::string& prefix, size_t dim, size_t heads,
                          size_t ff_dim);
  Tensor forward(const Tensor& x) const;  // x: [T, dim]
};

enum class Activation { Relu, Tanh };

struct Mlp {
  std::vector<Linear> linears;
  Activation act = Activation::Relu;

  Mlp() = default;
  Mlp(ParamSet& ps, const std::string& prefix, size_t in, const std::vector<size_t>& hidden,
      size_t out, Activation act, Rng& rng);
  Mlp(ParamSet& ps, const std::string& prefix, size_t in, const std::vector<size_t>& hidden,
      size_t out, Activation act);
  Tensor operator()(const Tensor& x) const;
};

}  // namespace numlex
