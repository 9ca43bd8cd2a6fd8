#include "numlex/layers.hpp"

#include <cmath>

#include "numlex/errors.hpp"

namespace numlex {

Linear::Linear(ParamSet& ps, const std::string& prefix, size_t in, size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw ConfigError("Linear: dimensions must be positive");
  w = ps.add(prefix + ".w", Tensor::uniform_init(in, out, in, rng));
  b = ps.add(prefix + ".b", Tensor::zeros(1, out, true));
}

Linear::Linear(ParamSet& ps, const std::string& prefix) {
  w = ps.get(prefix + ".w");
  b = ps.get(prefix + ".b");
}

Tensor Linear::operator()(const Tensor& x) const { return add_rowvec(matmul(x, w), b); }

Lstm::Lstm(ParamSet& ps, const std::string& prefix, size_t input_dim_, size_t hidden_,
           size_t layers_, bool bidirectional_, Rng& rng)
    : input_dim(input_dim_), hidden(hidden_), layers(layers_), bidirectional(bidirectional_) {
  if (input_dim == 0 || hidden == 0 || layers == 0)
    throw ConfigError("Lstm: dimensions must be positive");
  params.resize(layers);
  for (size_t l = 0; l < layers; ++l) {
    size_t in = (l == 0) ? input_dim : hidden * directions();
    for (size_t d = 0; d < directions(); ++d) {
      std::string p = prefix + ".l" + std::to_string(l) + ".d" + std::to_string(d);
      params[l][d].wx = ps.add(p + ".wx", Tensor::uniform_init(in, 4 * hidden, in, rng));
      params[l][d].wh = ps.add(p + ".wh", Tensor::uniform_init(hidden, 4 * hidden, hidden, rng));
      params[l][d].b = ps.add(p + ".b", Tensor::zeros(1, 4 * hidden, true));
    }
  }
}

Lstm::Lstm(ParamSet& ps, const std::string& prefix, size_t input_dim_, size_t hidden_,
           size_t layers_, bool bidirectional_)
    : input_dim(input_dim_), hidden(hidden_), layers(layers_), bidirectional(bidirectional_) {
  params.resize(layers);
  for (size_t l = 0; l < layers; ++l)
    for (size_t d = 0; d < directions(); ++d) {
      std::string p = prefix + ".l" + std::to_string(l) + ".d" + std::to_string(d);
      params[l][d].wx = ps.get(p + ".wx");
      params[l][d].wh = ps.get(p + ".wh");
      params[l][d].b = ps.get(p + ".b");
    }
}

Lstm::Output Lstm::forward(const Tensor& seq) const {
  if (seq.cols() != input_dim) throw ShapeMismatch("Lstm: input dim mismatch");
  size_t T = seq.rows();
  Output out;
  Tensor layer_in = seq;
  for (size_t l = 0; l < layers; ++l) {
    std::vector<Tensor> dir_seqs;
    for (size_t d = 0; d < directions(); ++d) {
      const auto& p = params[l][d];
      Tensor h = Tensor::zeros(1, hidden);
      Tensor c = Tensor::zeros(1, hidden);
      std::vector<Tensor> hs(T);
      for (size_t step = 0; step < T; ++step) {
        size_t t = (d == 0) ? step : T - 1 - step;
        Tensor x_t = slice_rows(layer_in, t, 1);
        Tensor gates = add_rowvec(add(matmul(x_t, p.wx), matmul(h, p.wh)), p.b);
        Tensor ig = sigmoid(slice_cols(gates, 0, hidden));
        Tensor fg = sigmoid(slice_cols(gates, hidden, hidden));
        Tensor gg = tanh_op(slice_cols(gates, 2 * hidden, hidden));
        Tensor og = sigmoid(slice_cols(gates, 3 * hidden, hidden));
        c = add(mul(fg, c), mul(ig, gg));
        h = mul(og, tanh_op(c));
        hs[t] = h;
      }
      dir_seqs.push_back(concat_rows(hs));
      out.final_hidden.push_back(h);
    }
    layer_in = bidirectional ? concat_cols(dir_seqs) : dir_seqs[0];
  }
  out.seq = layer_in;
  return out;
}

TransformerEncoderLayer::TransformerEncoderLayer(ParamSet& ps, const std::string& prefix,
                                                 size_t dim_, size_t heads_, size_t ff_dim_,
                                                 Rng& rng)
    : dim(dim_), heads(heads_), ff_dim(ff_dim_) {
  if (dim == 0 || heads == 0 || ff_dim == 0)
    throw ConfigError("TransformerEncoderLayer: dimensions must be positive");
  if (dim % heads != 0) throw ConfigError("TransformerEncoderLayer: dim must divide by heads");
  auto w = [&](const std::string& n, size_t in, size_t out) {
    return ps.add(prefix + "." + n, Tensor::uniform_init(in, out, in, rng));
  };
  auto bvec = [&](const std::string& n, size_t out) {
    return ps.add(prefix + "." + n, Tensor::zeros(1, out, true));
  };
  wq = w("wq", dim, dim); wk = w("wk", dim, dim); wv = w("wv", dim, dim); wo = w("wo", dim, dim);
  bq = bvec("bq", dim); bk = bvec("bk", dim); bv = bvec("bv", dim); bo = bvec("bo", dim);
  ln1_g = ps.add(prefix + ".ln1_g", Tensor::from(1, dim, std::vector<double>(dim, 1.0), true));
  ln1_b = bvec("ln1_b", dim);
  ln2_g = ps.add(prefix + ".ln2_g", Tensor::from(1, dim, std::vector<double>(dim, 1.0), true));
  ln2_b = bvec("ln2_b", dim);
  w1 = w("w1", dim, ff_dim); b1 = bvec("b1", ff_dim);
  w2 = w("w2", ff_dim, dim); b2 = bvec("b2", dim);
}

TransformerEncoderLayer::TransformerEncoderLayer(ParamSet& ps, const std::string& prefix,
                                                 size_t dim_, size_t heads_, size_t ff_dim_)
    : dim(dim_), heads(heads_), ff_dim(ff_dim_) {
  auto g = [&](const std::string& n) { return ps.get(prefix + "." + n); };
  wq = g("wq"); wk = g("wk"); wv = g("wv"); wo = g("wo");
  bq = g("bq"); bk = g("bk"); bv = g("bv"); bo = g("bo");
  ln1_g = g("ln1_g"); ln1_b = g("ln1_b"); ln2_g = g("ln2_g"); ln2_b = g("ln2_b");
  w1 = g("w1"); b1 = g("b1"); w2 = g("w2"); b2 = g("b2");
}

Tensor TransformerEncoderLayer::forward(const Tensor& x) const {
  if (x.cols() != dim) throw ShapeMismatch("TransformerEncoderLayer: input dim mismatch");
  size_t hd = dim / heads;
  double scale_f = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor n1 = add_rowvec(mul_rowvec(layer_norm_rows(x), ln1_g), ln1_b);
  Tensor q = add_rowvec(matmul(n1, wq), bq);
  Tensor k = add_rowvec(matmul(n1, wk), bk);
  Tensor v = add_rowvec(matmul(n1, wv), bv);
  std::vector<Tensor> head_ctx;
  for (size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * hd, hd);
    Tensor kh = slice_cols(k, h * hd, hd);
    Tensor vh = slice_cols(v, h * hd, hd);
    Tensor att = softmax_rows(scale(matmul(qh, transpose(kh)), scale_f));
    head_ctx.push_back(matmul(att, vh));
  }
  Tensor attn_out = add_rowvec(matmul(concat_cols(head_ctx), wo), bo);
  Tensor x1 = add(x, attn_out);

  Tensor n2 = add_rowvec(mul_rowvec(layer_norm_rows(x1), ln2_g), ln2_b);
  Tensor ff = add_rowvec(matmul(relu(add_rowvec(matmul(n2, w1), b1)), w2), b2);
  return add(x1, ff);
}

Mlp::Mlp(ParamSet& ps, const std::string& prefix, size_t in, const std::vector<size_t>& hidden,
         size_t out, Activation act_, Rng& rng)
    : act(act_) {
  size_t prev = in;
  for (size_t i = 0; i < hidden.size(); ++i) {
    linears.emplace_back(ps, prefix + ".fc" + std::to_string(i), prev, hidden[i], rng);
    prev = hidden[i];
  }
  linears.emplace_back(ps, prefix + ".out", prev, out, rng);
}

Mlp::Mlp(ParamSet& ps, const std::string& prefix, size_t in, const std::vector<size_t>& hidden,
         size_t out, Activation act_)
    : act(act_) {
  for (size_t i = 0; i < hidden.size(); ++i)
    linears.emplace_back(ps, prefix + ".fc" + std::to_string(i));
  linears.emplace_back(ps, prefix + ".out");
  (void)in;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (size_t i = 0; i < linears.size(); ++i) {
    h = linears[i](h);
    if (i + 1 < linears.size()) h = (act == Activation::Relu) ? relu(h) : tanh_op(h);
  }
  return h;
}

}  // namespace numlex
