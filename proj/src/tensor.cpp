#include "numlex/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "numlex/errors.hpp"
#include "numlex/rng.hpp"

namespace numlex {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

NodePtr make_node(size_t r, size_t c) {
  auto n = std::make_shared<Node>();
  n->rows = r;
  n->cols = c;
  n->value.assign(r * c, 0.0);
  return n;
}

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
  throw ShapeMismatch(std::string(op) + ": bad shape [" + std::to_string(a.rows()) + "," +
                      std::to_string(a.cols()) + "]");
}

[[noreturn]] void shape_fail2(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes [" + std::to_string(a.rows()) +
                      "," + std::to_string(a.cols()) + "] and [" + std::to_string(b.rows()) +
                      "," + std::to_string(b.cols()) + "]");
}

}  // namespace

Tensor Tensor::zeros(size_t rows, size_t cols, bool requires_grad) {
  auto n = make_node(rows, cols);
  n->requires_grad = requires_grad;
  if (requires_grad) ensure_grad(*n);
  return Tensor(n);
}

Tensor Tensor::from(size_t rows, size_t cols, std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols) throw ShapeMismatch("Tensor::from: data length != rows*cols");
  auto n = make_node(rows, cols);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  if (requires_grad) ensure_grad(*n);
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from(1, 1, {v}); }

Tensor Tensor::uniform_init(size_t rows, size_t cols, size_t fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(rows * cols);
  for (auto& x : data) x = rng.uniform(-bound, bound);
  return from(rows, cols, std::move(data), true);
}

double Tensor::item() const {
  if (!is_scalar()) throw ShapeMismatch("item(): tensor is not scalar");
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (node_->requires_grad)
    node_->grad.assign(node_->value.size(), 0.0);
  else
    node_->grad.clear();
}

void backward(const Tensor& loss) {
  if (!loss.is_scalar()) throw NotScalarLoss("backward() requires a scalar loss");
  if (!loss.requires_grad()) return;
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack;
  std::unordered_map<Node*, bool> visited;
  stack.emplace_back(loss.node().get(), 0);
  visited[loss.node().get()] = true;
  while (!stack.empty()) {
    auto& [n, pi] = stack.back();
    if (pi < n->parents.size()) {
      Node* p = n->parents[pi++].get();
      if (p->requires_grad && !visited[p]) {
        visited[p] = true;
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  ensure_grad(*loss.node());
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward();
}

namespace {

// Builds the result node and wires the backward closure when any input
// requires gradients.
Tensor finish(NodePtr out, std::vector<NodePtr> parents, std::function<void()> bw) {
  bool req = false;
  for (const auto& p : parents) req = req || p->requires_grad;
  out->requires_grad = req;
  if (req) {
    out->parents = std::move(parents);
    out->backward = std::move(bw);
  }
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail2("add", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] + b.data()[i];
  Node* o = out.get();
  NodePtr an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [o, an, bn] {
    for (auto* p : {an.get(), bn.get()})
      if (p->requires_grad) {
        ensure_grad(*p);
        for (size_t i = 0; i < o->grad.size(); ++i) p->grad[i] += o->grad[i];
      }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail2("sub", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] - b.data()[i];
  Node* o = out.get();
  NodePtr an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [o, an, bn] {
    if (an->requires_grad) {
      ensure_grad(*an);
      for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i];
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] -= o->grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail2("mul", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] * b.data()[i];
  Node* o = out.get();
  NodePtr an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [o, an, bn] {
    if (an->requires_grad) {
      ensure_grad(*an);
      for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] += o->grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] * c;
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, c] {
    ensure_grad(*an);
    for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * c;
  });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.cols()) shape_fail2("add_rowvec", m, v);
  auto out = make_node(m.rows(), m.cols());
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.cols(); ++j)
      out->value[i * m.cols() + j] = m.data()[i * m.cols() + j] + v.data()[j];
  Node* o = out.get();
  NodePtr mn = m.node(), vn = v.node();
  return finish(out, {mn, vn}, [o, mn, vn] {
    size_t c = o->cols;
    if (mn->requires_grad) {
      ensure_grad(*mn);
      for (size_t i = 0; i < o->grad.size(); ++i) mn->grad[i] += o->grad[i];
    }
    if (vn->requires_grad) {
      ensure_grad(*vn);
      for (size_t i = 0; i < o->rows; ++i)
        for (size_t j = 0; j < c; ++j) vn->grad[j] += o->grad[i * c + j];
    }
  });
}

Tensor mul_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.cols()) shape_fail2("mul_rowvec", m, v);
  auto out = make_node(m.rows(), m.cols());
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.cols(); ++j)
      out->value[i * m.cols() + j] = m.data()[i * m.cols() + j] * v.data()[j];
  Node* o = out.get();
  NodePtr mn = m.node(), vn = v.node();
  return finish(out, {mn, vn}, [o, mn, vn] {
    size_t c = o->cols;
    if (mn->requires_grad) {
      ensure_grad(*mn);
      for (size_t i = 0; i < o->rows; ++i)
        for (size_t j = 0; j < c; ++j) mn->grad[i * c + j] += o->grad[i * c + j] * vn->value[j];
    }
    if (vn->requires_grad) {
      ensure_grad(*vn);
      for (size_t i = 0; i < o->rows; ++i)
        for (size_t j = 0; j < c; ++j) vn->grad[j] += o->grad[i * c + j] * mn->value[i * c + j];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail2("matmul", a, b);
  size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n);
  for (size_t i = 0; i < m; ++i)
    for (size_t p = 0; p < k; ++p) {
      double av = a.data()[i * k + p];
      if (av == 0.0) continue;
      for (size_t j = 0; j < n; ++j) out->value[i * n + j] += av * b.data()[p * n + j];
    }
  Node* o = out.get();
  NodePtr an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [o, an, bn, m, k, n] {
    if (an->requires_grad) {
      ensure_grad(*an);
      for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
          double g = o->grad[i * n + j];
          if (g == 0.0) continue;
          for (size_t p = 0; p < k; ++p) an->grad[i * k + p] += g * bn->value[p * n + j];
        }
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (size_t i = 0; i < m; ++i)
        for (size_t p = 0; p < k; ++p) {
          double av = an->value[i * k + p];
          if (av == 0.0) continue;
          for (size_t j = 0; j < n; ++j) bn->grad[p * n + j] += av * o->grad[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  size_t r = a.rows(), c = a.cols();
  auto out = make_node(c, r);
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < c; ++j) out->value[j * r + i] = a.data()[i * c + j];
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, r, c] {
    ensure_grad(*an);
    for (size_t i = 0; i < r; ++i)
      for (size_t j = 0; j < c; ++j) an->grad[i * c + j] += o->grad[j * r + i];
  });
}

namespace {

template <typename F, typename DF>
Tensor unary_op(const Tensor& a, F f, DF df) {
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = f(a.data()[i]);
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, df] {
    ensure_grad(*an);
    for (size_t i = 0; i < o->grad.size(); ++i)
      an->grad[i] += o->grad[i] * df(an->value[i], o->value[i]);
  });
}

}  // namespace

Tensor tanh_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor log_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax_rows(const Tensor& a) {
  size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c);
  for (size_t i = 0; i < r; ++i) {
    double mx = a.data()[i * c];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, a.data()[i * c + j]);
    double z = 0.0;
    for (size_t j = 0; j < c; ++j) {
      out->value[i * c + j] = std::exp(a.data()[i * c + j] - mx);
      z += out->value[i * c + j];
    }
    for (size_t j = 0; j < c; ++j) out->value[i * c + j] /= z;
  }
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, r, c] {
    ensure_grad(*an);
    for (size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < c; ++j) dot += o->grad[i * c + j] * o->value[i * c + j];
      for (size_t j = 0; j < c; ++j)
        an->grad[i * c + j] += o->value[i * c + j] * (o->grad[i * c + j] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, c);
  for (size_t i = 0; i < r; ++i) {
    double mx = a.data()[i * c];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, a.data()[i * c + j]);
    double z = 0.0;
    for (size_t j = 0; j < c; ++j) z += std::exp(a.data()[i * c + j] - mx);
    double lse = mx + std::log(z);
    for (size_t j = 0; j < c; ++j) out->value[i * c + j] = a.data()[i * c + j] - lse;
  }
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, r, c] {
    ensure_grad(*an);
    for (size_t i = 0; i < r; ++i) {
      double gsum = 0.0;
      for (size_t j = 0; j < c; ++j) gsum += o->grad[i * c + j];
      for (size_t j = 0; j < c; ++j)
        an->grad[i * c + j] += o->grad[i * c + j] - std::exp(o->value[i * c + j]) * gsum;
    }
  });
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  size_t r = a.rows(), c = a.cols();
  if (c == 0) shape_fail("layer_norm_rows", a);
  auto out = make_node(r, c);
  std::vector<double> inv_std(r);
  for (size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (size_t j = 0; j < c; ++j) mean += a.data()[i * c + j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (size_t j = 0; j < c; ++j) {
      double d = a.data()[i * c + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (size_t j = 0; j < c; ++j)
      out->value[i * c + j] = (a.data()[i * c + j] - mean) * inv_std[i];
  }
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, r, c, inv_std = std::move(inv_std)] {
    ensure_grad(*an);
    for (size_t i = 0; i < r; ++i) {
      double gmean = 0.0, gydot = 0.0;
      for (size_t j = 0; j < c; ++j) {
        gmean += o->grad[i * c + j];
        gydot += o->grad[i * c + j] * o->value[i * c + j];
      }
      gmean /= static_cast<double>(c);
      gydot /= static_cast<double>(c);
      for (size_t j = 0; j < c; ++j)
        an->grad[i * c + j] +=
            inv_std[i] * (o->grad[i * c + j] - gmean - o->value[i * c + j] * gydot);
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_rows: empty input");
  size_t c = parts[0].cols(), r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) shape_fail2("concat_rows", parts[0], p);
    r += p.rows();
  }
  auto out = make_node(r, c);
  std::vector<NodePtr> parents;
  size_t row = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out->value.begin() + row * c);
    row += p.rows();
    parents.push_back(p.node());
  }
  Node* o = out.get();
  auto ps = parents;
  return finish(out, std::move(parents), [o, ps, c] {
    size_t row = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) {
        ensure_grad(*p);
        for (size_t i = 0; i < p->value.size(); ++i) p->grad[i] += o->grad[row * c + i];
      }
      row += p->rows;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: empty input");
  size_t r = parts[0].rows(), c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) shape_fail2("concat_cols", parts[0], p);
    c += p.cols();
  }
  auto out = make_node(r, c);
  std::vector<NodePtr> parents;
  size_t col = 0;
  for (const auto& p : parts) {
    for (size_t i = 0; i < r; ++i)
      for (size_t j = 0; j < p.cols(); ++j)
        out->value[i * c + col + j] = p.data()[i * p.cols() + j];
    col += p.cols();
    parents.push_back(p.node());
  }
  Node* o = out.get();
  auto ps = parents;
  return finish(out, std::move(parents), [o, ps, r, c] {
    size_t col = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) {
        ensure_grad(*p);
        for (size_t i = 0; i < r; ++i)
          for (size_t j = 0; j < p->cols; ++j)
            p->grad[i * p->cols + j] += o->grad[i * c + col + j];
      }
      col += p->cols;
    }
  });
}

Tensor slice_rows(const Tensor& a, size_t start, size_t len) {
  if (start + len > a.rows()) shape_fail("slice_rows", a);
  size_t c = a.cols();
  auto out = make_node(len, c);
  std::copy(a.data().begin() + start * c, a.data().begin() + (start + len) * c,
            out->value.begin());
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, start, c] {
    ensure_grad(*an);
    for (size_t i = 0; i < o->grad.size(); ++i) an->grad[start * c + i] += o->grad[i];
  });
}

Tensor slice_cols(const Tensor& a, size_t start, size_t len) {
  if (start + len > a.cols()) shape_fail("slice_cols", a);
  size_t r = a.rows(), c = a.cols();
  auto out = make_node(r, len);
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < len; ++j) out->value[i * len + j] = a.data()[i * c + start + j];
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, r, c, start, len] {
    ensure_grad(*an);
    for (size_t i = 0; i < r; ++i)
      for (size_t j = 0; j < len; ++j) an->grad[i * c + start + j] += o->grad[i * len + j];
  });
}

Tensor sum_all(const Tensor& a) {
  auto out = make_node(1, 1);
  for (double v : a.data()) out->value[0] += v;
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an] {
    ensure_grad(*an);
    for (auto& g : an->grad) g += o->grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  auto out = make_node(1, 1);
  for (double v : a.data()) out->value[0] += v;
  double inv = 1.0 / static_cast<double>(a.size());
  out->value[0] *= inv;
  Node* o = out.get();
  NodePtr an = a.node();
  return finish(out, {an}, [o, an, inv] {
    ensure_grad(*an);
    for (auto& g : an->grad) g += o->grad[0] * inv;
  });
}

Tensor select_rows(const Tensor& table, const std::vector<int>& indices) {
  size_t c = table.cols();
  auto out = make_node(indices.size(), c);
  for (size_t i = 0; i < indices.size(); ++i) {
    int idx = indices[i];
    if (idx < 0 || static_cast<size_t>(idx) >= table.rows())
      throw ShapeMismatch("select_rows: index " + std::to_string(idx) + " out of " +
                          std::to_string(table.rows()) + " rows");
    std::copy(table.data().begin() + idx * c, table.data().begin() + (idx + 1) * c,
              out->value.begin() + i * c);
  }
  Node* o = out.get();
  NodePtr tn = table.node();
  return finish(out, {tn}, [o, tn, indices, c] {
    ensure_grad(*tn);
    for (size_t i = 0; i < indices.size(); ++i)
      for (size_t j = 0; j < c; ++j) tn->grad[indices[i] * c + j] += o->grad[i * c + j];
  });
}

Tensor pick(const Tensor& a, size_t i, size_t j) {
  if (i >= a.rows() || j >= a.cols()) shape_fail("pick", a);
  auto out = make_node(1, 1);
  out->value[0] = a.at(i, j);
  Node* o = out.get();
  NodePtr an = a.node();
  size_t flat = i * a.cols() + j;
  return finish(out, {an}, [o, an, flat] {
    ensure_grad(*an);
    an->grad[flat] += o->grad[0];
  });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  Tensor d = sub(pred, target);
  return mean_all(mul(d, d));
}

Tensor cross_entropy(const Tensor& probs, size_t target) {
  return scale(log_op(pick(probs, 0, target)), -1.0);
}

Tensor cross_entropy_logits_sum(const Tensor& logits, const std::vector<int>& targets) {
  if (targets.size() != logits.rows())
    throw ShapeMismatch("cross_entropy_logits_sum: one target per row required");
  Tensor ls = log_softmax_rows(logits);
  size_t c = ls.cols();
  auto out = make_node(1, 1);
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= c)
      throw ShapeMismatch("cross_entropy_logits_sum: target out of range");
    out->value[0] -= ls.data()[i * c + targets[i]];
  }
  Node* o = out.get();
  NodePtr ln = ls.node();
  auto tg = targets;
  return finish(out, {ln}, [o, ln, tg, c] {
    ensure_grad(*ln);
    for (size_t i = 0; i < tg.size(); ++i) ln->grad[i * c + tg[i]] -= o->grad[0];
  });
}

Tensor soft_cross_entropy_sum(const Tensor& logits, const Tensor& soft_targets) {
  if (logits.rows() != soft_targets.rows() || logits.cols() != soft_targets.cols())
    shape_fail2("soft_cross_entropy_sum", logits, soft_targets);
  return scale(sum_all(mul(soft_targets, log_softmax_rows(logits))), -1.0);
}

// ---------------------------------------------------------------------------
// ParamSet
// ---------------------------------------------------------------------------

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw std::runtime_error("duplicate parameter name: " + name);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

Tensor& ParamSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::runtime_error("no such parameter: " + name);
  return items_[it->second].second;
}

const Tensor& ParamSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::runtime_error("no such parameter: " + name);
  return items_[it->second].second;
}

size_t ParamSet::total_elements() const {
  size_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

ParamSet ParamSet::clone(bool requires_grad) const {
  ParamSet out;
  for (const auto& [name, t] : items_)
    out.add(name, Tensor::from(t.rows(), t.cols(), t.data(), requires_grad));
  return out;
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : items_) t.zero_grad();
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const std::string& extra_json) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["extra"] = nlohmann::ordered_json::parse(extra_json);
  auto& arr = j["params"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : params) {
    nlohmann::ordered_json p;
    p["name"] = name;
    p["rows"] = t.rows();
    p["cols"] = t.cols();
    p["data"] = t.data();
    arr.push_back(std::move(p));
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f << j.dump();
  }
  std::rename(tmp.c_str(), path.c_str());
}

ParamSet load_checkpoint(const std::string& path, std::string* extra_json) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointMissing("cannot open checkpoint: " + path);
  nlohmann::ordered_json j;
  f >> j;
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw IoError("unsupported checkpoint version in " + path);
  if (extra_json) *extra_json = j["extra"].dump();
  ParamSet out;
  for (const auto& p : j["params"]) {
    auto data = p["data"].get<std::vector<double>>();
    out.add(p["name"].get<std::string>(),
            Tensor::from(p["rows"].get<size_t>(), p["cols"].get<size_t>(), std::move(data),
                         true));
  }
  return out;
}

}  // namespace numlex
