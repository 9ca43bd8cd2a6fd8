#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace numlex {

class Rng;

namespace detail {
struct Node {
  size_t rows = 0, cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;  // pushes this->grad into parents' grads
};
}  // namespace detail

// A 2-D row-major tensor with reverse-mode autodiff. Value semantics over a
// shared graph node; copying a Tensor aliases the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false);
  static Tensor from(size_t rows, size_t cols, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v);
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init for weight matrices.
  static Tensor uniform_init(size_t rows, size_t cols, size_t fan_in, Rng& rng);

  bool defined() const { return node_ != nullptr; }
  size_t rows() const { return node_->rows; }
  size_t cols() const { return node_->cols; }
  size_t size() const { return node_->value.size(); }
  bool is_scalar() const { return size() == 1; }
  double item() const;

  double at(size_t i, size_t j) const { return node_->value[i * cols() + j]; }
  double& at(size_t i, size_t j) { return node_->value[i * cols() + j]; }
  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Populates gradients of `loss` w.r.t. every requires_grad leaf in its graph.
void backward(const Tensor& loss);

// ---- elementwise / structural ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // bias broadcast over rows
Tensor mul_rowvec(const Tensor& m, const Tensor& v);  // gain broadcast over rows
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& a, double eps = 1e-5);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, size_t start, size_t len);
Tensor slice_cols(const Tensor& a, size_t start, size_t len);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor select_rows(const Tensor& table, const std::vector<int>& indices);  // embedding lookup
Tensor pick(const Tensor& a, size_t i, size_t j);

// ---- composed losses ----
// Mean of squared differences over all elements.
Tensor mse(const Tensor& pred, const Tensor& target);
// -ln probs[0, target]; `probs` is a probability row.
Tensor cross_entropy(const Tensor& probs, size_t target);
// Sum over rows of -log_softmax(logits)[i, targets[i]].
Tensor cross_entropy_logits_sum(const Tensor& logits, const std::vector<int>& targets);
// Sum over rows of -sum_c soft[i,c] * log_softmax(logits)[i,c].
Tensor soft_cross_entropy_sum(const Tensor& logits, const Tensor& soft_targets);

// ---------------------------------------------------------------------------
// ParamSet: named trainable tensors with stable iteration order.
// ---------------------------------------------------------------------------
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  size_t size() const { return items_.size(); }
  size_t total_elements() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Deep copy; the clone's tensors are fresh leaves.
  ParamSet clone(bool requires_grad) const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Versioned JSON checkpoint, bit-exact double round-trip.
void save_checkpoint(const std::string& path, const ParamSet& params,
                     const std::string& extra_json = "{}");
ParamSet load_checkpoint(const std::string& path, std::string* extra_json = nullptr);

}  // namespace numlex
