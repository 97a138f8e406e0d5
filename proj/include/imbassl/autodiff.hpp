#pragma once

// Small reverse-mode differentiation engine. Forward evaluation is eager;
// every operation records its parents and a local backward rule, and
// backward() replays the tape in reverse topological order.
//
// Values are dense rank-0/1/2 arrays of doubles. A rank-1 array of length n
// has shape (n, 1); a scalar has shape (1, 1).

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace imbassl::ad {

// Floor applied to probabilities inside logarithms.
inline constexpr double kProbFloor = 1e-12;

struct Node {
  std::vector<double> value;
  std::vector<double> grad;
  std::size_t rows = 1;
  std::size_t cols = 1;
  bool requires_grad = false;
  bool stop_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return parents.empty(); }
};

class Value {
 public:
  Value() = default;

  // Leaf that receives gradients (model parameters, test variables).
  static Value variable(std::vector<double> data, std::size_t rows, std::size_t cols = 1);
  static Value variable(double x);
  // Leaf that never receives gradients (inputs, fixed targets).
  static Value constant(std::vector<double> data, std::size_t rows, std::size_t cols = 1);
  static Value constant(double x);

  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool is_scalar() const { return size() == 1; }
  bool requires_grad() const { return node_->requires_grad; }
  bool stop_grad() const { return node_->stop_grad; }

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }

  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  static Value from_node(std::shared_ptr<Node> node) { return Value(std::move(node)); }

 private:
  explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// W·x + b for W [out×in], b [out], x [in].
Value linear(const Value& weights, const Value& bias, const Value& x);

// Elementwise max(0, x); derivative at exactly 0 is 0.
Value relu(const Value& x);

// Softmax over a rank-1 array, with max-subtraction.
Value softmax(const Value& logits);

// Σ t_i ln(t_i / p_i), with 0·ln(0/q) = 0 and both arguments floored at
// kProbFloor inside the logarithm.
Value kl_div(const Value& target, const Value& pred);

// Forward identity; no gradient reaches x or anything upstream of it.
Value stop_gradient(const Value& x);

Value add(const Value& a, const Value& b);
// Elementwise product; a scalar operand broadcasts.
Value mul(const Value& a, const Value& b);
Value scale(const Value& x, double c);
Value add_scalar(const Value& x, double c);
Value sum(const Value& x);
Value mean(std::span<const Value> scalars);
// x[i] as a scalar.
Value pick(const Value& x, std::size_t i);
// ln(max(x, floor)) elementwise; zero derivative where the floor is active.
Value log_floor(const Value& x, double floor = kProbFloor);
// x^p elementwise for x ≥ 0.
Value pow(const Value& x, double p);

// Accumulates ∂loss/∂node into every reachable node that requires grad.
// Leaf grads accumulate across calls; call zero_grad() between steps.
void backward(const Value& loss);

void zero_grad(std::span<Value> params);

// Central differences (f(x+εe_i) − f(x−εe_i)) / 2ε.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double eps);

}  // namespace imbassl::ad
