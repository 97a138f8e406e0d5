#include "imbassl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "imbassl/errors.hpp"

namespace imbassl::ad {

namespace {

std::shared_ptr<Node> make_leaf(std::vector<double> data, std::size_t rows, std::size_t cols,
                                bool requires_grad) {
  if (data.size() != rows * cols) {
    throw DimensionError("value of size " + std::to_string(data.size()) + " does not match shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(data);
  node->rows = rows;
  node->cols = cols;
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return node;
}

// Result node of an operation. Gradient bookkeeping is only set up when at
// least one parent needs it.
std::shared_ptr<Node> make_result(std::vector<double> data, std::size_t rows, std::size_t cols,
                                  std::vector<std::shared_ptr<Node>> parents,
                                  std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(data);
  node->rows = rows;
  node->cols = cols;
  node->requires_grad =
      std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  if (node->requires_grad) {
    node->grad.assign(node->value.size(), 0.0);
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return node;
}

void require_vector(const Value& x, const char* what) {
  if (x.cols() != 1) {
    throw DimensionError(std::string(what) + ": expected a rank-1 array, got " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

}  // namespace

Value Value::variable(std::vector<double> data, std::size_t rows, std::size_t cols) {
  return Value(make_leaf(std::move(data), rows, cols, true));
}

Value Value::variable(double x) { return variable({x}, 1, 1); }

Value Value::constant(std::vector<double> data, std::size_t rows, std::size_t cols) {
  return Value(make_leaf(std::move(data), rows, cols, false));
}

Value Value::constant(double x) { return constant({x}, 1, 1); }

double Value::item() const {
  if (!is_scalar()) throw ContractError("item() on a non-scalar value");
  return node_->value[0];
}

void Value::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Value linear(const Value& weights, const Value& bias, const Value& x) {
  require_vector(x, "linear input");
  require_vector(bias, "linear bias");
  const std::size_t out = weights.rows();
  const std::size_t in = weights.cols();
  if (x.rows() != in || bias.rows() != out) {
    throw DimensionError("linear: W is " + std::to_string(out) + "x" + std::to_string(in) +
                         ", b has " + std::to_string(bias.rows()) + ", x has " +
                         std::to_string(x.rows()));
  }
  const auto& w = weights.data();
  const auto& xv = x.data();
  std::vector<double> y(bias.data());
  for (std::size_t r = 0; r < out; ++r) {
    double acc = 0.0;
    const double* row = w.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) acc += row[c] * xv[c];
    y[r] += acc;
  }
  auto wn = weights.node();
  auto bn = bias.node();
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), out, 1, {wn, bn, xn}, [=](Node& self) {
    const auto& g = self.grad;
    if (wn->requires_grad) {
      for (std::size_t r = 0; r < out; ++r) {
        double* row = wn->grad.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) row[c] += g[r] * xn->value[c];
      }
    }
    if (bn->requires_grad) {
      for (std::size_t r = 0; r < out; ++r) bn->grad[r] += g[r];
    }
    if (xn->requires_grad) {
      for (std::size_t r = 0; r < out; ++r) {
        const double* row = wn->value.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) xn->grad[c] += g[r] * row[c];
      }
    }
  }));
}

Value relu(const Value& x) {
  std::vector<double> y(x.data());
  for (auto& v : y) v = v > 0.0 ? v : 0.0;
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), x.rows(), x.cols(), {xn}, [xn](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (xn->value[i] > 0.0) xn->grad[i] += self.grad[i];
    }
  }));
}

Value softmax(const Value& logits) {
  require_vector(logits, "softmax");
  const auto& z = logits.data();
  if (z.size() < 2) throw DimensionError("softmax needs at least 2 classes");
  for (double v : z) {
    if (!std::isfinite(v)) throw NumericInputError("softmax: non-finite logit");
  }
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  auto zn = logits.node();
  return Value::from_node(make_result(std::move(p), z.size(), 1, {zn}, [zn](Node& self) {
    // dL/dz_i = p_i (g_i − Σ_j g_j p_j)
    const auto& p = self.value;
    const auto& g = self.grad;
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += g[j] * p[j];
    for (std::size_t i = 0; i < p.size(); ++i) zn->grad[i] += p[i] * (g[i] - dot);
  }));
}

Value kl_div(const Value& target, const Value& pred) {
  require_vector(target, "kl_div target");
  require_vector(pred, "kl_div pred");
  if (target.rows() != pred.rows()) throw DimensionError("kl_div: length mismatch");
  const auto& t = target.data();
  const auto& q = pred.data();
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= 0.0) continue;
    total += t[i] * (std::log(std::max(t[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
  }
  auto tn = target.node();
  auto qn = pred.node();
  return Value::from_node(make_result({total}, 1, 1, {tn, qn}, [tn, qn](Node& self) {
    const double g = self.grad[0];
    const auto& t = tn->value;
    const auto& q = qn->value;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= 0.0) continue;
      if (qn->requires_grad && q[i] > kProbFloor) qn->grad[i] -= g * t[i] / q[i];
      if (tn->requires_grad) {
        const double log_ratio =
            std::log(std::max(t[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor));
        tn->grad[i] += g * (log_ratio + (t[i] > kProbFloor ? 1.0 : 0.0));
      }
    }
  }));
}

Value stop_gradient(const Value& x) {
  auto node = std::make_shared<Node>();
  node->value = x.data();
  node->rows = x.rows();
  node->cols = x.cols();
  node->stop_grad = true;
  node->requires_grad = false;
  node->parents = {x.node()};
  return Value::from_node(std::move(node));
}

Value add(const Value& a, const Value& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shape mismatch");
  std::vector<double> y(a.data());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  auto an = a.node();
  auto bn = b.node();
  return Value::from_node(make_result(std::move(y), a.rows(), a.cols(), {an, bn}, [an, bn](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (an->requires_grad) an->grad[i] += self.grad[i];
      if (bn->requires_grad) bn->grad[i] += self.grad[i];
    }
  }));
}

Value mul(const Value& a, const Value& b) {
  const bool a_scalar = a.is_scalar();
  const bool b_scalar = b.is_scalar();
  if (!a_scalar && !b_scalar && (a.rows() != b.rows() || a.cols() != b.cols())) {
    throw DimensionError("mul: shape mismatch");
  }
  const Value& shaped = a_scalar ? b : a;
  std::vector<double> y(shaped.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = a[a_scalar ? 0 : i] * b[b_scalar ? 0 : i];
  }
  auto an = a.node();
  auto bn = b.node();
  return Value::from_node(make_result(
      std::move(y), shaped.rows(), shaped.cols(), {an, bn}, [an, bn, a_scalar, b_scalar](Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const std::size_t ia = a_scalar ? 0 : i;
          const std::size_t ib = b_scalar ? 0 : i;
          if (an->requires_grad) an->grad[ia] += self.grad[i] * bn->value[ib];
          if (bn->requires_grad) bn->grad[ib] += self.grad[i] * an->value[ia];
        }
      }));
}

Value scale(const Value& x, double c) {
  std::vector<double> y(x.data());
  for (auto& v : y) v *= c;
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), x.rows(), x.cols(), {xn}, [xn, c](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += c * self.grad[i];
  }));
}

Value add_scalar(const Value& x, double c) {
  std::vector<double> y(x.data());
  for (auto& v : y) v += c;
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), x.rows(), x.cols(), {xn}, [xn](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
  }));
}

Value sum(const Value& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  auto xn = x.node();
  return Value::from_node(make_result({total}, 1, 1, {xn}, [xn](Node& self) {
    for (auto& g : xn->grad) g += self.grad[0];
  }));
}

Value mean(std::span<const Value> scalars) {
  if (scalars.empty()) throw ContractError("mean of an empty list");
  double total = 0.0;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(scalars.size());
  for (const auto& s : scalars) {
    total += s.item();
    parents.push_back(s.node());
  }
  const double n = static_cast<double>(scalars.size());
  return Value::from_node(make_result({total / n}, 1, 1, parents, [n](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->grad[0] += self.grad[0] / n;
    }
  }));
}

Value pick(const Value& x, std::size_t i) {
  if (i >= x.size()) {
    throw ContractError("pick: index " + std::to_string(i) + " out of range for size " +
                        std::to_string(x.size()));
  }
  auto xn = x.node();
  return Value::from_node(make_result({x[i]}, 1, 1, {xn}, [xn, i](Node& self) {
    xn->grad[i] += self.grad[0];
  }));
}

Value log_floor(const Value& x, double floor) {
  std::vector<double> y(x.data());
  for (auto& v : y) v = std::log(std::max(v, floor));
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), x.rows(), x.cols(), {xn}, [xn, floor](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (xn->value[i] > floor) xn->grad[i] += self.grad[i] / xn->value[i];
    }
  }));
}

Value pow(const Value& x, double p) {
  std::vector<double> y(x.data());
  for (auto& v : y) {
    if (v < 0.0) throw NumericInputError("pow: negative base");
    v = std::pow(v, p);
  }
  auto xn = x.node();
  return Value::from_node(make_result(std::move(y), x.rows(), x.cols(), {xn}, [xn, p](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double base = xn->value[i];
      // p·x^(p−1); the p = 0 and x = 0 corners are defined as 0 / p·0^(p−1).
      double d = 0.0;
      if (p != 0.0) {
        if (base > 0.0) {
          d = p * std::pow(base, p - 1.0);
        } else if (p == 1.0) {
          d = 1.0;
        }
      }
      xn->grad[i] += self.grad[i] * d;
    }
  }));
}

void backward(const Value& loss) {
  if (!loss.is_scalar()) throw ContractError("backward() requires a scalar loss");
  const auto& root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are per-call scratch; leaf grads accumulate.
  for (Node* node : order) {
    if (!node->is_leaf()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->stop_grad) node->backward_fn(*node);
  }
}

void zero_grad(std::span<Value> params) {
  for (auto& p : params) p.zero_grad();
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_diff_grad: eps must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace imbassl::ad
