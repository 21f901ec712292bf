#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "laconv/errors.hpp"
#include "laconv/tensor.hpp"

namespace laconv {

struct GraphNode;
using NodePtr = std::shared_ptr<GraphNode>;

/// Node of the reverse-mode computation graph.
///
/// `grad` persists across backward calls and accumulates (zero_grad resets it);
/// `adj` is the within-call adjoint scratch. The backprop closure reads this
/// node's adj/value and accumulates into the parents' adj buffers.
struct GraphNode {
  Tensor value;
  Tensor grad;
  Tensor adj;  // scratch, valid only inside backward()
  std::vector<NodePtr> parents;
  std::function<void(GraphNode&)> backprop;
  const char* op = "leaf";
  bool requires_grad = false;

  explicit GraphNode(Tensor v, bool req = false)
      : value(std::move(v)), grad(Tensor::zeros(value.shape)), requires_grad(req) {}
};

/// Leaf holding a trainable parameter.
inline NodePtr parameter(Tensor v) { return std::make_shared<GraphNode>(std::move(v), true); }

/// Leaf holding data that does not require a gradient.
inline NodePtr constant(Tensor v) { return std::make_shared<GraphNode>(std::move(v), false); }

/// Leaf with explicit requires_grad (model inputs that need gradients).
inline NodePtr leaf(Tensor v, bool requires_grad) {
  return std::make_shared<GraphNode>(std::move(v), requires_grad);
}

namespace detail {

inline NodePtr make_op(const char* op, Tensor value, std::vector<NodePtr> parents,
                       std::function<void(GraphNode&)> backprop) {
  auto node = std::make_shared<GraphNode>(std::move(value));
  node->op = op;
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  node->parents = std::move(parents);
  if (node->requires_grad) node->backprop = std::move(backprop);
  return node;
}

// scalar-with-tensor is the only permitted broadcast
inline void check_elementwise(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b) || a.numel() == 1 || b.numel() == 1) return;
  throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " + b.shape_str() +
                   " differ (only scalar broadcast is supported)");
}

inline void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace detail

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  detail::check_elementwise(a->value, b->value, "add");
  const bool sa = a->value.numel() == 1, sb = b->value.numel() == 1;
  Tensor out = sa ? b->value : a->value;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (sa ? a->value.data[0] : a->value.data[i]) +
                  (sb ? b->value.data[0] : b->value.data[i]);
  return detail::make_op("add", std::move(out), {a, b}, [](GraphNode& n) {
    auto &pa = *n.parents[0], &pb = *n.parents[1];
    for (std::size_t i = 0; i < n.adj.data.size(); ++i) {
      pa.adj.data[pa.value.numel() == 1 ? 0 : i] += n.adj.data[i];
      pb.adj.data[pb.value.numel() == 1 ? 0 : i] += n.adj.data[i];
    }
  });
}

inline NodePtr sub(const NodePtr& a, const NodePtr& b) {
  detail::check_elementwise(a->value, b->value, "sub");
  const bool sa = a->value.numel() == 1, sb = b->value.numel() == 1;
  Tensor out = sa ? b->value : a->value;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (sa ? a->value.data[0] : a->value.data[i]) -
                  (sb ? b->value.data[0] : b->value.data[i]);
  return detail::make_op("sub", std::move(out), {a, b}, [](GraphNode& n) {
    auto &pa = *n.parents[0], &pb = *n.parents[1];
    for (std::size_t i = 0; i < n.adj.data.size(); ++i) {
      pa.adj.data[pa.value.numel() == 1 ? 0 : i] += n.adj.data[i];
      pb.adj.data[pb.value.numel() == 1 ? 0 : i] -= n.adj.data[i];
    }
  });
}

/// Elementwise product (scalar broadcast allowed).
inline NodePtr mul(const NodePtr& a, const NodePtr& b) {
  detail::check_elementwise(a->value, b->value, "mul");
  const bool sa = a->value.numel() == 1, sb = b->value.numel() == 1;
  Tensor out = sa ? b->value : a->value;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (sa ? a->value.data[0] : a->value.data[i]) *
                  (sb ? b->value.data[0] : b->value.data[i]);
  return detail::make_op("mul", std::move(out), {a, b}, [](GraphNode& n) {
    auto &pa = *n.parents[0], &pb = *n.parents[1];
    const bool sa2 = pa.value.numel() == 1, sb2 = pb.value.numel() == 1;
    for (std::size_t i = 0; i < n.adj.data.size(); ++i) {
      const double g = n.adj.data[i];
      pa.adj.data[sa2 ? 0 : i] += g * (sb2 ? pb.value.data[0] : pb.value.data[i]);
      pb.adj.data[sb2 ? 0 : i] += g * (sa2 ? pa.value.data[0] : pa.value.data[i]);
    }
  });
}

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  const Tensor &av = a->value, &bv = b->value;
  if (av.ndim() != 2 || bv.ndim() != 2 || av.shape[1] != bv.shape[0])
    throw ShapeError("matmul: incompatible shapes " + av.shape_str() + " x " + bv.shape_str());
  const int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  return detail::make_op("matmul", std::move(out), {a, b}, [m, k, n](GraphNode& node) {
    auto &pa = *node.parents[0], &pb = *node.parents[1];
    // dA += adj * B^T ; dB += A^T * adj
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = node.adj.at(i, j);
        if (g == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          pa.adj.at(i, p) += g * pb.value.at(p, j);
          pb.adj.at(p, j) += g * pa.value.at(i, p);
        }
      }
  });
}

/// Row-wise affine map: x [m x k] * W [k x n] + b [n].
inline NodePtr affine(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  const Tensor &xv = x->value, &wv = w->value, &bv = b->value;
  if (xv.ndim() != 2 || wv.ndim() != 2 || xv.shape[1] != wv.shape[0])
    throw ShapeError("affine: incompatible shapes " + xv.shape_str() + " x " + wv.shape_str());
  const int m = xv.shape[0], k = xv.shape[1], n = wv.shape[1];
  if (bv.ndim() != 1 || bv.shape[0] != n)
    throw ShapeError("affine: bias shape " + bv.shape_str() + " does not match output width");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(i, j) = bv.data[j];
    for (int p = 0; p < k; ++p) {
      const double xip = xv.at(i, p);
      if (xip == 0.0) continue;
      for (int j = 0; j < n; ++j) out.at(i, j) += xip * wv.at(p, j);
    }
  }
  return detail::make_op("affine", std::move(out), {x, w, b}, [m, k, n](GraphNode& node) {
    auto &px = *node.parents[0], &pw = *node.parents[1], &pb = *node.parents[2];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = node.adj.at(i, j);
        if (g == 0.0) continue;
        pb.adj.data[j] += g;
        for (int p = 0; p < k; ++p) {
          px.adj.at(i, p) += g * pw.value.at(p, j);
          pw.adj.at(p, j) += g * px.value.at(i, p);
        }
      }
  });
}

/// ReLU with subgradient 0 at the kink.
inline NodePtr relu(const NodePtr& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return detail::make_op("relu", std::move(out), {x}, [](GraphNode& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.adj.data.size(); ++i)
      if (p.value.data[i] > 0.0) p.adj.data[i] += n.adj.data[i];
  });
}

inline NodePtr sigmoid(const NodePtr& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return detail::make_op("sigmoid", std::move(out), {x}, [](GraphNode& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.adj.data.size(); ++i) {
      const double s = n.value.data[i];
      p.adj.data[i] += n.adj.data[i] * s * (1.0 - s);
    }
  });
}

/// Elementwise exponential (used for positivity-constrained scalars).
inline NodePtr exp_elem(const NodePtr& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = std::exp(v);
  return detail::make_op("exp", std::move(out), {x}, [](GraphNode& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.adj.data.size(); ++i)
      p.adj.data[i] += n.adj.data[i] * n.value.data[i];
  });
}

inline NodePtr sum(const NodePtr& x) {
  double s = 0.0;
  for (double v : x->value.data) s += v;
  return detail::make_op("sum", Tensor::scalar(s), {x}, [](GraphNode& n) {
    auto& p = *n.parents[0];
    for (double& g : p.adj.data) g += n.adj.data[0];
  });
}

inline NodePtr mean(const NodePtr& x) {
  double s = 0.0;
  for (double v : x->value.data) s += v;
  const double inv = 1.0 / static_cast<double>(x->value.numel());
  return detail::make_op("mean", Tensor::scalar(s * inv), {x}, [inv](GraphNode& n) {
    auto& p = *n.parents[0];
    for (double& g : p.adj.data) g += n.adj.data[0] * inv;
  });
}

/// Column-wise mean of a 2-D tensor, [m x n] -> [n].
inline NodePtr colmean(const NodePtr& x) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2) throw ShapeError("colmean: tensor is not 2-D");
  const int m = xv.shape[0], n = xv.shape[1];
  Tensor out({n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data[j] += xv.at(i, j);
  const double inv = 1.0 / m;
  for (double& v : out.data) v *= inv;
  return detail::make_op("colmean", std::move(out), {x}, [m, n, inv](GraphNode& node) {
    auto& p = *node.parents[0];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.adj.at(i, j) += node.adj.data[j] * inv;
  });
}

/// Column-wise max of a 2-D tensor, [m x n] -> [n]. Gradient flows to the
/// first maximal row per column.
inline NodePtr colmax(const NodePtr& x) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2) throw ShapeError("colmax: tensor is not 2-D");
  const int m = xv.shape[0], n = xv.shape[1];
  Tensor out({n});
  std::vector<int> arg(n, 0);
  for (int j = 0; j < n; ++j) {
    double best = xv.at(0, j);
    for (int i = 1; i < m; ++i)
      if (xv.at(i, j) > best) {
        best = xv.at(i, j);
        arg[j] = i;
      }
    out.data[j] = best;
  }
  return detail::make_op("colmax", std::move(out), {x}, [arg, n](GraphNode& node) {
    auto& p = *node.parents[0];
    for (int j = 0; j < n; ++j) p.adj.at(arg[j], j) += node.adj.data[j];
  });
}

/// Concatenation of 1-D tensors.
inline NodePtr concat(const NodePtr& a, const NodePtr& b) {
  if (a->value.ndim() != 1 || b->value.ndim() != 1)
    throw ShapeError("concat: expects 1-D tensors");
  const int p = a->value.shape[0], q = b->value.shape[0];
  Tensor out({p + q});
  std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
  std::copy(b->value.data.begin(), b->value.data.end(), out.data.begin() + p);
  return detail::make_op("concat", std::move(out), {a, b}, [p, q](GraphNode& n) {
    auto &pa = *n.parents[0], &pb = *n.parents[1];
    for (int i = 0; i < p; ++i) pa.adj.data[i] += n.adj.data[i];
    for (int i = 0; i < q; ++i) pb.adj.data[i] += n.adj.data[p + i];
  });
}

inline NodePtr reshape(const NodePtr& x, std::vector<int> shape) {
  if (Tensor::numel_of(shape) != x->value.numel())
    throw ShapeError("reshape: element count mismatch");
  Tensor out(std::move(shape), x->value.data);
  return detail::make_op("reshape", std::move(out), {x}, [](GraphNode& n) {
    detail::add_into(n.parents[0]->adj, n.adj);
  });
}

inline NodePtr transpose(const NodePtr& x) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2) throw ShapeError("transpose: tensor is not 2-D");
  const int m = xv.shape[0], n = xv.shape[1];
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = xv.at(i, j);
  return detail::make_op("transpose", std::move(out), {x}, [m, n](GraphNode& node) {
    auto& p = *node.parents[0];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.adj.at(i, j) += node.adj.at(j, i);
  });
}

/// Stacks 1-D tensors of equal length as the rows of a 2-D tensor.
inline NodePtr stack_rows(const std::vector<NodePtr>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const int n = rows[0]->value.shape[0];
  const int m = static_cast<int>(rows.size());
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    if (rows[i]->value.ndim() != 1 || rows[i]->value.shape[0] != n)
      throw ShapeError("stack_rows: rows must be 1-D of equal length");
    std::copy(rows[i]->value.data.begin(), rows[i]->value.data.end(),
              out.data.begin() + static_cast<std::size_t>(i) * n);
  }
  return detail::make_op("stack_rows", std::move(out), rows, [m, n](GraphNode& node) {
    for (int i = 0; i < m; ++i) {
      auto& p = *node.parents[i];
      for (int j = 0; j < n; ++j) p.adj.data[j] += node.adj.at(i, j);
    }
  });
}

/// Stacks column tensors [len x 1] as the columns of a 2-D tensor.
inline NodePtr stack_cols(const std::vector<NodePtr>& cols) {
  if (cols.empty()) throw ShapeError("stack_cols: no columns");
  const int len = cols[0]->value.shape[0];
  const int b = static_cast<int>(cols.size());
  Tensor out({len, b});
  for (int j = 0; j < b; ++j) {
    const Tensor& cv = cols[j]->value;
    if (cv.ndim() != 2 || cv.shape[0] != len || cv.shape[1] != 1)
      throw ShapeError("stack_cols: columns must be [len x 1] of equal length");
    for (int i = 0; i < len; ++i) out.at(i, j) = cv.data[i];
  }
  return detail::make_op("stack_cols", std::move(out), cols, [len, b](GraphNode& node) {
    for (int j = 0; j < b; ++j) {
      auto& p = *node.parents[j];
      for (int i = 0; i < len; ++i) p.adj.data[i] += node.adj.at(i, j);
    }
  });
}

/// Differentiable matrix inverse via LU with partial pivoting. Errors when the
/// condition estimate exceeds 1e8. Backward rule: d(A^-1) = -A^-1 dA A^-1.
inline NodePtr matrix_inverse(const NodePtr& x, int sample_index = -1) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2 || xv.shape[0] != xv.shape[1])
    throw ShapeError("matrix_inverse: tensor is not square");
  double cond = 0.0;
  Mat inv_m;
  try {
    inv_m = inverse(xv.to_mat(), &cond);
  } catch (const SingularityError& e) {
    throw SingularityError("matrix_inverse: singular input", e.condition(), sample_index);
  }
  if (cond > 1e8)
    throw SingularityError("matrix_inverse: condition estimate above 1e8", cond, sample_index);
  const int n = xv.shape[0];
  return detail::make_op("matrix_inverse", Tensor::from_mat(inv_m), {x}, [n](GraphNode& node) {
    // dX = -Y^T adj Y^T with Y = X^-1
    const Tensor& y = node.value;
    Tensor tmp({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += y.at(p, i) * node.adj.at(p, j);
        tmp.at(i, j) = s;
      }
    auto& px = *node.parents[0];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += tmp.at(i, p) * y.at(j, p);
        px.adj.at(i, j) -= s;
      }
  });
}

/// Mean squared error over all elements.
inline NodePtr mse_loss(const NodePtr& pred, const NodePtr& target) {
  if (!pred->value.same_shape(target->value))
    throw ShapeError("mse_loss: prediction and target shapes differ");
  const std::size_t n = pred->value.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred->value.data[i] - target->value.data[i];
    s += d * d;
  }
  const double loss = s / static_cast<double>(n);
  if (!std::isfinite(loss)) throw NumericalError("mse_loss: non-finite loss");
  return detail::make_op("mse_loss", Tensor::scalar(loss), {pred, target}, [n](GraphNode& node) {
    auto &pp = *node.parents[0], &pt = *node.parents[1];
    const double g = node.adj.data[0] * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pp.value.data[i] - pt.value.data[i];
      pp.adj.data[i] += g * d;
      pt.adj.data[i] -= g * d;
    }
  });
}

/// Mean softmax cross-entropy of logits [B x K] against integer labels.
inline NodePtr softmax_cross_entropy(const NodePtr& logits, const std::vector<int>& labels) {
  const Tensor& lv = logits->value;
  if (lv.ndim() != 2) throw ShapeError("softmax_cross_entropy: logits must be 2-D");
  const int bsz = lv.shape[0], k = lv.shape[1];
  if (static_cast<int>(labels.size()) != bsz)
    throw ShapeError("softmax_cross_entropy: label count does not match batch");
  Tensor probs({bsz, k});
  double loss = 0.0;
  for (int i = 0; i < bsz; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw InvalidArgumentError("softmax_cross_entropy: label out of range");
    double mx = lv.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, lv.at(i, j));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(lv.at(i, j) - mx);
    for (int j = 0; j < k; ++j) probs.at(i, j) = std::exp(lv.at(i, j) - mx) / z;
    loss -= std::log(probs.at(i, labels[i]));
  }
  loss /= bsz;
  if (!std::isfinite(loss)) throw NumericalError("softmax_cross_entropy: non-finite loss");
  return detail::make_op("softmax_cross_entropy", Tensor::scalar(loss), {logits},
                         [probs, labels, bsz, k](GraphNode& node) {
                           auto& pl = *node.parents[0];
                           const double g = node.adj.data[0] / bsz;
                           for (int i = 0; i < bsz; ++i)
                             for (int j = 0; j < k; ++j) {
                               double d = probs.at(i, j) - (labels[i] == j ? 1.0 : 0.0);
                               pl.adj.at(i, j) += g * d;
                             }
                         });
}

/// Reverse accumulation from a scalar root. Gradients accumulate into .grad;
/// calling twice without zero_grad doubles them.
inline void backward(const NodePtr& root) {
  if (root->value.numel() != 1)
    throw InvalidArgumentError("backward: root must be scalar-shaped");

  std::vector<GraphNode*> order;
  std::unordered_set<GraphNode*> seen;
  std::vector<std::pair<GraphNode*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      GraphNode* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // order is child-after-parents; walk it backwards for reverse accumulation
  for (GraphNode* n : order) n->adj = Tensor::zeros(n->value.shape);
  root->adj.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    GraphNode* n = *it;
    if (n->backprop) n->backprop(*n);
    detail::add_into(n->grad, n->adj);
    n->adj = Tensor();  // release scratch
  }
}

inline void zero_grad(std::span<const NodePtr> nodes) {
  for (const auto& n : nodes) n->grad = Tensor::zeros(n->value.shape);
}

inline void zero_grad(const std::vector<NodePtr>& nodes) {
  zero_grad(std::span<const NodePtr>(nodes));
}

}  // namespace laconv
