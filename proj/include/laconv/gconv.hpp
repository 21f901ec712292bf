#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "laconv/autodiff.hpp"
#include "laconv/errors.hpp"
#include "laconv/image.hpp"
#include "laconv/lie.hpp"
#include "laconv/optim.hpp"
#include "laconv/rng.hpp"
#include "laconv/tensor.hpp"

namespace laconv {

enum class Activation { relu, sigmoid };

inline NodePtr activate(const NodePtr& x, Activation a) {
  return a == Activation::relu ? relu(x) : sigmoid(x);
}

namespace detail {

/// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] init.
inline Tensor uniform_init(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data) v = rng.uniform(-r, r);
  return t;
}

}  // namespace detail

/// Learned algebra-to-group map: coefficients -> sigma(W c + b) reshaped to
/// n x n. Weight rows index algebra coordinates; parameter count is
/// n^2 * (algebra_dim + 1).
struct MappingNet {
  GroupDescriptor group;
  NodePtr weight;  // [algebra_dim x n^2]
  NodePtr bias;    // [n^2]
  Activation activation = Activation::sigmoid;

  static MappingNet make(const GroupDescriptor& group, Activation act, Rng& rng) {
    const int n2 = group.matrix_dim * group.matrix_dim;
    MappingNet m{group,
                 parameter(detail::uniform_init({group.algebra_dim, n2}, group.algebra_dim, rng)),
                 parameter(detail::uniform_init({n2}, group.algebra_dim, rng)), act};
    return m;
  }

  /// n x n output matrix for one algebra element (graph node).
  NodePtr forward(const std::vector<double>& coeffs) const {
    const int n = group.matrix_dim;
    auto in = constant(Tensor({1, group.algebra_dim}, coeffs));
    auto out = activate(affine(in, weight, bias), activation);
    return reshape(out, {n, n});
  }

  int parameter_count() const {
    const int n2 = group.matrix_dim * group.matrix_dim;
    return n2 * (group.algebra_dim + 1);
  }
};

/// Kernel function k: R^{n x n} -> R^{c_out x c_in} as a 2-layer ReLU MLP on
/// the flattened matrix. bound_K is a declared bound used only in reporting.
struct KernelNet {
  NodePtr w1;  // [n^2 x hidden]
  NodePtr b1;  // [hidden]
  NodePtr w2;  // [hidden x c_out*c_in]
  NodePtr b2;  // [c_out*c_in]
  int hidden_width = 32;
  int c_out = 1;
  int c_in = 1;
  double bound_K = 1.0;

  static KernelNet make(int n2, int hidden, int c_out, int c_in, Rng& rng) {
    KernelNet k;
    k.hidden_width = hidden;
    k.c_out = c_out;
    k.c_in = c_in;
    k.w1 = parameter(detail::uniform_init({n2, hidden}, n2, rng));
    k.b1 = parameter(detail::uniform_init({hidden}, n2, rng));
    k.w2 = parameter(detail::uniform_init({hidden, c_out * c_in}, hidden, rng));
    k.b2 = parameter(detail::uniform_init({c_out * c_in}, hidden, rng));
    return k;
  }

  /// [1 x n^2] -> [1 x c_out*c_in]
  NodePtr forward(const NodePtr& flat_arg) const {
    return affine(relu(affine(flat_arg, w1, b1)), w2, b2);
  }

  int parameter_count() const {
    const int n2 = w1->value.shape[0];
    return n2 * hidden_width + hidden_width + hidden_width * c_out * c_in + c_out * c_in;
  }
};

/// One almost-equivariant Lie algebra convolution layer.
///
/// strict_mode replaces the learned map with the exact exponential; the
/// mapping parameters are then never part of the forward graph. vol_scale is
/// kept positive by storing its logarithm as the learnable parameter.
struct LieConvLayer {
  MappingNet mapping;
  KernelNet kernel;
  AlgebraSampleSet in_samples;
  AlgebraSampleSet out_points;
  bool strict_mode = false;
  NodePtr log_vol_scale;   // [1]
  double lambda_reg = 1e-6;

  double vol_scale() const { return std::exp(log_vol_scale->value.data[0]); }

  static LieConvLayer make(const AlgebraSampleSet& in_samples, const AlgebraSampleSet& out_points,
                           int c_in, int c_out, int kernel_hidden, bool strict,
                           Activation mapping_act, Rng& rng) {
    const auto& g = in_samples.group;
    LieConvLayer layer{MappingNet::make(g, mapping_act, rng),
                       KernelNet::make(g.matrix_dim * g.matrix_dim, kernel_hidden, c_out, c_in, rng),
                       in_samples,
                       out_points,
                       strict,
                       parameter(Tensor::scalar(std::log(1.0 / in_samples.count()))),
                       1e-6};
    return layer;
  }

  std::vector<NodePtr> parameters() const {
    return {mapping.weight, mapping.bias, kernel.w1, kernel.b1, kernel.w2, kernel.b2,
            log_vol_scale};
  }
};

namespace detail {

/// Block matrix [N_out*c_out x N_in*c_in] assembled from per-(j,i) kernel
/// outputs given as [1 x c_out*c_in] nodes in j-major order.
inline NodePtr assemble_kernel_blocks(const std::vector<NodePtr>& blocks, int n_out, int n_in,
                                      int c_out, int c_in) {
  Tensor out({n_out * c_out, n_in * c_in});
  for (int j = 0; j < n_out; ++j)
    for (int i = 0; i < n_in; ++i) {
      const Tensor& blk = blocks[static_cast<std::size_t>(j) * n_in + i]->value;
      for (int b = 0; b < c_out; ++b)
        for (int a = 0; a < c_in; ++a)
          out.at(j * c_out + b, i * c_in + a) = blk.data[static_cast<std::size_t>(b) * c_in + a];
    }
  return make_op("kernel_blocks", std::move(out), blocks,
                 [n_out, n_in, c_out, c_in](GraphNode& node) {
                   for (int j = 0; j < n_out; ++j)
                     for (int i = 0; i < n_in; ++i) {
                       auto& p = *node.parents[static_cast<std::size_t>(j) * n_in + i];
                       for (int b = 0; b < c_out; ++b)
                         for (int a = 0; a < c_in; ++a)
                           p.adj.data[static_cast<std::size_t>(b) * c_in + a] +=
                               node.adj.at(j * c_out + b, i * c_in + a);
                     }
                 });
}

/// Mean over the N row blocks of [N*c x B] -> [c x B].
inline NodePtr pool_blocks_mean(const NodePtr& x, int n, int c) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2 || xv.shape[0] != n * c) throw ShapeError("pool_blocks_mean: bad shape");
  const int b = xv.shape[1];
  Tensor out({c, b});
  for (int j = 0; j < n; ++j)
    for (int ch = 0; ch < c; ++ch)
      for (int col = 0; col < b; ++col) out.at(ch, col) += xv.at(j * c + ch, col);
  const double inv = 1.0 / n;
  for (double& v : out.data) v *= inv;
  return make_op("pool_blocks_mean", std::move(out), {x}, [n, c, b, inv](GraphNode& node) {
    auto& p = *node.parents[0];
    for (int j = 0; j < n; ++j)
      for (int ch = 0; ch < c; ++ch)
        for (int col = 0; col < b; ++col) p.adj.at(j * c + ch, col) += node.adj.at(ch, col) * inv;
  });
}

/// Max over the N row blocks of [N*c x B] -> [c x B].
inline NodePtr pool_blocks_max(const NodePtr& x, int n, int c) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2 || xv.shape[0] != n * c) throw ShapeError("pool_blocks_max: bad shape");
  const int b = xv.shape[1];
  Tensor out({c, b});
  std::vector<int> arg(static_cast<std::size_t>(c) * b, 0);
  for (int ch = 0; ch < c; ++ch)
    for (int col = 0; col < b; ++col) {
      double best = xv.at(ch, col);
      int bj = 0;
      for (int j = 1; j < n; ++j)
        if (xv.at(j * c + ch, col) > best) {
          best = xv.at(j * c + ch, col);
          bj = j;
        }
      out.at(ch, col) = best;
      arg[static_cast<std::size_t>(ch) * b + col] = bj;
    }
  return make_op("pool_blocks_max", std::move(out), {x}, [arg, c, b](GraphNode& node) {
    auto& p = *node.parents[0];
    for (int ch = 0; ch < c; ++ch)
      for (int col = 0; col < b; ++col)
        p.adj.at(arg[static_cast<std::size_t>(ch) * b + col] * c + ch, col) +=
            node.adj.at(ch, col);
  });
}

}  // namespace detail

/// Per-sample inverse factors M(x_i)^-1 (learned map, regularized) or
/// exp(x_i)^-1 = exp(-x_i) exactly in strict mode.
inline std::vector<NodePtr> lie_conv_inverse_factors(const LieConvLayer& layer) {
  const int n = layer.in_samples.group.matrix_dim;
  std::vector<NodePtr> inv;
  inv.reserve(layer.in_samples.samples.size());
  for (std::size_t i = 0; i < layer.in_samples.samples.size(); ++i) {
    const auto& s = layer.in_samples.samples[i];
    if (layer.strict_mode) {
      inv.push_back(constant(Tensor::from_mat(expm(-1.0 * s.matrix))));
    } else {
      auto m = layer.mapping.forward(s.coeffs);
      Mat reg = layer.lambda_reg * Mat::identity(n);
      auto m_reg = add(m, constant(Tensor::from_mat(reg)));
      try {
        inv.push_back(matrix_inverse(m_reg, static_cast<int>(i)));
      } catch (const SingularityError& e) {
        throw SingularityError("lie_conv: mapping output near-singular at sample " +
                                   std::to_string(i),
                               e.condition(), static_cast<int>(i));
      }
    }
  }
  return inv;
}

/// The vol_scale-weighted block kernel matrix K with
/// K[(j,b),(i,a)] = vol_scale * kernel(M(x_i)^-1 exp(u_j))[b,a].
inline NodePtr lie_conv_kernel_matrix(const LieConvLayer& layer) {
  const int n_in = layer.in_samples.count();
  const int n_out = layer.out_points.count();
  const int n = layer.in_samples.group.matrix_dim;
  const auto inv = lie_conv_inverse_factors(layer);

  std::vector<NodePtr> exp_u;
  exp_u.reserve(n_out);
  for (const auto& u : layer.out_points.samples)
    exp_u.push_back(constant(Tensor::from_mat(expm(u.matrix))));

  std::vector<NodePtr> blocks;
  blocks.reserve(static_cast<std::size_t>(n_out) * n_in);
  for (int j = 0; j < n_out; ++j)
    for (int i = 0; i < n_in; ++i) {
      auto arg = reshape(matmul(inv[i], exp_u[j]), {1, n * n});
      blocks.push_back(layer.kernel.forward(arg));
    }
  auto k = detail::assemble_kernel_blocks(blocks, n_out, n_in, layer.kernel.c_out,
                                          layer.kernel.c_in);
  return mul(exp_elem(layer.log_vol_scale), k);
}

/// Discretized Lie algebra convolution:
/// out[j] = vol_scale * sum_i kernel(M(x_i)^-1 exp(u_j)) f[i].
/// f_values is [N_in x c_in]; the result is [N_out x c_out].
inline NodePtr lie_conv_forward(const LieConvLayer& layer, const NodePtr& f_values) {
  const int n_in = layer.in_samples.count();
  if (f_values->value.ndim() != 2 || f_values->value.shape[0] != n_in)
    throw ShapeError("lie_conv_forward: f row count must equal the in-sample count");
  const int c_in = f_values->value.shape[1];
  if (c_in != layer.kernel.c_in) throw ShapeError("lie_conv_forward: channel mismatch");
  auto k = lie_conv_kernel_matrix(layer);
  auto flat = reshape(f_values, {n_in * c_in, 1});
  auto out = matmul(k, flat);
  return reshape(out, {layer.out_points.count(), layer.kernel.c_out});
}

/// Shared learnable 2D convolution + ReLU + spatial mean pool used by the
/// image lifting layer.
struct SpatialConv {
  NodePtr weight;  // [k*k*c_in x c_out]
  NodePtr bias;    // [c_out]
  int k = 3;
  int c_in = 1;
  int c_out = 16;

  static SpatialConv make(int k, int c_in, int c_out, Rng& rng) {
    const int fan = k * k * c_in;
    return {parameter(detail::uniform_init({fan, c_out}, fan, rng)),
            parameter(detail::uniform_init({c_out}, fan, rng)), k, c_in, c_out};
  }

  /// Valid-mode patches of an image as a constant [P x k*k*c_in] node.
  NodePtr im2col(const Image& img) const {
    const int ph = img.h - k + 1, pw = img.w - k + 1;
    if (ph <= 0 || pw <= 0) throw ConfigError("spatial kernel larger than image");
    Tensor t({ph * pw, k * k * c_in});
    std::size_t row = 0;
    for (int r = 0; r < ph; ++r)
      for (int c = 0; c < pw; ++c, ++row) {
        std::size_t col = 0;
        for (int dr = 0; dr < k; ++dr)
          for (int dc = 0; dc < k; ++dc)
            for (int ch = 0; ch < c_in; ++ch) t.data[row * (k * k * c_in) + col++] =
                img.at(r + dr, c + dc, ch);
      }
    return constant(std::move(t));
  }

  /// Image -> c_out feature vector [c_out] (conv, relu, mean over positions).
  NodePtr forward(const Image& img) const {
    return colmean(relu(affine(im2col(img), weight, bias)));
  }
};

/// Lifts an image to a function on the algebra samples: row i is the shared
/// spatial feature vector of the image transformed by exp(x_i)^-1.
inline NodePtr lift_image(const Image& img, const AlgebraSampleSet& samples,
                          const SpatialConv& conv, ResampleMethod method) {
  std::vector<NodePtr> rows;
  rows.reserve(samples.samples.size());
  for (const auto& s : samples.samples) {
    const GroupElement ginv{samples.group, expm(-1.0 * s.matrix)};
    rows.push_back(conv.forward(act_image(ginv, img, method)));
  }
  return stack_rows(rows);
}

/// Time embedding for scalar-input tasks: row i = relu(E [t, coeffs(x_i)] + e).
struct TimeEmbed {
  NodePtr weight;  // [(1+algebra_dim) x c]
  NodePtr bias;    // [c]

  static TimeEmbed make(int algebra_dim, int c, Rng& rng) {
    return {parameter(detail::uniform_init({1 + algebra_dim, c}, 1 + algebra_dim, rng)),
            parameter(detail::uniform_init({c}, 1 + algebra_dim, rng))};
  }
};

inline NodePtr lift_scalar_time(double t, const AlgebraSampleSet& samples,
                                const TimeEmbed& embed) {
  if (!std::isfinite(t)) throw InvalidArgumentError("lift_scalar_time: non-finite t");
  const int adim = samples.group.algebra_dim;
  const int n = samples.count();
  Tensor in({n, 1 + adim});
  for (int i = 0; i < n; ++i) {
    in.at(i, 0) = t;
    for (int k = 0; k < adim; ++k) in.at(i, k + 1) = samples.samples[i].coeffs[k];
  }
  return relu(affine(constant(std::move(in)), embed.weight, embed.bias));
}

enum class PoolMode { mean, max };

/// Column-wise reduction of [N x c] to [c].
inline NodePtr pool_invariant(const NodePtr& values, PoolMode mode) {
  if (values->value.ndim() != 2 || values->value.shape[0] < 1)
    throw ShapeError("pool_invariant: expects a nonempty 2-D tensor");
  return mode == PoolMode::mean ? colmean(values) : colmax(values);
}

enum class TaskKind { pendulum, classify };

/// Model architecture. For classify + exact_c4 the sample set is the C4 grid
/// and image transforms use the lossless index permutation.
struct ArchitectureConfig {
  TaskKind task = TaskKind::pendulum;
  GroupId group = GroupId::SO2;
  int n_hidden_layers = 1;
  int hidden_channels = 16;
  int kernel_hidden = 32;
  int spatial_kernel = 3;
  int n_algebra_samples = 10;
  std::vector<Interval> algebra_bounds;  // empty => group defaults
  bool strict_mode = false;
  bool exact_c4 = false;
  PoolMode pool = PoolMode::mean;
  Activation mapping_activation = Activation::sigmoid;
  int n_classes = 4;
  int image_size = 16;
  int image_channels = 1;
  std::uint64_t init_seed = 0;

  int output_dim() const { return task == TaskKind::classify ? n_classes : 2; }
};

/// Assembled model: lift -> (LieConv + relu) x L -> invariant pool -> head.
struct Model {
  ArchitectureConfig arch;
  AlgebraSampleSet samples;
  SpatialConv spatial;   // image lift (classify)
  TimeEmbed embed;       // scalar lift (pendulum)
  std::vector<LieConvLayer> layers;
  NodePtr head_w;  // [c x out]
  NodePtr head_b;  // [out]

  ResampleMethod lift_method() const {
    return arch.exact_c4 ? ResampleMethod::exact_c4 : ResampleMethod::bilinear;
  }

  /// Parameters in the declaration order used by the checkpoint layout.
  std::vector<NodePtr> parameters() const {
    std::vector<NodePtr> ps;
    if (arch.task == TaskKind::classify) {
      ps.push_back(spatial.weight);
      ps.push_back(spatial.bias);
    } else {
      ps.push_back(embed.weight);
      ps.push_back(embed.bias);
    }
    for (const auto& l : layers) {
      auto lp = l.parameters();
      ps.insert(ps.end(), lp.begin(), lp.end());
    }
    ps.push_back(head_w);
    ps.push_back(head_b);
    return ps;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p->value.numel();
    return n;
  }

  /// Forward pass over a batch of lifted columns [N*c x B].
  NodePtr forward_lifted(std::vector<NodePtr> lifted_cols) const {
    const int n = samples.count(), c = arch.hidden_channels;
    NodePtr x = stack_cols(lifted_cols);
    std::vector<NodePtr> kmats;
    for (const auto& l : layers) kmats.push_back(lie_conv_kernel_matrix(l));
    for (const auto& k : kmats) x = relu(matmul(k, x));
    NodePtr pooled = arch.pool == PoolMode::mean ? detail::pool_blocks_mean(x, n, c)
                                                 : detail::pool_blocks_max(x, n, c);
    return affine(transpose(pooled), head_w, head_b);  // [B x out]
  }

  /// Logits [B x n_classes] for a batch of images.
  NodePtr forward_images(const std::vector<Image>& batch) const {
    const int n = samples.count(), c = arch.hidden_channels;
    std::vector<NodePtr> cols;
    cols.reserve(batch.size());
    for (const auto& img : batch)
      cols.push_back(reshape(lift_image(img, samples, spatial, lift_method()), {n * c, 1}));
    return forward_lifted(std::move(cols));
  }

  /// Predictions [B x 2] for a batch of times.
  NodePtr forward_times(const std::vector<double>& ts) const {
    const int n = samples.count(), c = arch.hidden_channels;
    std::vector<NodePtr> cols;
    cols.reserve(ts.size());
    for (double t : ts)
      cols.push_back(reshape(lift_scalar_time(t, samples, embed), {n * c, 1}));
    return forward_lifted(std::move(cols));
  }

  Vec2 predict_xy(double t) const {
    auto out = forward_times({t});
    return {out->value.at(0, 0), out->value.at(0, 1)};
  }

  std::vector<double> predict_logits(const Image& img) const {
    auto out = forward_images({img});
    return out->value.data;
  }
};

/// Closed-form parameter count for a config (documented in the README's
/// configuration reference; pinned by tests).
inline std::size_t expected_parameter_count(const ArchitectureConfig& a) {
  const auto g = GroupDescriptor::of(a.group);
  const int n2 = g.matrix_dim * g.matrix_dim;
  const int c = a.hidden_channels;
  std::size_t lift = a.task == TaskKind::classify
                         ? static_cast<std::size_t>(a.spatial_kernel) * a.spatial_kernel *
                                   a.image_channels * c + c
                         : static_cast<std::size_t>(1 + g.algebra_dim) * c + c;
  std::size_t per_layer = static_cast<std::size_t>(n2) * (g.algebra_dim + 1) +
                          static_cast<std::size_t>(n2) * a.kernel_hidden + a.kernel_hidden +
                          static_cast<std::size_t>(a.kernel_hidden) * c * c + c * c + 1;
  std::size_t head = static_cast<std::size_t>(c) * a.output_dim() + a.output_dim();
  return lift + per_layer * a.n_hidden_layers + head;
}

inline Model build_model(const ArchitectureConfig& arch) {
  if (arch.n_hidden_layers < 1) throw ConfigError("build_model: need at least one layer");
  if (arch.hidden_channels < 1) throw ConfigError("build_model: need at least one channel");
  if (arch.task == TaskKind::classify && arch.n_classes < 2)
    throw ConfigError("build_model: classification needs >= 2 classes");
  const auto g = GroupDescriptor::of(arch.group);
  if (arch.exact_c4 && arch.group != GroupId::SO2)
    throw ConfigError("build_model: exact_c4 requires SO2");

  Model m;
  m.arch = arch;
  Rng rng(derive_seed(arch.init_seed, 0xA11CE));

  if (arch.exact_c4) {
    m.samples = c4_grid();
    m.arch.n_algebra_samples = 4;
  } else {
    auto bounds = arch.algebra_bounds.empty() ? default_bounds(g) : arch.algebra_bounds;
    m.samples = sample_algebra(g, bounds, arch.n_algebra_samples,
                               derive_seed(arch.init_seed, 0x5A3));
  }

  const int c = arch.hidden_channels;
  if (arch.task == TaskKind::classify)
    m.spatial = SpatialConv::make(arch.spatial_kernel, arch.image_channels, c, rng);
  else
    m.embed = TimeEmbed::make(g.algebra_dim, c, rng);

  for (int l = 0; l < arch.n_hidden_layers; ++l)
    m.layers.push_back(LieConvLayer::make(m.samples, m.samples, c, c, arch.kernel_hidden,
                                          arch.strict_mode, arch.mapping_activation, rng));

  m.head_w = parameter(detail::uniform_init({c, m.arch.output_dim()}, c, rng));
  m.head_b = parameter(detail::uniform_init({m.arch.output_dim()}, c, rng));
  return m;
}

/// Fits the mapping net of a layer to the exponential map on its sample set
/// (Adam on the mean squared matrix error). Returns the final mse.
inline double pretrain_mapping_to_exp(LieConvLayer& layer, int steps = 500, double lr = 0.05) {
  std::vector<NodePtr> params{layer.mapping.weight, layer.mapping.bias};
  AdamState state = AdamState::init(params);
  double mse = 0.0;
  for (int s = 0; s < steps; ++s) {
    NodePtr loss;
    for (const auto& x : layer.in_samples.samples) {
      auto target = constant(Tensor::from_mat(expm(x.matrix)));
      auto l = mse_loss(layer.mapping.forward(x.coeffs), target);
      loss = loss ? add(loss, l) : l;
    }
    loss = mul(loss, constant(Tensor::scalar(1.0 / layer.in_samples.count())));
    zero_grad(params);
    backward(loss);
    adam_step(params, state, lr);
    mse = loss->value.data[0];
  }
  return mse;
}

}  // namespace laconv
