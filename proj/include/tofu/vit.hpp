/*
 * Copyright 2026 The ToFu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Minimal pre-norm ViT encoder that hosts the reduce operation.
//
//   BeforeMlp:  x* = x + ATTN(LN1(x));  x* = R(x*, keys);  y = x* + MLP(LN2(x*))
//   BeforeAttn: x' = R(x, x);  y' = block(x');  y = unmerge(y')
//
// Weight matrices are stored input-major: an activation row times the
// weight gives the output row (the transpose of a torch Linear weight).

#ifndef TOFU_VIT_HPP_
#define TOFU_VIT_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tofu/fusion.hpp"
#include "tofu/tensor.hpp"

namespace tofu {

struct VitConfig {
  Index depth = 12;
  Index channels = 768;
  Index heads = 12;
  Index mlp_ratio = 4;
  Index patch = 16;
  Index image = 224;
  bool cls_token = true;
  Index num_classes = 0;  // 0: no classification head

  Index patches() const { return (image / patch) * (image / patch); }
  Index tokens() const { return patches() + (cls_token ? 1 : 0); }
  Index head_dim() const { return channels / heads; }
  Index hidden() const { return channels * mlp_ratio; }

  void validate() const {
    if (depth < 1 || channels < 1 || heads < 1 || mlp_ratio < 1 ||
        patch < 1 || image < patch || num_classes < 0) {
      throw InvalidInput("invalid ViT configuration");
    }
    if (channels % heads != 0) {
      throw InvalidInput("channels (" + std::to_string(channels) +
                         ") not divisible by heads (" + std::to_string(heads) +
                         ")");
    }
  }

  friend bool operator==(const VitConfig&, const VitConfig&) = default;
};

/// Named architectures: vit-tiny, vit-s16, vit-b16, vit-l16 (all 16px
/// patches on 224px images with a CLS token).
inline VitConfig vit_preset(std::string_view name) {
  VitConfig cfg;
  if (name == "vit-tiny") {
    cfg.depth = 12, cfg.channels = 192, cfg.heads = 3;
  } else if (name == "vit-s16") {
    cfg.depth = 12, cfg.channels = 384, cfg.heads = 6;
  } else if (name == "vit-b16") {
    cfg.depth = 12, cfg.channels = 768, cfg.heads = 12;
  } else if (name == "vit-l16") {
    cfg.depth = 24, cfg.channels = 1024, cfg.heads = 16;
  } else {
    throw InvalidInput("unknown architecture \"" + std::string(name) + "\"");
  }
  return cfg;
}

template <typename Scalar>
struct BlockWeights {
  RowMatrix<Scalar> qkv_weight;  // C x 3C, columns [q | k | v], heads contiguous
  Vector<Scalar> qkv_bias;
  RowMatrix<Scalar> proj_weight;  // C x C
  Vector<Scalar> proj_bias;
  Vector<Scalar> norm1_gamma, norm1_beta;
  RowMatrix<Scalar> fc1_weight;  // C x hidden
  Vector<Scalar> fc1_bias;
  RowMatrix<Scalar> fc2_weight;  // hidden x C
  Vector<Scalar> fc2_bias;
  Vector<Scalar> norm2_gamma, norm2_beta;

  static BlockWeights zeros(const VitConfig& cfg) {
    const Index c = cfg.channels, h = cfg.hidden();
    BlockWeights w;
    w.qkv_weight = RowMatrix<Scalar>::Zero(c, 3 * c);
    w.qkv_bias = Vector<Scalar>::Zero(3 * c);
    w.proj_weight = RowMatrix<Scalar>::Zero(c, c);
    w.proj_bias = Vector<Scalar>::Zero(c);
    w.norm1_gamma = Vector<Scalar>::Ones(c);
    w.norm1_beta = Vector<Scalar>::Zero(c);
    w.fc1_weight = RowMatrix<Scalar>::Zero(c, h);
    w.fc1_bias = Vector<Scalar>::Zero(h);
    w.fc2_weight = RowMatrix<Scalar>::Zero(h, c);
    w.fc2_bias = Vector<Scalar>::Zero(c);
    w.norm2_gamma = Vector<Scalar>::Ones(c);
    w.norm2_beta = Vector<Scalar>::Zero(c);
    return w;
  }

  template <typename Other>
  BlockWeights<Other> cast() const {
    BlockWeights<Other> o;
    o.qkv_weight = qkv_weight.template cast<Other>();
    o.qkv_bias = qkv_bias.template cast<Other>();
    o.proj_weight = proj_weight.template cast<Other>();
    o.proj_bias = proj_bias.template cast<Other>();
    o.norm1_gamma = norm1_gamma.template cast<Other>();
    o.norm1_beta = norm1_beta.template cast<Other>();
    o.fc1_weight = fc1_weight.template cast<Other>();
    o.fc1_bias = fc1_bias.template cast<Other>();
    o.fc2_weight = fc2_weight.template cast<Other>();
    o.fc2_bias = fc2_bias.template cast<Other>();
    o.norm2_gamma = norm2_gamma.template cast<Other>();
    o.norm2_beta = norm2_beta.template cast<Other>();
    return o;
  }

  friend bool operator==(const BlockWeights& a, const BlockWeights& b) {
    return a.qkv_weight == b.qkv_weight && a.qkv_bias == b.qkv_bias &&
           a.proj_weight == b.proj_weight && a.proj_bias == b.proj_bias &&
           a.norm1_gamma == b.norm1_gamma && a.norm1_beta == b.norm1_beta &&
           a.fc1_weight == b.fc1_weight && a.fc1_bias == b.fc1_bias &&
           a.fc2_weight == b.fc2_weight && a.fc2_bias == b.fc2_bias &&
           a.norm2_gamma == b.norm2_gamma && a.norm2_beta == b.norm2_beta;
  }
};

/// Final layernorm and linear classifier.
template <typename Scalar>
struct HeadWeights {
  Vector<Scalar> norm_gamma, norm_beta;
  RowMatrix<Scalar> weight;  // C x classes
  Vector<Scalar> bias;

  friend bool operator==(const HeadWeights&, const HeadWeights&) = default;
};

template <typename Scalar>
struct VitModel {
  VitConfig config;
  std::vector<BlockWeights<Scalar>> blocks;
  std::optional<HeadWeights<Scalar>> head;

  template <typename Other>
  VitModel<Other> cast() const {
    VitModel<Other> o;
    o.config = config;
    for (const auto& b : blocks) o.blocks.push_back(b.template cast<Other>());
    if (head) {
      o.head = HeadWeights<Other>{head->norm_gamma.template cast<Other>(),
                                  head->norm_beta.template cast<Other>(),
                                  head->weight.template cast<Other>(),
                                  head->bias.template cast<Other>()};
    }
    return o;
  }

  friend bool operator==(const VitModel& a, const VitModel& b) {
    return a.config == b.config && a.blocks == b.blocks && a.head == b.head;
  }
};

enum class ReducePlacement { BeforeMlp, BeforeAttn };
enum class MetricSource { Keys, Features };

inline std::string_view to_string(ReducePlacement p) {
  return p == ReducePlacement::BeforeMlp ? "before-mlp" : "before-attn";
}
inline ReducePlacement parse_placement(std::string_view s) {
  if (s == "before-mlp") return ReducePlacement::BeforeMlp;
  if (s == "before-attn") return ReducePlacement::BeforeAttn;
  throw ParseError("unknown placement \"" + std::string(s) + "\"", 0);
}

template <typename Scalar>
struct AttentionOutput {
  RowMatrix<Scalar> out;   // N x C
  RowMatrix<Scalar> keys;  // N x C/H, keys averaged over heads
};

/// Multi-head self-attention on already normalized tokens.
template <typename Derived>
AttentionOutput<typename Derived::Scalar> attention(
    const Eigen::MatrixBase<Derived>& x,
    const BlockWeights<typename Derived::Scalar>& w, Index heads) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows(), c = x.cols();
  if (heads < 1 || c % heads != 0 || w.qkv_weight.rows() != c ||
      w.qkv_weight.cols() != 3 * c || w.proj_weight.rows() != c ||
      w.proj_weight.cols() != c) {
    throw DimensionError("attention weights " +
                         shape_string(w.qkv_weight.rows(),
                                      w.qkv_weight.cols()) +
                         " do not fit tokens " + shape_string(n, c) + " with " +
                         std::to_string(heads) + " heads");
  }
  const Index hd = c / heads;
  const RowMatrix<Scalar> qkv = linear(x, w.qkv_weight, w.qkv_bias);
  const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(double(hd)));
  RowMatrix<Scalar> mixed(n, c);
  RowMatrix<Scalar> keys = RowMatrix<Scalar>::Zero(n, hd);
  for (Index h = 0; h < heads; ++h) {
    const auto q = qkv.middleCols(h * hd, hd);
    const auto k = qkv.middleCols(c + h * hd, hd);
    const auto v = qkv.middleCols(2 * c + h * hd, hd);
    RowMatrix<Scalar> logits(n, n);
    logits.noalias() = q * k.transpose();
    logits *= scale;
    const RowMatrix<Scalar> attn = softmax_rows(logits);
    mixed.middleCols(h * hd, hd).noalias() = attn * v;
    keys += k;
  }
  keys /= static_cast<Scalar>(heads);
  return {linear(mixed, w.proj_weight, w.proj_bias), std::move(keys)};
}

/// fc2(gelu(fc1(x))) on already normalized tokens.
template <typename Derived>
RowMatrix<typename Derived::Scalar> mlp(
    const Eigen::MatrixBase<Derived>& x,
    const BlockWeights<typename Derived::Scalar>& w) {
  return linear(gelu(linear(x, w.fc1_weight, w.fc1_bias)), w.fc2_weight,
                w.fc2_bias);
}

/// What a single block should do about token reduction.
struct LayerPlan {
  Index r = 0;
  MergeMethod method = MergeMethod::Pruned;
  bool protect_cls = true;
  ReducePlacement placement = ReducePlacement::BeforeMlp;
  std::optional<MetricSource> metric;  // default: keys before MLP, x before ATTN

  MetricSource metric_source() const {
    if (metric) return *metric;
    return placement == ReducePlacement::BeforeMlp ? MetricSource::Keys
                                                   : MetricSource::Features;
  }
};

template <typename Scalar>
struct BlockOutput {
  RowMatrix<Scalar> y;
  std::optional<ReduceTrace> trace;
};

/// Largest r a sequence of n tokens can give up while keeping one DST token.
inline Index max_reduction(Index n) { return n < 2 ? 0 : n / 2; }

namespace detail {

template <typename Derived>
RowMatrix<typename Derived::Scalar> head_mean_keys(
    const Eigen::MatrixBase<Derived>& x_norm,
    const BlockWeights<typename Derived::Scalar>& w, Index heads) {
  using Scalar = typename Derived::Scalar;
  const Index c = x_norm.cols(), hd = c / heads;
  RowMatrix<Scalar> keys = RowMatrix<Scalar>::Zero(x_norm.rows(), hd);
  for (Index h = 0; h < heads; ++h) {
    RowMatrix<Scalar> k = x_norm * w.qkv_weight.middleCols(c + h * hd, hd);
    k.rowwise() += w.qkv_bias.segment(c + h * hd, hd).transpose();
    keys += k;
  }
  keys /= static_cast<Scalar>(heads);
  return keys;
}

}  // namespace detail

/// One transformer block with an optional reduce at `plan.placement`.
/// r == 0 runs the plain block with no reordering.
template <typename Derived>
BlockOutput<typename Derived::Scalar> block_forward(
    const Eigen::MatrixBase<Derived>& x,
    const BlockWeights<typename Derived::Scalar>& w, Index heads,
    const LayerPlan& plan) {
  using Scalar = typename Derived::Scalar;
  if (plan.r < 0 || plan.r > max_reduction(x.rows())) {
    throw ScheduleError("cannot remove " + std::to_string(plan.r) +
                        " of " + std::to_string(x.rows()) +
                        " tokens and keep a DST token");
  }
  BlockOutput<Scalar> out;
  if (plan.placement == ReducePlacement::BeforeMlp) {
    auto a = attention(layernorm_rows(x, w.norm1_gamma, w.norm1_beta), w,
                       heads);
    RowMatrix<Scalar> xs = x + a.out;
    if (plan.r > 0) {
      auto red = plan.metric_source() == MetricSource::Keys
                     ? apply_reduce(xs, a.keys, plan.method, plan.r,
                                    plan.protect_cls)
                     : apply_reduce(xs, xs, plan.method, plan.r,
                                    plan.protect_cls);
      xs = std::move(red.reduced);
      out.trace = std::move(red.trace);
    }
    out.y = xs + mlp(layernorm_rows(xs, w.norm2_gamma, w.norm2_beta), w);
    return out;
  }

  auto run = [&](const auto& tokens) {
    RowMatrix<Scalar> xs =
        tokens +
        attention(layernorm_rows(tokens, w.norm1_gamma, w.norm1_beta), w, heads)
            .out;
    return RowMatrix<Scalar>(
        xs + mlp(layernorm_rows(xs, w.norm2_gamma, w.norm2_beta), w));
  };
  if (plan.r == 0) {
    out.y = run(x);
    return out;
  }
  const RowMatrix<Scalar> metric =
      plan.metric_source() == MetricSource::Features
          ? RowMatrix<Scalar>(x)
          : detail::head_mean_keys(
                layernorm_rows(x, w.norm1_gamma, w.norm1_beta), w, heads);
  auto red = apply_reduce(x, metric, plan.method, plan.r, plan.protect_cls);
  out.y = unmerge(run(red.reduced), red.trace);
  out.trace = std::move(red.trace);
  return out;
}

/// Token counts entering ATTN and MLP at each layer under the clamped
/// linear decay: layer l removes min(r, floor(n_l / 2)) tokens.
struct LayerTokens {
  Index attn = 0;
  Index mlp = 0;
  Index out = 0;
  Index r = 0;
};

inline std::vector<LayerTokens> token_schedule(Index tokens, Index depth,
                                               Index r,
                                               ReducePlacement placement) {
  std::vector<LayerTokens> out;
  Index n = tokens;
  for (Index l = 0; l < depth; ++l) {
    LayerTokens t;
    t.r = std::min(r, max_reduction(n));
    if (placement == ReducePlacement::BeforeMlp) {
      t.attn = n;
      t.mlp = n - t.r;
      t.out = t.mlp;
    } else {
      t.attn = t.mlp = n - t.r;
      t.out = n;
    }
    n = t.out;
    out.push_back(t);
  }
  return out;
}

enum class HeadMode { None, MeanPool, Cls };

struct ForwardOptions {
  ReducePlacement placement = ReducePlacement::BeforeMlp;
  std::optional<MetricSource> metric;
  HeadMode head = HeadMode::None;
  unsigned threads = 1;
  bool keep_traces = false;
};

template <typename Scalar>
struct ForwardResult {
  TokenTensor<Scalar> tokens;
  std::optional<RowMatrix<Scalar>> logits;  // B x classes
  std::vector<Index> token_counts;          // after each layer
  std::vector<MergeMethod> methods;         // dispatched per layer
  std::vector<std::vector<ReduceTrace>> traces;  // [layer][batch item]
};

/// Runs `fn(b)` for every batch item, spread over `threads` workers.
template <typename Fn>
void for_each_item(Index batch, unsigned threads, Fn&& fn) {
  if (threads <= 1 || batch <= 1) {
    for (Index b = 0; b < batch; ++b) fn(b);
    return;
  }
  std::vector<std::jthread> pool;
  const auto workers = std::min<Index>(threads, batch);
  for (Index t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (Index b = t; b < batch; b += workers) fn(b);
    });
  }
}

template <typename Scalar>
RowMatrix<Scalar> classify(const TokenTensor<Scalar>& tokens,
                           const HeadWeights<Scalar>& head, HeadMode mode) {
  RowMatrix<Scalar> pooled(tokens.batch(), tokens.channels());
  for (Index b = 0; b < tokens.batch(); ++b) {
    const auto item = tokens.item(b);
    if (mode == HeadMode::Cls) {
      pooled.row(b) = item.row(0);
    } else {
      pooled.row(b) =
          (item.template cast<double>().colwise().sum() / double(item.rows()))
              .template cast<Scalar>();
    }
  }
  return linear(layernorm_rows(pooled, head.norm_gamma, head.norm_beta),
                head.weight, head.bias);
}

/// Applies every block with the spec's per-layer r (clamped so one DST
/// token always survives) and method dispatch.
template <typename Scalar>
ForwardResult<Scalar> forward(const TokenTensor<Scalar>& x,
                              const VitModel<Scalar>& model,
                              const ReduceSpec& spec,
                              const ForwardOptions& opts = {}) {
  const VitConfig& cfg = model.config;
  const auto depth = static_cast<Index>(model.blocks.size());
  if (x.channels() != cfg.channels) {
    throw DimensionError("tokens have " + std::to_string(x.channels()) +
                         " channels, model expects " +
                         std::to_string(cfg.channels));
  }
  validate(spec, depth);
  ForwardResult<Scalar> out;
  for (Index l = 0; l < depth; ++l) {
    out.methods.push_back(method_for_layer(l, depth, spec));
  }

  std::vector<RowMatrix<Scalar>> items(static_cast<std::size_t>(x.batch()));
  for (Index b = 0; b < x.batch(); ++b) items[static_cast<std::size_t>(b)] = x.item(b);
  Index n = x.tokens();
  for (Index l = 0; l < depth; ++l) {
    LayerPlan plan;
    plan.r = std::min(spec.r, max_reduction(n));
    plan.method = out.methods[static_cast<std::size_t>(l)];
    plan.protect_cls = spec.protect_cls;
    plan.placement = opts.placement;
    plan.metric = opts.metric;
    std::vector<std::optional<ReduceTrace>> traces(items.size());
    for_each_item(x.batch(), opts.threads, [&](Index b) {
      auto res = block_forward(items[static_cast<std::size_t>(b)],
                               model.blocks[static_cast<std::size_t>(l)],
                               cfg.heads, plan);
      items[static_cast<std::size_t>(b)] = std::move(res.y);
      traces[static_cast<std::size_t>(b)] = std::move(res.trace);
    });
    if (!items.empty()) n = items.front().rows();
    out.token_counts.push_back(n);
    if (opts.keep_traces) {
      std::vector<ReduceTrace> layer;
      for (auto& t : traces) {
        if (t) layer.push_back(std::move(*t));
      }
      out.traces.push_back(std::move(layer));
    }
  }
  out.tokens = x.batch() == 0 ? TokenTensor<Scalar>(0, n, x.channels())
                              : TokenTensor<Scalar>::stack(items);
  if (opts.head != HeadMode::None) {
    if (!model.head) throw InvalidInput("model has no classification head");
    out.logits = classify(out.tokens, *model.head, opts.head);
  }
  return out;
}

}  // namespace tofu

#endif  // TOFU_VIT_HPP_
