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
// Token highway: the reduced ("local") path does the work, and its
// per-module outputs are distributed back onto a full-length residual
// stream through a local path index I (full position -> local row).
//
//   X_full' = X_full + M (.) D(F_local),   D(F)[i] = F[I[i]]
//
// The local stream carries its own residual, so stacked blocks never
// recompute R from the full path; I holds the composition of every reduce
// applied so far.

#ifndef TOFU_HIGHWAY_HPP_
#define TOFU_HIGHWAY_HPP_

#include <limits>
#include <numeric>
#include <vector>

#include "tofu/fusion.hpp"
#include "tofu/vit.hpp"

namespace tofu {

struct LocalPathIndex {
  std::vector<Index> map;  // full position -> local row
  Index local_tokens = 0;

  static LocalPathIndex identity(Index n) {
    LocalPathIndex out;
    out.map.resize(static_cast<std::size_t>(n));
    std::iota(out.map.begin(), out.map.end(), Index{0});
    out.local_tokens = n;
    return out;
  }
  Index full_tokens() const { return static_cast<Index>(map.size()); }

  friend bool operator==(const LocalPathIndex&, const LocalPathIndex&) = default;
};

struct MbmConfig {
  double threshold = 1.0;
  bool enabled = false;
};

/// Folds one reduce into I: the local identity is scattered with
/// idx_src -> idx_dst, pushed through the trace's output ordering, and
/// composed with the previous index.
inline LocalPathIndex update_index(const LocalPathIndex& index,
                                   const ReduceTrace& trace) {
  const Index n_local = trace.input_tokens;
  if (index.local_tokens != n_local ||
      static_cast<Index>(trace.output_index_of_input.size()) != n_local) {
    throw InvalidInput("local path index covers " +
                       std::to_string(index.local_tokens) +
                       " local rows, trace expects " + std::to_string(n_local));
  }
  std::vector<Index> step(static_cast<std::size_t>(n_local));
  std::iota(step.begin(), step.end(), Index{0});
  for (std::size_t k = 0; k < trace.match.idx_src.size(); ++k) {
    const Index s = trace.match.idx_src[k], d = trace.match.idx_dst[k];
    if (s < 0 || s >= n_local || d < 0 || d >= n_local) {
      throw InvalidInput("merge pair (" + std::to_string(s) + ", " +
                         std::to_string(d) + ") out of range");
    }
    step[static_cast<std::size_t>(s)] = d;
  }
  for (Index& e : step) {
    e = trace.output_index_of_input[static_cast<std::size_t>(e)];
    if (e < 0 || e >= trace.output_tokens) {
      throw InvalidInput("trace maps outside its output");
    }
  }
  LocalPathIndex out;
  out.local_tokens = trace.output_tokens;
  out.map.reserve(index.map.size());
  for (Index e : index.map) {
    if (e < 0 || e >= n_local) {
      throw InvalidInput("local path index entry " + std::to_string(e) +
                         " out of range");
    }
    out.map.push_back(step[static_cast<std::size_t>(e)]);
  }
  return out;
}

/// F_full[i] = F_local[I[i]].
template <typename Derived>
RowMatrix<typename Derived::Scalar> distribute(
    const Eigen::MatrixBase<Derived>& local, const LocalPathIndex& index) {
  RowMatrix<typename Derived::Scalar> full(index.full_tokens(), local.cols());
  for (Index i = 0; i < index.full_tokens(); ++i) {
    const Index e = index.map[static_cast<std::size_t>(i)];
    if (e < 0 || e >= local.rows()) {
      throw InvalidInput("dangling local path index " + std::to_string(e) +
                         " at position " + std::to_string(i) + " for " +
                         std::to_string(local.rows()) + " local rows");
    }
    full.row(i) = local.row(e);
  }
  return full;
}

/// Full positions whose local row is shared with another position.
inline std::vector<bool> merged_positions(const LocalPathIndex& index) {
  std::vector<Index> size(static_cast<std::size_t>(index.local_tokens), 0);
  for (Index e : index.map) ++size[static_cast<std::size_t>(e)];
  std::vector<bool> out;
  out.reserve(index.map.size());
  for (Index e : index.map) out.push_back(size[static_cast<std::size_t>(e)] > 1);
  return out;
}

/// M[i, j] = 0 where token i was touched by a reduce and |X_full[i, j]| >= t.
template <typename Derived>
RowMatrix<typename Derived::Scalar> mbm_mask(
    const Eigen::MatrixBase<Derived>& full, const std::vector<bool>& merged,
    const MbmConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Index>(merged.size()) != full.rows()) {
    throw DimensionError("merged-position set does not match full path");
  }
  if (cfg.threshold < 0.0) throw InvalidInput("MBM threshold must be >= 0");
  RowMatrix<Scalar> mask = RowMatrix<Scalar>::Ones(full.rows(), full.cols());
  if (!cfg.enabled) return mask;
  for (Index i = 0; i < full.rows(); ++i) {
    if (!merged[static_cast<std::size_t>(i)]) continue;
    for (Index j = 0; j < full.cols(); ++j) {
      if (std::abs(static_cast<double>(full(i, j))) >= cfg.threshold) {
        mask(i, j) = Scalar(0);
      }
    }
  }
  return mask;
}

template <typename Scalar>
struct HighwayState {
  RowMatrix<Scalar> full;
  RowMatrix<Scalar> local;
  LocalPathIndex index;

  template <typename Derived>
  static HighwayState start(const Eigen::MatrixBase<Derived>& x) {
    return {x, x, LocalPathIndex::identity(x.rows())};
  }
};

namespace detail {

template <typename Scalar>
void highway_residual(HighwayState<Scalar>& s, const RowMatrix<Scalar>& f,
                      const MbmConfig& mbm) {
  const RowMatrix<Scalar> spread = distribute(f, s.index);
  if (mbm.enabled) {
    s.full += mbm_mask(s.full, merged_positions(s.index), mbm)
                  .cwiseProduct(spread);
  } else {
    s.full += spread;
  }
  s.local += f;
}

template <typename Scalar, typename DerivedM>
void highway_reduce(HighwayState<Scalar>& s,
                    const Eigen::MatrixBase<DerivedM>& metric,
                    const LayerPlan& plan, std::optional<ReduceTrace>& trace) {
  auto red = apply_reduce(s.local, metric, plan.method, plan.r,
                          plan.protect_cls);
  s.index = update_index(s.index, red.trace);
  s.local = std::move(red.reduced);
  trace = std::move(red.trace);
}

}  // namespace detail

template <typename Scalar>
struct HighwayBlockOutput {
  HighwayState<Scalar> state;
  std::optional<ReduceTrace> trace;
};

/// One block on the local path with its outputs distributed onto the full
/// path. r == 0 reproduces the plain block on the full tokens.
template <typename Scalar>
HighwayBlockOutput<Scalar> highway_block(HighwayState<Scalar> state,
                                         const BlockWeights<Scalar>& w,
                                         Index heads, const LayerPlan& plan,
                                         const MbmConfig& mbm = {}) {
  if (plan.r < 0 || plan.r > max_reduction(state.local.rows())) {
    throw ScheduleError("cannot remove " + std::to_string(plan.r) + " of " +
                        std::to_string(state.local.rows()) + " local tokens");
  }
  HighwayBlockOutput<Scalar> out;
  if (plan.placement == ReducePlacement::BeforeAttn && plan.r > 0) {
    const RowMatrix<Scalar> metric =
        plan.metric_source() == MetricSource::Features
            ? state.local
            : detail::head_mean_keys(
                  layernorm_rows(state.local, w.norm1_gamma, w.norm1_beta), w,
                  heads);
    detail::highway_reduce(state, metric, plan, out.trace);
  }
  auto a = attention(layernorm_rows(state.local, w.norm1_gamma, w.norm1_beta),
                     w, heads);
  detail::highway_residual(state, a.out, mbm);
  if (plan.placement == ReducePlacement::BeforeMlp && plan.r > 0) {
    if (plan.metric_source() == MetricSource::Keys) {
      detail::highway_reduce(state, a.keys, plan, out.trace);
    } else {
      const RowMatrix<Scalar> metric = state.local;
      detail::highway_reduce(state, metric, plan, out.trace);
    }
  }
  const RowMatrix<Scalar> m =
      mlp(layernorm_rows(state.local, w.norm2_gamma, w.norm2_beta), w);
  detail::highway_residual(state, m, mbm);
  out.state = std::move(state);
  return out;
}

/// Stacked highway blocks over a batch; `tokens` in the result is the full
/// path and `token_counts` tracks the local path length.
template <typename Scalar>
ForwardResult<Scalar> highway_forward(const TokenTensor<Scalar>& x,
                                      const VitModel<Scalar>& model,
                                      const ReduceSpec& spec,
                                      const ForwardOptions& opts = {},
                                      const MbmConfig& mbm = {}) {
  const auto depth = static_cast<Index>(model.blocks.size());
  if (x.channels() != model.config.channels) {
    throw DimensionError("tokens do not match model channels");
  }
  validate(spec, depth);
  ForwardResult<Scalar> out;
  for (Index l = 0; l < depth; ++l) {
    out.methods.push_back(method_for_layer(l, depth, spec));
  }
  std::vector<HighwayState<Scalar>> states;
  for (Index b = 0; b < x.batch(); ++b) {
    states.push_back(HighwayState<Scalar>::start(x.item(b)));
  }
  Index n = x.tokens();
  for (Index l = 0; l < depth; ++l) {
    LayerPlan plan;
    plan.r = std::min(spec.r, max_reduction(n));
    plan.method = out.methods[static_cast<std::size_t>(l)];
    plan.protect_cls = spec.protect_cls;
    plan.placement = opts.placement;
    plan.metric = opts.metric;
    std::vector<std::optional<ReduceTrace>> traces(states.size());
    for_each_item(x.batch(), opts.threads, [&](Index b) {
      auto res = highway_block(std::move(states[static_cast<std::size_t>(b)]),
                               model.blocks[static_cast<std::size_t>(l)],
                               model.config.heads, plan, mbm);
      states[static_cast<std::size_t>(b)] = std::move(res.state);
      traces[static_cast<std::size_t>(b)] = std::move(res.trace);
    });
    if (!states.empty()) n = states.front().local.rows();
    out.token_counts.push_back(n);
    if (opts.keep_traces) {
      std::vector<ReduceTrace> layer;
      for (auto& t : traces) {
        if (t) layer.push_back(std::move(*t));
      }
      out.traces.push_back(std::move(layer));
    }
  }
  std::vector<RowMatrix<Scalar>> full;
  for (auto& s : states) full.push_back(std::move(s.full));
  out.tokens = full.empty() ? TokenTensor<Scalar>(0, x.tokens(), x.channels())
                            : TokenTensor<Scalar>::stack(full);
  if (opts.head != HeadMode::None) {
    if (!model.head) throw InvalidInput("model has no classification head");
    out.logits = classify(out.tokens, *model.head, opts.head);
  }
  return out;
}

}  // namespace tofu

#endif  // TOFU_HIGHWAY_HPP_
