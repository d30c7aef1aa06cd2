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
// Token Fusion reduce: pruned, average and MLERP merging of a BSM match,
// depth-dependent method dispatch, and value-copy unmerge.

#ifndef TOFU_FUSION_HPP_
#define TOFU_FUSION_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tofu/matching.hpp"
#include "tofu/tensor.hpp"

namespace tofu {

enum class MergeMethod { Pruned, Average, Mlerp };

inline std::string_view to_string(MergeMethod m) {
  switch (m) {
    case MergeMethod::Pruned:
      return "pruned";
    case MergeMethod::Average:
      return "average";
    case MergeMethod::Mlerp:
      return "mlerp";
  }
  return "?";
}

inline MergeMethod parse_merge_method(std::string_view s) {
  if (s == "pruned") return MergeMethod::Pruned;
  if (s == "average") return MergeMethod::Average;
  if (s == "mlerp") return MergeMethod::Mlerp;
  throw ParseError("unknown merge method \"" + std::string(s) + "\"", 0);
}

/// Per-model reduction schedule. Layers l < d prune, the rest use
/// `late_method`, unless `merge_string` pins every layer explicitly.
struct ReduceSpec {
  Index r = 0;
  Index d = 6;
  MergeMethod late_method = MergeMethod::Mlerp;
  bool protect_cls = true;
  std::string merge_string;  // empty: use d / late_method
};

/// Where one application of the reduce went: the match plus, for every
/// input row, the output row that now carries it.
struct ReduceTrace {
  MatchResult match;
  MergeMethod method = MergeMethod::Pruned;
  bool protect_cls = false;
  std::vector<Index> output_index_of_input;
  Index input_tokens = 0;
  Index output_tokens = 0;
  Index degenerate_groups = 0;  // MLERP groups whose mean vanished
};

template <typename Scalar>
struct ReduceResult {
  RowMatrix<Scalar> reduced;
  ReduceTrace trace;
};

namespace detail {

template <typename DerivedD, typename DerivedS>
void check_merge_args(const Eigen::MatrixBase<DerivedD>& dst,
                      const Eigen::MatrixBase<DerivedS>& src,
                      std::span<const Index> idx_dst_local) {
  if (static_cast<std::size_t>(src.rows()) != idx_dst_local.size()) {
    throw DimensionError("merge: " + std::to_string(src.rows()) +
                         " src rows but " +
                         std::to_string(idx_dst_local.size()) + " targets");
  }
  if (src.rows() > 0 && src.cols() != dst.cols()) {
    throw DimensionError("merge: src " + shape_string(src.rows(), src.cols()) +
                         " vs dst " + shape_string(dst.rows(), dst.cols()));
  }
  for (Index k : idx_dst_local) {
    if (k < 0 || k >= dst.rows()) {
      throw InvalidInput("merge target " + std::to_string(k) +
                         " outside dst with " + std::to_string(dst.rows()) +
                         " rows");
    }
  }
}

/// Group sums (dst row plus every src scattered onto it) in double.
template <typename DerivedD, typename DerivedS>
void group_sums(const Eigen::MatrixBase<DerivedD>& dst,
                const Eigen::MatrixBase<DerivedS>& src,
                std::span<const Index> idx_dst_local, RowMatrixd& sum,
                std::vector<Index>& count) {
  sum = dst.template cast<double>();
  count.assign(static_cast<std::size_t>(dst.rows()), 1);
  for (std::size_t k = 0; k < idx_dst_local.size(); ++k) {
    sum.row(idx_dst_local[k]) +=
        src.row(static_cast<Index>(k)).template cast<double>();
    ++count[static_cast<std::size_t>(idx_dst_local[k])];
  }
}

}  // namespace detail

/// Discards the src rows; `dst` comes back unchanged.
template <typename DerivedD, typename DerivedS>
RowMatrix<typename DerivedD::Scalar> merge_pruned(
    const Eigen::MatrixBase<DerivedD>& dst,
    const Eigen::MatrixBase<DerivedS>& src,
                               std::span<const Index> idx_dst_local) {
  detail::check_merge_args(dst, src, idx_dst_local);
  return dst.eval();
}

/// Scatter-mean: each touched dst row becomes the mean of itself and every
/// src row sent to it.
template <typename DerivedD, typename DerivedS>
RowMatrix<typename DerivedD::Scalar> merge_average(
    const Eigen::MatrixBase<DerivedD>& dst,
    const Eigen::MatrixBase<DerivedS>& src,
                                std::span<const Index> idx_dst_local) {
  detail::check_merge_args(dst, src, idx_dst_local);
  using Scalar = typename DerivedD::Scalar;
  RowMatrixd sum;
  std::vector<Index> count;
  detail::group_sums(dst, src, idx_dst_local, sum, count);
  RowMatrix<Scalar> out = dst;
  for (Index j = 0; j < dst.rows(); ++j) {
    const Index c = count[static_cast<std::size_t>(j)];
    if (c > 1) {
      out.row(j) = (sum.row(j) / static_cast<double>(c)).template cast<Scalar>();
    }
  }
  return out;
}

/// Norm-preserving mean: the group mean's direction scaled to the largest
/// norm in the group. A group whose mean norm falls below 1e-12 keeps the
/// plain mean and is counted in `degenerate_groups`.
template <typename DerivedD, typename DerivedS>
RowMatrix<typename DerivedD::Scalar> merge_mlerp(
    const Eigen::MatrixBase<DerivedD>& dst,
    const Eigen::MatrixBase<DerivedS>& src,
                              std::span<const Index> idx_dst_local,
                              Index* degenerate_groups = nullptr) {
  detail::check_merge_args(dst, src, idx_dst_local);
  using Scalar = typename DerivedD::Scalar;
  RowMatrixd sum;
  std::vector<Index> count;
  detail::group_sums(dst, src, idx_dst_local, sum, count);
  Eigen::VectorXd max_norm = row_norms(dst);
  const Eigen::VectorXd src_norm = row_norms(src);
  for (std::size_t k = 0; k < idx_dst_local.size(); ++k) {
    max_norm(idx_dst_local[k]) =
        std::max(max_norm(idx_dst_local[k]), src_norm(static_cast<Index>(k)));
  }
  Index degenerate = 0;
  RowMatrix<Scalar> out = dst;
  for (Index j = 0; j < dst.rows(); ++j) {
    const Index c = count[static_cast<std::size_t>(j)];
    if (c == 1) continue;
    Eigen::RowVectorXd mean = sum.row(j) / static_cast<double>(c);
    const double norm = mean.norm();
    if (norm < 1e-12) {
      ++degenerate;
    } else {
      mean *= max_norm(j) / norm;
    }
    out.row(j) = mean.template cast<Scalar>();
  }
  if (degenerate_groups != nullptr) *degenerate_groups = degenerate;
  return out;
}

/// Hybrid dispatch: prune below depth d, `late_method` from d on.
inline MergeMethod select_method(Index layer, const ReduceSpec& spec) {
  return layer < spec.d ? MergeMethod::Pruned : spec.late_method;
}

/// 'P' -> pruned, 'A' -> `late_method`, one character per layer. A nonzero
/// `expected_layers` also pins the length.
inline std::vector<MergeMethod> parse_merge_string(
    std::string_view s, std::size_t expected_layers = 0,
    MergeMethod late_method = MergeMethod::Average) {
  std::vector<MergeMethod> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 'P') {
      out.push_back(MergeMethod::Pruned);
    } else if (s[i] == 'A') {
      out.push_back(late_method);
    } else {
      throw ParseError(std::string("merge string: unexpected character '") +
                           s[i] + "'",
                       i);
    }
  }
  if (expected_layers != 0 && s.size() != expected_layers) {
    throw ParseError("merge string has " + std::to_string(s.size()) +
                         " layers, model has " +
                         std::to_string(expected_layers),
                     std::min(s.size(), expected_layers));
  }
  return out;
}

/// Method for layer `l` of an `depth`-layer model under `spec`.
inline MergeMethod method_for_layer(Index layer, Index depth,
                                    const ReduceSpec& spec) {
  if (!spec.merge_string.empty()) {
    const auto methods = parse_merge_string(
        spec.merge_string, static_cast<std::size_t>(depth), spec.late_method);
    return methods.at(static_cast<std::size_t>(layer));
  }
  return select_method(layer, spec);
}

/// r >= 0, 1 <= d <= depth, and a merge string (if any) of length depth.
inline void validate(const ReduceSpec& spec, Index depth) {
  if (spec.r < 0) throw InvalidInput("negative reduction count");
  if (spec.d < 1 || spec.d > depth) {
    throw InvalidInput("hybrid threshold d=" + std::to_string(spec.d) +
                       " outside [1, " + std::to_string(depth) + "]");
  }
  if (!spec.merge_string.empty()) {
    parse_merge_string(spec.merge_string, static_cast<std::size_t>(depth),
                       spec.late_method);
  }
}

/// Applies an existing match to `x`. Output rows are the unmatched SRC
/// tokens followed by the DST tokens, each in ascending global order; with
/// `protect_cls` the DST row of token 0 is emitted first so that it stays at
/// position 0 (and hence in DST) for the next application.
template <typename Derived>
ReduceResult<typename Derived::Scalar> reduce_with_match(
    const Eigen::MatrixBase<Derived>& x, const MatchResult& match,
    MergeMethod method, bool protect_cls) {
  using Scalar = typename Derived::Scalar;
  const Partition& p = match.partition;
  const Index n = x.rows();
  if (p.tokens() != n) {
    throw DimensionError("match covers " + std::to_string(p.tokens()) +
                         " tokens, input has " + std::to_string(n));
  }
  std::vector<Index> dst_local(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < p.dst.size(); ++k) {
    dst_local[static_cast<std::size_t>(p.dst[k])] = static_cast<Index>(k);
  }
  std::vector<bool> merged(static_cast<std::size_t>(n), false);
  for (Index s : match.idx_src) merged[static_cast<std::size_t>(s)] = true;

  std::vector<Index> unchanged;
  unchanged.reserve(p.src.size() - match.idx_src.size());
  for (Index s : p.src) {
    if (!merged[static_cast<std::size_t>(s)]) unchanged.push_back(s);
  }

  RowMatrix<Scalar> dst(static_cast<Index>(p.dst.size()), x.cols());
  for (std::size_t k = 0; k < p.dst.size(); ++k) {
    dst.row(static_cast<Index>(k)) = x.row(p.dst[k]);
  }
  ReduceResult<Scalar> out;
  ReduceTrace& trace = out.trace;
  trace.match = match;
  trace.method = method;
  trace.protect_cls = protect_cls;
  trace.input_tokens = n;

  RowMatrix<Scalar> merged_dst;
  if (method == MergeMethod::Pruned) {
    merged_dst = std::move(dst);
  } else {
    RowMatrix<Scalar> src(match.r(), x.cols());
    std::vector<Index> targets;
    targets.reserve(match.idx_dst.size());
    for (Index k = 0; k < match.r(); ++k) {
      src.row(k) = x.row(match.idx_src[static_cast<std::size_t>(k)]);
      targets.push_back(dst_local[static_cast<std::size_t>(
          match.idx_dst[static_cast<std::size_t>(k)])]);
    }
    merged_dst = method == MergeMethod::Average
                     ? merge_average(dst, src, targets)
                     : merge_mlerp(dst, src, targets,
                                           &trace.degenerate_groups);
  }

  const auto n_unc = static_cast<Index>(unchanged.size());
  const auto n_dst = static_cast<Index>(p.dst.size());
  const bool pin_first = protect_cls && n_dst > 0 && p.dst.front() == 0;
  trace.output_tokens = n_unc + n_dst;
  trace.output_index_of_input.assign(static_cast<std::size_t>(n), -1);
  out.reduced.resize(trace.output_tokens, x.cols());

  Index row = 0;
  auto emit_dst = [&](Index k) {
    out.reduced.row(row) = merged_dst.row(k);
    trace.output_index_of_input[static_cast<std::size_t>(
        p.dst[static_cast<std::size_t>(k)])] = row++;
  };
  if (pin_first) emit_dst(0);
  for (Index s : unchanged) {
    out.reduced.row(row) = x.row(s);
    trace.output_index_of_input[static_cast<std::size_t>(s)] = row++;
  }
  for (Index k = pin_first ? 1 : 0; k < n_dst; ++k) emit_dst(k);
  for (Index k = 0; k < match.r(); ++k) {
    const auto s = static_cast<std::size_t>(match.idx_src[static_cast<std::size_t>(k)]);
    trace.output_index_of_input[s] = trace.output_index_of_input[
        static_cast<std::size_t>(match.idx_dst[static_cast<std::size_t>(k)])];
  }
  return out;
}

/// One reduce R(x, r, method): partition, match on `metric`, merge.
template <typename Derived, typename DerivedM>
ReduceResult<typename Derived::Scalar> apply_reduce(
    const Eigen::MatrixBase<Derived>& x,
    const Eigen::MatrixBase<DerivedM>& metric, MergeMethod method, Index r,
    bool protect_cls) {
  if (metric.rows() != x.rows()) {
    throw DimensionError("metric has " + std::to_string(metric.rows()) +
                         " rows for " + std::to_string(x.rows()) + " tokens");
  }
  const Partition p = partition(x.rows(), protect_cls);
  const MatchResult match = bipartite_soft_match(metric, p, r);
  return reduce_with_match(x, match, method, protect_cls);
}

/// Restores the pre-reduce length: every input position receives a copy of
/// the output row that absorbed it.
template <typename Derived>
RowMatrix<typename Derived::Scalar> unmerge(
    const Eigen::MatrixBase<Derived>& reduced, const ReduceTrace& trace) {
  if (reduced.rows() != trace.output_tokens ||
      static_cast<Index>(trace.output_index_of_input.size()) !=
          trace.input_tokens) {
    throw InvalidInput("unmerge: " + std::to_string(reduced.rows()) +
                       " reduced rows for a trace of " +
                       std::to_string(trace.input_tokens) + " -> " +
                       std::to_string(trace.output_tokens));
  }
  RowMatrix<typename Derived::Scalar> out(trace.input_tokens, reduced.cols());
  for (Index i = 0; i < trace.input_tokens; ++i) {
    out.row(i) =
        reduced.row(trace.output_index_of_input[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace tofu

#endif  // TOFU_FUSION_HPP_
