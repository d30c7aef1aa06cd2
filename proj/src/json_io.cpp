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
#include "tofu/json_io.hpp"

#include <set>

namespace tofu {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& known,
                    const std::string& what) {
  if (!j.is_object()) throw ParseError(what + " must be a JSON object", 0);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ParseError(what + ": unknown field \"" + key + "\"", 0);
    }
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field \"") + key + "\": " + e.what(), 0);
  }
}

const std::set<std::string> kReduceKeys = {"r", "d", "late_method",
                                           "protect_cls", "merge_string"};

}  // namespace

Json to_json(const VitConfig& cfg) {
  return Json{{"depth", cfg.depth},         {"channels", cfg.channels},
              {"heads", cfg.heads},         {"mlp_ratio", cfg.mlp_ratio},
              {"patch", cfg.patch},         {"image", cfg.image},
              {"cls_token", cfg.cls_token}, {"num_classes", cfg.num_classes}};
}

VitConfig vit_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"depth", "channels", "heads", "mlp_ratio", "patch", "image",
                  "cls_token", "num_classes"},
                 "model config");
  VitConfig cfg;
  cfg.depth = get_or<Index>(j, "depth", cfg.depth);
  cfg.channels = get_or<Index>(j, "channels", cfg.channels);
  cfg.heads = get_or<Index>(j, "heads", cfg.heads);
  cfg.mlp_ratio = get_or<Index>(j, "mlp_ratio", cfg.mlp_ratio);
  cfg.patch = get_or<Index>(j, "patch", cfg.patch);
  cfg.image = get_or<Index>(j, "image", cfg.image);
  cfg.cls_token = get_or<bool>(j, "cls_token", cfg.cls_token);
  cfg.num_classes = get_or<Index>(j, "num_classes", cfg.num_classes);
  cfg.validate();
  return cfg;
}

Json to_json(const ReduceSpec& spec) {
  Json j{{"r", spec.r},
         {"d", spec.d},
         {"late_method", std::string(to_string(spec.late_method))},
         {"protect_cls", spec.protect_cls}};
  if (!spec.merge_string.empty()) j["merge_string"] = spec.merge_string;
  return j;
}

ReduceSpec reduce_spec_from_json(const Json& j) {
  reject_unknown(j, kReduceKeys, "reduce spec");
  ReduceSpec spec;
  spec.r = get_or<Index>(j, "r", spec.r);
  spec.d = get_or<Index>(j, "d", spec.d);
  spec.late_method = parse_merge_method(get_or<std::string>(
      j, "late_method", std::string(to_string(spec.late_method))));
  spec.protect_cls = get_or<bool>(j, "protect_cls", spec.protect_cls);
  spec.merge_string = get_or<std::string>(j, "merge_string", "");
  if (spec.r < 0) throw ParseError("reduce spec: r must be >= 0", 0);
  if (spec.d < 1) throw ParseError("reduce spec: d must be >= 1", 0);
  if (!spec.merge_string.empty()) {
    // Also rejects unknown characters.
    parse_merge_string(spec.merge_string, 0, spec.late_method);
  }
  return spec;
}

Json to_json(const RunConfig& cfg) {
  Json j = to_json(cfg.reduce);
  j["mode"] = cfg.highway ? "highway" : "standard";
  j["placement"] = std::string(to_string(cfg.placement));
  j["mbm"] = Json{{"enabled", cfg.mbm.enabled}, {"t", cfg.mbm.threshold}};
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  std::set<std::string> known = kReduceKeys;
  known.insert({"mode", "placement", "mbm"});
  reject_unknown(j, known, "run config");
  RunConfig cfg;
  Json reduce = Json::object();
  for (const auto& [key, value] : j.items()) {
    if (kReduceKeys.contains(key)) reduce[key] = value;
  }
  cfg.reduce = reduce_spec_from_json(reduce);
  const auto mode = get_or<std::string>(j, "mode", "standard");
  if (mode != "standard" && mode != "highway") {
    throw ParseError("run config: unknown mode \"" + mode + "\"", 0);
  }
  cfg.highway = mode == "highway";
  cfg.placement =
      parse_placement(get_or<std::string>(j, "placement", "before-mlp"));
  if (auto it = j.find("mbm"); it != j.end()) {
    reject_unknown(*it, {"enabled", "t"}, "mbm");
    cfg.mbm.enabled = get_or<bool>(*it, "enabled", cfg.mbm.enabled);
    cfg.mbm.threshold = get_or<double>(*it, "t", cfg.mbm.threshold);
    if (cfg.mbm.threshold < 0.0) throw ParseError("mbm: t must be >= 0", 0);
  }
  return cfg;
}

Json to_json(const ReduceTrace& trace) {
  return Json{{"method", std::string(to_string(trace.method))},
              {"input_tokens", trace.input_tokens},
              {"output_tokens", trace.output_tokens},
              {"requested_r", trace.match.requested_r},
              {"clamped", trace.match.clamped},
              {"protect_cls", trace.protect_cls},
              {"partition",
               Json{{"src", trace.match.partition.src},
                    {"dst", trace.match.partition.dst}}},
              {"idx_src", trace.match.idx_src},
              {"idx_dst", trace.match.idx_dst},
              {"scores", trace.match.scores},
              {"output_index_of_input", trace.output_index_of_input},
              {"degenerate_groups", trace.degenerate_groups}};
}

Json to_json(const FlReport& report) {
  Json arr = Json::array();
  for (const auto& l : report.layers) {
    arr.push_back(Json{{"layer", l.layer},
                       {"mean_fl", l.mean_fl},
                       {"std_fl", l.std_fl},
                       {"count", l.count},
                       {"undefined", l.undefined}});
  }
  return arr;
}

FlReport fl_report_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("FL report must be a JSON array", 0);
  FlReport report;
  for (const auto& e : j) {
    reject_unknown(e, {"layer", "mean_fl", "std_fl", "count", "undefined"},
                   "FL layer");
    FlLayer l;
    l.layer = get_or<Index>(e, "layer", 0);
    l.mean_fl = get_or<double>(e, "mean_fl", 0.0);
    l.std_fl = get_or<double>(e, "std_fl", 0.0);
    l.count = get_or<Index>(e, "count", 0);
    l.undefined = get_or<Index>(e, "undefined", 0);
    report.layers.push_back(l);
  }
  return report;
}

Json to_json(const FlopReport& report) {
  Json layers = Json::array();
  for (const auto& l : report.layers) {
    layers.push_back(Json{{"layer", l.layer},
                          {"attn_tokens", l.attn_tokens},
                          {"mlp_tokens", l.mlp_tokens},
                          {"attn_flops", l.attn_flops},
                          {"mlp_flops", l.mlp_flops}});
  }
  return Json{{"layers", layers},
              {"patch_embed_flops", report.patch_embed_flops},
              {"total_flops", report.total_flops},
              {"total_gflops", report.total_gflops()}};
}

FlopReport flop_report_from_json(const Json& j) {
  reject_unknown(j, {"layers", "patch_embed_flops", "total_flops", "total_gflops"},
                 "FLOP report");
  auto layers = j.find("layers");
  if (layers == j.end() || !layers->is_array()) {
    throw ParseError("FLOP report: \"layers\" must be an array", 0);
  }
  FlopReport report;
  for (const auto& e : *layers) {
    reject_unknown(e, {"layer", "attn_tokens", "mlp_tokens", "attn_flops",
                       "mlp_flops"},
                   "FLOP layer");
    FlopReport::Layer l;
    l.layer = get_or<Index>(e, "layer", 0);
    l.attn_tokens = get_or<Index>(e, "attn_tokens", 0);
    l.mlp_tokens = get_or<Index>(e, "mlp_tokens", 0);
    l.attn_flops = get_or<std::int64_t>(e, "attn_flops", 0);
    l.mlp_flops = get_or<std::int64_t>(e, "mlp_flops", 0);
    report.layers.push_back(l);
  }
  report.patch_embed_flops = get_or<std::int64_t>(j, "patch_embed_flops", 0);
  report.total_flops = get_or<std::int64_t>(j, "total_flops", 0);
  return report;
}

}  // namespace tofu
