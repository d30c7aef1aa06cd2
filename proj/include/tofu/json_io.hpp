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
// JSON schemas for configs and reports. Every writer emits keys in a fixed
// order, so write -> parse -> write is byte-stable.

#ifndef TOFU_JSON_IO_HPP_
#define TOFU_JSON_IO_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tofu/flops.hpp"
#include "tofu/fusion.hpp"
#include "tofu/highway.hpp"
#include "tofu/linearity.hpp"
#include "tofu/vit.hpp"

namespace tofu {

using Json = nlohmann::ordered_json;

Json to_json(const VitConfig& cfg);
VitConfig vit_config_from_json(const Json& j);

/// {"r":8,"d":6,"late_method":"mlerp","protect_cls":true[,"merge_string":..]}
Json to_json(const ReduceSpec& spec);
ReduceSpec reduce_spec_from_json(const Json& j);

/// A ReduceSpec plus execution mode: "mode" ("standard"|"highway"),
/// "placement" ("before-mlp"|"before-attn") and "mbm" {"enabled","t"}.
struct RunConfig {
  ReduceSpec reduce;
  bool highway = false;
  ReducePlacement placement = ReducePlacement::BeforeMlp;
  MbmConfig mbm;
};
Json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j);

Json to_json(const ReduceTrace& trace);

/// [{"layer":l,"mean_fl":..,"std_fl":..,"count":..}, ...]
Json to_json(const FlReport& report);
FlReport fl_report_from_json(const Json& j);

Json to_json(const FlopReport& report);
FlopReport flop_report_from_json(const Json& j);

}  // namespace tofu

#endif  // TOFU_JSON_IO_HPP_
