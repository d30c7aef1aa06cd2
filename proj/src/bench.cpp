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
#include "tofu/bench.hpp"

#include <algorithm>
#include <chrono>

#include "tofu/log.hpp"
#include "tofu/random.hpp"

namespace tofu {

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw InvalidInput("percentile of no samples");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

TimingSummary summarize(const std::vector<double>& samples) {
  TimingSummary s;
  s.count = samples.size();
  s.median = percentile(samples, 0.5);
  s.p10 = percentile(samples, 0.1);
  s.p90 = percentile(samples, 0.9);
  s.min = *std::min_element(samples.begin(), samples.end());
  s.max = *std::max_element(samples.begin(), samples.end());
  return s;
}

BenchCase bench_case(const std::string& name, Index r, Index d, Index depth) {
  BenchCase c;
  c.name = name;
  c.spec.r = r;
  c.spec.d = std::clamp<Index>(d, 1, depth);
  const auto all = [&](char ch) {
    return std::string(static_cast<std::size_t>(depth), ch);
  };
  if (name == "full") {
    c.spec.r = 0;
  } else if (name == "pruned") {
    c.spec.merge_string = all('P');
  } else if (name == "average") {
    c.spec.merge_string = all('A');
    c.spec.late_method = MergeMethod::Average;
  } else if (name == "mlerp") {
    c.spec.merge_string = all('A');
    c.spec.late_method = MergeMethod::Mlerp;
  } else if (name == "hybrid") {
    c.spec.late_method = MergeMethod::Mlerp;
  } else if (name == "hybrid-average") {
    c.spec.late_method = MergeMethod::Average;
  } else {
    throw InvalidInput("unknown bench case \"" + name + "\"");
  }
  return c;
}

const BenchRow& BenchReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw InvalidInput("no bench row named " + name);
}

BenchReport run_bench(const BenchOptions& options,
                      const std::vector<BenchCase>& cases) {
  if (options.repeats < 3) throw InvalidInput("bench needs at least 3 repeats");
  if (options.warmup < 1) throw InvalidInput("bench needs at least 1 warmup");
  if (cases.empty()) throw InvalidInput("nothing to benchmark");
  const VitModel<float> model = random_model<float>(options.model, options.seed);
  const TokenTensorf tokens =
      random_tokens<float>(options.batch, options.model.tokens(),
                           options.model.channels, options.seed + 1);
  ForwardOptions fwd;
  fwd.placement = options.placement;
  fwd.threads = options.threads;

  BenchReport report;
  report.options = options;
  for (const auto& c : cases) {
    BenchRow row;
    row.name = c.name;
    row.spec = c.spec;
    report.rows.push_back(std::move(row));
  }
  auto run_once = [&](std::size_t k) {
    const auto start = std::chrono::steady_clock::now();
    const auto res =
        options.highway
            ? highway_forward(tokens, model, cases[k].spec, fwd, options.mbm)
            : forward(tokens, model, cases[k].spec, fwd);
    const auto stop = std::chrono::steady_clock::now();
    report.rows[k].final_tokens = res.token_counts.back();
    return std::chrono::duration<double, std::milli>(stop - start).count();
  };

  for (Index w = 0; w < options.warmup; ++w) {
    for (std::size_t k = 0; k < cases.size(); ++k) run_once(k);
  }
  for (Index rep = 0; rep < options.repeats; ++rep) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const std::size_t k = (i + static_cast<std::size_t>(rep)) % cases.size();
      const double ms = run_once(k);
      report.rows[k].samples_ms.push_back(ms);
      log_debug("bench " + cases[k].name + " repeat " + std::to_string(rep) +
                ": " + std::to_string(ms) + " ms");
    }
  }
  for (auto& row : report.rows) {
    row.ms = summarize(row.samples_ms);
    const double seconds = row.ms.median / 1e3;
    row.images_per_sec = static_cast<double>(options.batch) / seconds;
    row.tokens_per_sec =
        static_cast<double>(options.batch * options.model.tokens()) / seconds;
  }
  return report;
}

Json to_json(const BenchReport& report) {
  const BenchOptions& o = report.options;
  Json config{{"model", to_json(o.model)},
              {"batch", o.batch},
              {"repeats", o.repeats},
              {"warmup", o.warmup},
              {"seed", o.seed},
              {"threads", o.threads},
              {"placement", std::string(to_string(o.placement))},
              {"mode", o.highway ? "highway" : "standard"},
              {"mbm", Json{{"enabled", o.mbm.enabled}, {"t", o.mbm.threshold}}}};
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back(Json{{"name", r.name},
                        {"spec", to_json(r.spec)},
                        {"median_ms", r.ms.median},
                        {"p10_ms", r.ms.p10},
                        {"p90_ms", r.ms.p90},
                        {"min_ms", r.ms.min},
                        {"max_ms", r.ms.max},
                        {"tokens_per_sec", r.tokens_per_sec},
                        {"images_per_sec", r.images_per_sec},
                        {"final_tokens", r.final_tokens},
                        {"samples_ms", r.samples_ms}});
  }
  return Json{{"config", config}, {"rows", rows}};
}

}  // namespace tofu
