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
#include "tofu/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tofu/bench.hpp"
#include "tofu/flops.hpp"
#include "tofu/json_io.hpp"
#include "tofu/linearity.hpp"
#include "tofu/log.hpp"
#include "tofu/random.hpp"
#include "tofu/ttf.hpp"
#include "tofu/weights_io.hpp"

namespace tofu::cli {

namespace {

const std::vector<std::string> kArchs = {"vit-tiny", "vit-s16", "vit-b16",
                                         "vit-l16"};

struct Globals {
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

void write_json(const std::string& path, const Json& j, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

Json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- reduce ---------------------------------------------------------------

struct ReduceArgs {
  std::string input, metric, out, trace;
  Index r = 0;
  std::string method = "mlerp";
  bool no_protect_cls = false;
};

void cmd_reduce(const ReduceArgs& a, std::ostream& out) {
  const TokenTensorf x = read_ttf(a.input);
  const TokenTensorf metric = a.metric.empty() ? x : read_ttf(a.metric);
  if (metric.batch() != x.batch() || metric.tokens() != x.tokens()) {
    throw DimensionError("metric tensor does not match input batch/tokens");
  }
  const MergeMethod method = parse_merge_method(a.method);
  std::vector<RowMatrixf> items;
  Json traces = Json::array();
  for (Index b = 0; b < x.batch(); ++b) {
    auto res = apply_reduce(x.item(b), metric.item(b), method, a.r,
                            !a.no_protect_cls);
    if (res.trace.match.clamped) {
      log_info("r=" + std::to_string(a.r) + " clamped to " +
               std::to_string(res.trace.match.r()));
    }
    traces.push_back(to_json(res.trace));
    items.push_back(std::move(res.reduced));
  }
  write_ttf(a.out, TokenTensorf::stack(items));
  const std::string trace_path = a.trace.empty() ? a.out + ".trace.json" : a.trace;
  write_json(trace_path, Json{{"items", traces}}, out);
}

// ---- fl -------------------------------------------------------------------

struct FlArgs {
  std::string model, tokens, out, submap = "mlp", pairs;
  Index steps = 21;
  Index r = 5;
};

void cmd_fl(const FlArgs& a, std::ostream& out) {
  const VitModel<float> model = load_weights(a.model);
  const TokenTensorf tokens = read_ttf(a.tokens);
  FlConfig cfg;
  cfg.steps = a.steps;
  cfg.bsm_r = a.r;
  cfg.submap = a.submap == "norm-mlp" ? FlSubmap::NormMlp : FlSubmap::Mlp;
  for (const auto& p : split(a.pairs, ',')) {
    const auto ij = split(p, ':');
    if (ij.size() != 2) throw InvalidInput("pair \"" + p + "\" is not i:j");
    cfg.pairs.emplace_back(std::stoll(ij[0]), std::stoll(ij[1]));
  }
  write_json(a.out, to_json(profile_model(model, tokens, cfg)), out);
}

// ---- flops ----------------------------------------------------------------

struct FlopsArgs {
  std::string arch = "vit-b16", placement = "before-mlp", out = "-";
  Index image = 224, patch = 16, r = 0;
};

void cmd_flops(const FlopsArgs& a, std::ostream& out, std::ostream& err) {
  VitConfig cfg = vit_preset(a.arch);
  cfg.image = a.image;
  cfg.patch = a.patch;
  ReduceSpec spec;
  spec.r = a.r;
  const FlopReport report =
      flops_estimate(cfg, spec, parse_placement(a.placement));
  std::ostream& table = (a.out == "-") ? err : out;
  table << a.arch << " image " << a.image << " r " << a.r << " ("
        << a.placement << ")\n";
  table << std::setw(6) << "layer" << std::setw(8) << "attn_n" << std::setw(8)
        << "mlp_n" << std::setw(14) << "attn_GF" << std::setw(14) << "mlp_GF"
        << '\n';
  for (const auto& l : report.layers) {
    table << std::setw(6) << l.layer << std::setw(8) << l.attn_tokens
          << std::setw(8) << l.mlp_tokens << std::setw(14) << std::fixed
          << std::setprecision(4) << double(l.attn_flops) / 1e9
          << std::setw(14) << double(l.mlp_flops) / 1e9 << '\n';
  }
  table << "patch embed " << double(report.patch_embed_flops) / 1e9
        << " GFLOP\ntotal       " << std::setprecision(2)
        << report.total_gflops() << " GFLOP\n";
  table.unsetf(std::ios::floatfield);
  write_json(a.out, to_json(report), out);
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string arch = "vit-b16", methods = "full,pruned,average,mlerp,hybrid";
  std::string placement = "before-mlp", mode = "standard", out = "-", config;
  Index depth = 0, image = 224, batch = 8, r = 16, d = 6, repeat = 5,
        warmup = 1;
  bool mbm = false;
  double mbm_t = 1.0;
};

void cmd_bench(const BenchArgs& a, const Globals& g, std::ostream& out) {
  BenchOptions o;
  o.model = vit_preset(a.arch);
  if (a.depth > 0) o.model.depth = a.depth;
  o.model.image = a.image;
  o.batch = a.batch;
  o.repeats = a.repeat;
  o.warmup = a.warmup;
  o.seed = g.seed;
  o.threads = g.threads;
  o.placement = parse_placement(a.placement);
  o.highway = a.mode == "highway";
  o.mbm = MbmConfig{a.mbm_t, a.mbm};
  std::vector<BenchCase> cases;
  for (const auto& name : split(a.methods, ',')) {
    cases.push_back(bench_case(name, a.r, a.d, o.model.depth));
  }
  if (!a.config.empty()) {
    const RunConfig rc = run_config_from_json(read_json(a.config));
    o.highway = rc.highway;
    o.placement = rc.placement;
    o.mbm = rc.mbm;
    cases.push_back({"config", rc.reduce});
  }
  write_json(a.out, to_json(run_bench(o, cases)), out);
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::string arch, out_model, out_tokens, variant = "random";
  Index batch = 1, depth = 0, classes = 0;
};

void cmd_gen(const GenArgs& a, const Globals& g) {
  VitConfig cfg = vit_preset(a.arch);
  if (a.depth > 0) cfg.depth = a.depth;
  cfg.num_classes = a.classes;
  VitModel<float> model = random_model<float>(cfg, g.seed);
  if (a.variant == "identity-mlp") make_identity_mlps(model);
  save_weights(a.out_model, model);
  write_ttf(a.out_tokens,
            random_tokens<float>(a.batch, cfg.tokens(), cfg.channels,
                                 g.seed + 1));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Token Fusion reduction, profiling and benchmarking", "tofu"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "worker threads for batch items")
      ->check(CLI::Range(1u, 256u));
  app.add_option("--seed", g.seed, "seed for synthetic models and tokens");

  ReduceArgs ra;
  auto* reduce = app.add_subcommand("reduce", "apply one reduce to a TTF1 dump");
  reduce->fallthrough();
  reduce->add_option("--input", ra.input, "input TTF1 tokens")->required();
  reduce->add_option("--metric", ra.metric, "similarity metric TTF1 (default: input)");
  reduce->add_option("--r", ra.r, "tokens to remove")->required()->check(CLI::NonNegativeNumber);
  reduce->add_option("--method", ra.method, "pruned|average|mlerp")
      ->check(CLI::IsMember({"pruned", "average", "mlerp"}));
  reduce->add_flag("--no-protect-cls", ra.no_protect_cls, "let token 0 move");
  reduce->add_option("--out", ra.out, "output TTF1")->required();
  reduce->add_option("--trace", ra.trace, "trace JSON (default: <out>.trace.json)");

  FlArgs fa;
  auto* fl = app.add_subcommand("fl", "per-layer functional linearity profile");
  fl->fallthrough();
  fl->add_option("--model", fa.model, "TFW1 weights")->required();
  fl->add_option("--tokens", fa.tokens, "TTF1 tokens entering block 0")->required();
  fl->add_option("--steps", fa.steps, "interpolation points")->check(CLI::Range(Index{3}, Index{1000000}));
  fl->add_option("--r", fa.r, "BSM pairs per item and layer")->check(CLI::NonNegativeNumber);
  fl->add_option("--pairs", fa.pairs, "explicit pairs i:j,i:j (overrides --r)");
  fl->add_option("--submap", fa.submap, "mlp|norm-mlp")->check(CLI::IsMember({"mlp", "norm-mlp"}));
  fl->add_option("--out", fa.out, "output JSON (default stdout)");

  FlopsArgs pa;
  auto* flops = app.add_subcommand("flops", "analytical FLOP count");
  flops->fallthrough();
  flops->add_option("--arch", pa.arch)->check(CLI::IsMember(kArchs));
  flops->add_option("--image", pa.image)->check(CLI::PositiveNumber);
  flops->add_option("--patch", pa.patch)->check(CLI::PositiveNumber);
  flops->add_option("--r", pa.r)->check(CLI::NonNegativeNumber);
  flops->add_option("--placement", pa.placement)->check(CLI::IsMember({"before-mlp", "before-attn"}));
  flops->add_option("--out", pa.out, "output JSON ('-' = stdout, table then goes to stderr)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "time forward passes per configuration");
  bench->fallthrough();
  bench->add_option("--arch", ba.arch)->check(CLI::IsMember(kArchs));
  bench->add_option("--depth", ba.depth, "override the preset depth")->check(CLI::NonNegativeNumber);
  bench->add_option("--image", ba.image)->check(CLI::PositiveNumber);
  bench->add_option("--batch", ba.batch)->check(CLI::PositiveNumber);
  bench->add_option("--r", ba.r)->check(CLI::NonNegativeNumber);
  bench->add_option("--d", ba.d)->check(CLI::PositiveNumber);
  bench->add_option("--repeat", ba.repeat)->check(CLI::Range(Index{3}, Index{100000}));
  bench->add_option("--warmup", ba.warmup)->check(CLI::Range(Index{1}, Index{100000}));
  bench->add_option("--methods", ba.methods, "comma list of full,pruned,average,mlerp,hybrid,hybrid-average");
  bench->add_option("--placement", ba.placement)->check(CLI::IsMember({"before-mlp", "before-attn"}));
  bench->add_option("--mode", ba.mode)->check(CLI::IsMember({"standard", "highway"}));
  bench->add_flag("--mbm", ba.mbm, "enable magnitude based masking (highway)");
  bench->add_option("--mbm-t", ba.mbm_t)->check(CLI::NonNegativeNumber);
  bench->add_option("--config", ba.config, "run config JSON, timed as case \"config\"");
  bench->add_option("--out", ba.out, "output JSON (default stdout)");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "write a seeded synthetic model and tokens");
  gen->fallthrough();
  gen->add_option("--arch", ga.arch)->required()->check(CLI::IsMember(kArchs));
  gen->add_option("--depth", ga.depth, "override the preset depth")->check(CLI::NonNegativeNumber);
  gen->add_option("--classes", ga.classes, "classifier width (0 = none)")->check(CLI::NonNegativeNumber);
  gen->add_option("--batch", ga.batch)->check(CLI::PositiveNumber);
  gen->add_option("--variant", ga.variant)->check(CLI::IsMember({"random", "identity-mlp"}));
  gen->add_option("--out-model", ga.out_model, "TFW1 output")->required();
  gen->add_option("--out-tokens", ga.out_tokens, "TTF1 output")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*reduce) cmd_reduce(ra, out);
    if (*fl) cmd_fl(fa, out);
    if (*flops) cmd_flops(pa, out, err);
    if (*bench) cmd_bench(ba, g, out);
    if (*gen) cmd_gen(ga, g);
  } catch (const std::exception& e) {
    err << "tofu: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace tofu::cli
