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
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tofu/cli.hpp"
#include "tofu/json_io.hpp"
#include "tofu/ttf.hpp"
#include "tofu/weights_io.hpp"

using namespace tofu;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run tofu_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  return (oracle::temp_dir() / ("cli_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_tokens(const std::string& path, Index n, Index c) {
  RowMatrixf m(n, c);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = std::sin(float(3 * i + j));
  }
  write_ttf(path, TokenTensorf::from_item(m));
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(tofu_cli({}).code == cli::kExitUsage);
  CHECK(tofu_cli({"frobnicate"}).code == cli::kExitUsage);
  CHECK(tofu_cli({"--threads", "0", "flops"}).code == cli::kExitUsage);
  CHECK(tofu_cli({"flops", "--arch", "vit-x"}).code == cli::kExitUsage);
  CHECK(tofu_cli({"--help"}).code == cli::kExitOk);
}

TEST_CASE("gen writes deterministic fixtures") {
  const auto m1 = tmp("gen1.tfw"), t1 = tmp("gen1.ttf");
  const auto m2 = tmp("gen2.tfw"), t2 = tmp("gen2.ttf");
  for (const auto& [m, t] : {std::pair{m1, t1}, std::pair{m2, t2}}) {
    const auto r = tofu_cli({"--seed", "0", "gen", "--arch", "vit-tiny", "--depth", "2",
                             "--batch", "2", "--out-model", m, "--out-tokens", t});
    REQUIRE(r.code == cli::kExitOk);
  }
  CHECK(slurp(m1) == slurp(m2));
  CHECK(slurp(t1) == slurp(t2));
  const auto model = load_weights(m1);
  CHECK(model.config.depth == 2);
  CHECK(model.config.channels == 192);
  const auto tokens = read_ttf(t1);
  CHECK(tokens.batch() == 2);
  CHECK(tokens.tokens() == 197);

  const auto r = tofu_cli({"gen", "--arch", "vit-tiny", "--out-model", m1});
  CHECK(r.code == cli::kExitUsage);

  const auto full = tofu_cli({"--seed", "0", "gen", "--arch", "vit-tiny",
                              "--out-model", tmp("tiny.tfw"), "--out-tokens",
                              tmp("tiny.ttf")});
  REQUIRE(full.code == cli::kExitOk);
  CHECK(load_weights(tmp("tiny.tfw")).config.depth == 12);
}

TEST_CASE("reduce removes r tokens") {
  const auto in = tmp("reduce_in.ttf"), out = tmp("reduce_out.ttf");
  write_tokens(in, 9, 4);
  auto r = tofu_cli({"reduce", "--input", in, "--metric", in, "--r", "1",
                     "--method", "mlerp", "--out", out});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(read_ttf(out).tokens() == 8);
  const auto trace = Json::parse(slurp(out + ".trace.json"));
  CHECK(trace["items"].size() == 1);
  CHECK(trace["items"][0]["output_tokens"] == 8);

  r = tofu_cli({"reduce", "--input", in, "--r", "0", "--out", out, "--trace",
                tmp("reduce_trace.json")});
  REQUIRE(r.code == cli::kExitOk);
  const auto a = read_ttf(in), b = read_ttf(out);
  REQUIRE(b.tokens() == 9);
  std::vector<std::vector<float>> ra, rb;
  for (Index i = 0; i < 9; ++i) {
    ra.emplace_back(a.item(0).row(i).begin(), a.item(0).row(i).end());
    rb.emplace_back(b.item(0).row(i).begin(), b.item(0).row(i).end());
  }
  CHECK(ra != rb);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  CHECK(ra == rb);

  CHECK(tofu_cli({"reduce", "--input", in, "--r", "1", "--method", "bogus",
                  "--out", out}).code == cli::kExitUsage);
  CHECK(tofu_cli({"reduce", "--input", tmp("missing.ttf"), "--r", "1", "--out",
                  out}).code == cli::kExitRuntime);
  const auto bad = tmp("bad.ttf");
  std::ofstream(bad) << "TTF2";
  const auto rb2 = tofu_cli({"reduce", "--input", bad, "--r", "1", "--out", out});
  CHECK(rb2.code == cli::kExitRuntime);
  CHECK(rb2.err.find("TTF1") != std::string::npos);
}

TEST_CASE("fl profiles") {
  const auto m = tmp("fl_id.tfw"), t = tmp("fl_id.ttf");
  REQUIRE(tofu_cli({"gen", "--arch", "vit-tiny", "--depth", "2", "--variant",
                    "identity-mlp", "--out-model", m, "--out-tokens", t}).code == 0);
  auto r = tofu_cli({"fl", "--model", m, "--tokens", t});
  REQUIRE(r.code == cli::kExitOk);
  const auto report = fl_report_from_json(Json::parse(r.out));
  REQUIRE(report.layers.size() == 2);
  for (const auto& l : report.layers) CHECK(std::abs(l.mean_fl - 1.0) <= 1e-6);

  CHECK(tofu_cli({"fl", "--model", m, "--tokens", t, "--steps", "2"}).code ==
        cli::kExitUsage);

  const auto rm = tmp("fl_rand.tfw"), rt = tmp("fl_rand.ttf");
  REQUIRE(tofu_cli({"--seed", "3", "gen", "--arch", "vit-tiny", "--depth", "2",
                    "--out-model", rm, "--out-tokens", rt}).code == 0);
  const auto a = tofu_cli({"fl", "--model", rm, "--tokens", rt, "--out", tmp("fl.json")});
  const auto b = tofu_cli({"fl", "--model", rm, "--tokens", rt});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(tmp("fl.json")) == b.out);
  for (const auto& l : fl_report_from_json(Json::parse(b.out)).layers) {
    CHECK(l.mean_fl >= 0.0);
    CHECK(l.mean_fl <= 1.0 + 1e-6);
  }
  CHECK(Json::parse(b.out).dump(2) + "\n" == b.out);

  const auto p = tofu_cli({"fl", "--model", rm, "--tokens", rt, "--pairs", "0:1,2:4"});
  REQUIRE(p.code == 0);
  CHECK(Json::parse(p.out)[0]["count"].get<Index>() +
            Json::parse(p.out)[0]["undefined"].get<Index>() == 2);
  CHECK(tofu_cli({"fl", "--model", rm, "--tokens", rt, "--pairs", "0-1"}).code ==
        cli::kExitRuntime);
}

TEST_CASE("flops command") {
  auto gf = [](std::vector<std::string> args) {
    auto r = tofu_cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.err.find("total") != std::string::npos);
    return Json::parse(r.out)["total_flops"].get<double>();
  };
  CHECK(std::abs(gf({"flops", "--arch", "vit-b16", "--image", "224", "--r", "0"}) - 17.58e9) <=
        0.02 * 17.58e9);
  CHECK(std::abs(gf({"flops", "--r", "8"}) - 13.12e9) <= 0.03 * 13.12e9);
  CHECK(std::abs(gf({"flops", "--arch", "vit-l16", "--r", "12"}) - 20.90e9) <=
        0.03 * 20.90e9);

  const auto path = tmp("flops.json");
  const auto r = tofu_cli({"flops", "--r", "16", "--out", path});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total") != std::string::npos);
  const std::string text = slurp(path);
  CHECK(to_json(flop_report_from_json(Json::parse(text))).dump(2) + "\n" == text);
}

TEST_CASE("bench command") {
  CHECK(tofu_cli({"bench", "--repeat", "1"}).code == cli::kExitUsage);
  CHECK(tofu_cli({"bench", "--warmup", "0"}).code == cli::kExitUsage);
  const std::vector<std::string> small = {"bench", "--arch", "vit-tiny", "--depth", "2",
                                          "--image", "64", "--batch", "1", "--r", "4",
                                          "--d", "1", "--repeat", "3"};
  auto args = small;
  args.insert(args.end(), {"--methods", "full,pruned,average"});
  auto r = tofu_cli(args);
  REQUIRE(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["rows"].size() == 3);
  CHECK(j["rows"][1]["final_tokens"] == 9);

  const auto cfg = tmp("run_config.json");
  std::ofstream(cfg) << R"({"r":2,"d":1,"mode":"highway","mbm":{"enabled":true,"t":1.0}})";
  args = small;
  args.insert(args.end(), {"--methods", "full", "--config", cfg});
  r = tofu_cli(args);
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["config"]["mode"] == "highway");
  CHECK(j["rows"][1]["name"] == "config");
  CHECK(j["rows"][1]["final_tokens"] == 13);

  args = small;
  args.insert(args.end(), {"--methods", "full,quick"});
  CHECK(tofu_cli(args).code == cli::kExitRuntime);
}
