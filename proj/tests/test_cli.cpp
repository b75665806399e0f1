// Copyright 2026 The edgefbg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"

#ifndef EFBG_CLI_PATH
#define EFBG_CLI_PATH "efbg"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "efbg_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + work_dir().string() + "' && '" EFBG_CLI_PATH "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const std::string& name, const std::string& text) { std::ofstream(work_dir() / name) << text; }

std::string slurp(const std::string& name) {
  std::ifstream in(work_dir() / name, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("gen is deterministic and sizes templates") {
  REQUIRE(run("gen --kind random --count 30 --seed 4 --out a.efbg") == 0);
  REQUIRE(run("gen --kind random --count 30 --seed 4 --out b.efbg") == 0);
  CHECK(slurp("a.efbg") == slurp("b.efbg"));
  CHECK(slurp("a.efbg.report.csv") == slurp("b.efbg.report.csv"));
  REQUIRE(run("gen --kind random --count 30 --seed 5 --out c.efbg") == 0);
  CHECK(slurp("a.efbg") != slurp("c.efbg"));

  REQUIRE(run("gen --kind template --seed 1 --out t.efbg") == 0);
  const std::string report = slurp("t.efbg.report.csv");
  CHECK(report.find("template,320,1") != std::string::npos);
  CHECK(report.rfind("# report: gen\n# config_hash: ", 0) == 0);
}

TEST_CASE("exit codes") {
  write("bad.json", R"({"effects": {"noise": 0.1}})");
  CHECK(run("gen --config bad.json --out x.efbg") == 2);
  CHECK(run("gen --config missing.json --out x.efbg") == 3);
  CHECK(run("gen --kind sideways --out x.efbg") == 2);
  CHECK(run("eval --dataset missing.efbg --out e.csv") == 3);

  REQUIRE(run("gen --kind random --count 40 --seed 2 --out d.efbg") == 0);
  CHECK(run("eval --dataset d.efbg --methods nn --out e.csv") == 2);
  CHECK(run("eval --dataset d.efbg --methods dl --out e.csv") == 2);

  std::string bytes = slurp("d.efbg");
  bytes.resize(bytes.size() - 100);
  write("short.efbg", bytes);
  CHECK(run("dict --dataset short.efbg --out x.dict") == 3);

  write("hot.json", R"({"model": {"fc_width": 16}, "train": {"epochs": 1, "batch_size": 8, "learning_rate": 1e12}})");
  CHECK(run("train --config hot.json --train d.efbg --val d.efbg --out m.ckpt --quiet") == 4);
}
