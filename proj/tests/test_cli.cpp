// Copyright 2026 The reactgen Authors
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

#include "reactgen/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

struct Result
{
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path & p)
{
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// One scratch directory per test binary run; commands execute inside it.
const fs::path & scratch()
{
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("reactgen_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run_cli(const std::string & args)
{
  const auto o = scratch() / "stdout.txt", e = scratch() / "stderr.txt";
  const std::string cmd = "cd '" + scratch().string() + "' && '" + REACTGEN_CLI_PATH + "' " + args + " > '" +
                          o.string() + "' 2> '" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

const std::string kTiny = " --hidden 8 --embed 8 --groups 2 --iterations 3 --batch 2";

// Small corpus + model shared by the cases below.
void ensure_fixture()
{
  if (fs::exists(scratch() / "t" / "model.ckpt")) return;
  REQUIRE(run_cli("synth --sessions 3 --listeners 2 --windows 3 --seed 4 --out s").code == 0);
  REQUIRE(run_cli("train --data s/corpus.jsonl" + kTiny + " --out t").code == 0);
}

std::vector<std::string> lines(const std::string & text)
{
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("cli")
{
  TEST_CASE("exit codes")
  {
    ensure_fixture();
    auto r = run_cli("--version");
    CHECK(r.code == 0);
    CHECK(r.out.find(reactgen::cli::kVersion) != std::string::npos);
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("train --help").code == 0);
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("train --no-such-flag").code == 2);
    CHECK(run_cli("train --data missing.jsonl").code == 2);
    CHECK(run_cli("sample --model t/model.ckpt --data s/corpus.jsonl --solver rk4").code == 2);

    std::ofstream(scratch() / "bad.jsonl") << "{broken\n";
    r = run_cli("train --data bad.jsonl --out x");
    CHECK(r.code == 1);
    const auto err = json::parse(r.err);
    CHECK(err.at("error") == "parse");
    CHECK(err.at("message").get<std::string>().rfind("line 1:", 0) == 0);

    r = run_cli("train --data s/corpus.jsonl --batch 0 --out x");
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error") == "config");
  }

  TEST_CASE("eval on the ground truth itself")
  {
    ensure_fixture();
    // ground-truth listeners written as a generated set, one block per session
    {
      std::ofstream os(scratch() / "gt.jsonl");
      std::ifstream is(scratch() / "s" / "corpus.jsonl");
      for (std::string line; std::getline(is, line);) {
        const auto j = json::parse(line);
        int m = 0;
        for (const auto & l : j.at("listeners")) {
          os << json{{"session", j.at("session_id")}, {"sample", m++}, {"frames", l}}.dump() << '\n';
        }
      }
    }
    const auto r = run_cli("eval --generated gt.jsonl --data s/corpus.jsonl --out e");
    REQUIRE(r.code == 0);
    const auto m = json::parse(r.out);
    CHECK(m.at("frcorr").get<double>() == doctest::Approx(1.0));
    CHECK(m.at("fcd").get<double>() < 1e-6);
    CHECK(json::parse(slurp(scratch() / "e" / "metrics.json")) == m);
    CHECK(lines(slurp(scratch() / "e" / "metrics.csv")).size() == 2);
  }

  TEST_CASE("sample: eta 0 SDE equals ODE, run.conf reproduces")
  {
    ensure_fixture();
    const std::string base = "sample --model t/model.ckpt --data s/corpus.jsonl --steps 4 --m-samples 2 --seed 9";
    REQUIRE(run_cli(base + " --solver sde --eta 0 --out g_sde").code == 0);
    REQUIRE(run_cli(base + " --solver ode --out g_ode").code == 0);
    REQUIRE(run_cli(base + " --out g_def").code == 0);
    const auto sde = slurp(scratch() / "g_sde" / "samples.jsonl");
    CHECK(sde == slurp(scratch() / "g_ode" / "samples.jsonl"));
    CHECK(sde != slurp(scratch() / "g_def" / "samples.jsonl"));
    CHECK(lines(sde).size() == 6);

    const auto manifest = json::parse(slurp(scratch() / "g_def" / "manifest.json"));
    CHECK(manifest.at("seed") == 9);
    CHECK(manifest.at("config").at("solver") == "sde");
    REQUIRE(run_cli("sample --config g_def/run.conf --out g_rep").code == 0);
    CHECK(slurp(scratch() / "g_rep" / "samples.jsonl") == slurp(scratch() / "g_def" / "samples.jsonl"));
    // flags override the file
    REQUIRE(run_cli("sample --config g_def/run.conf --seed 10 --out g_seed").code == 0);
    CHECK(slurp(scratch() / "g_seed" / "samples.jsonl") != slurp(scratch() / "g_def" / "samples.jsonl"));
  }

  TEST_CASE("train writes a loss log and reproduces")
  {
    ensure_fixture();
    const auto log = lines(slurp(scratch() / "t" / "loss.csv"));
    CHECK(log.size() == 4);
    REQUIRE(run_cli("train --config t/run.conf --out t2").code == 0);
    CHECK(slurp(scratch() / "t2" / "model.ckpt") == slurp(scratch() / "t" / "model.ckpt"));
  }

  TEST_CASE("inspect")
  {
    ensure_fixture();
    REQUIRE(run_cli("inspect schedule --steps 10 --svg --out i").code == 0);
    CHECK(lines(slurp(scratch() / "i" / "schedule.csv")).size() == 12);
    CHECK(slurp(scratch() / "i" / "schedule.svg").find("<svg") != std::string::npos);
    REQUIRE(run_cli("inspect trajectory --model t/model.ckpt --data s/corpus.jsonl --steps 5 --out j").code == 0);
    const auto traj = lines(slurp(scratch() / "j" / "trajectory.csv"));
    CHECK(traj.front() == "step,index,ode,sde");
    CHECK(traj.size() == 7);
    CHECK(run_cli("inspect trajectory --model t/model.ckpt --data s/corpus.jsonl --session 9 --out j").code == 1);
  }

  TEST_CASE("ablate flips exactly one setting")
  {
    ensure_fixture();
    const auto r = run_cli(
      "ablate --data s/corpus.jsonl --test-sessions 1" + kTiny + " --steps 4 --m-samples 2 --toggle fbk --out a");
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(scratch() / "a" / "ablation.csv"));
    REQUIRE(rows.size() == 3);
    auto cells = [](const std::string & row) {
      std::vector<std::string> c;
      std::istringstream is(row);
      for (std::string x; std::getline(is, x, ',');) c.push_back(x);
      return c;
    };
    const auto head = cells(rows[0]), base = cells(rows[1]), alt = cells(rows[2]);
    CHECK(base[0] == "baseline");
    CHECK(alt[0] == "toggle:fbk");
    for (std::size_t i = 1; i < 8; ++i) {
      CAPTURE(head[i]);
      CHECK((base[i] == alt[i]) == (head[i] != "fbk"));
    }
    CHECK(json::parse(slurp(scratch() / "a" / "ablation.json")).size() == 2);
  }

  TEST_CASE("config tokens")
  {
    std::ofstream(scratch() / "c.conf") << "# comment\nsteps = 7\n\n--seed=3\n";
    const auto t = reactgen::cli::config_tokens((scratch() / "c.conf").string());
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "--steps=7");
    CHECK(t[1] == "--seed=3");
    std::ofstream(scratch() / "bad.conf") << "no equals sign\n";
    CHECK_THROWS(reactgen::cli::config_tokens((scratch() / "bad.conf").string()));
    CHECK(run_cli("inspect schedule --config missing.conf").code == 2);
  }
}
