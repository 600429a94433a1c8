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

#include "reactgen/data.hpp"
#include "reactgen/generator.hpp"
#include "reactgen/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace reactgen::cli
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::string to_text(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
std::string to_text(const std::string & v) { return v; }
std::string to_text(const std::vector<std::string> & v)
{
  std::string s;
  for (const auto & x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

// CLI11 options that also know how to print their resolved value, so every run can
// write a config file that reproduces it.
class Options
{
public:
  explicit Options(CLI::App * app) : app_(app) {}

  template <typename T>
  CLI::Option * add(const std::string & name, T & ref, const std::string & help)
  {
    keys_.push_back({name, [&ref] { return to_text(ref); }});
    return app_->add_option("--" + name, ref, help)->capture_default_str();
  }

  CLI::Option * flag(const std::string & name, bool & ref, const std::string & help)
  {
    keys_.push_back({name, [&ref] { return to_text(ref); }});
    return app_->add_flag("--" + name, ref, help);
  }

  CLI::App * app() const { return app_; }

  json resolved() const
  {
    json j = json::object();
    for (const auto & [k, f] : keys_) j[k] = f();
    return j;
  }

  std::string conf() const
  {
    std::string s;
    for (const auto & [k, f] : keys_) s += k + "=" + f() + "\n";
    return s;
  }

private:
  CLI::App * app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> keys_;
};

struct Settings
{
  // shared
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string config;
  std::string out = ".";

  // synth
  int sessions = 8;
  int listeners = 3;
  int window = kDefaultWindow;
  int windows = 8;
  int audio_dims = kDefaultAudioDims;

  // inputs
  std::string data;
  std::string test_data;
  int test_sessions = 2;
  std::string model;
  std::string generated;

  // network + training
  int hidden = 128;
  int embed = 64;
  int blocks = 2;
  int groups = 8;
  int iterations = 2000;
  int batch = 32;
  double lr = desk_adam().lr;
  double lambda_fac = kDefaultLambdaFac;
  int gate = kDefaultGateStep;
  double cond_dropout = 0.1;
  bool full_scale = false;
  bool vanilla = false;
  bool no_timestamp = false;
  bool no_face = false;
  bool no_audio = false;
  bool no_fbk = false;
  bool no_fac = false;

  // generation
  int steps = 50;
  std::string solver = "sde";
  double eta = 1.0;
  double guidance = 1.5;
  int m_samples = 10;
  int session = 0;
  bool svg = false;

  // ablate
  std::vector<std::string> toggles;
  int alt_steps = 2;
};

void add_shared(Options & o, Settings & s)
{
  o.add("seed", s.seed, "random seed");
  o.add("jobs", s.jobs, "worker threads for sample fan-out")->check(CLI::PositiveNumber);
  o.add("config", s.config, "flat key=value file; flags override it");
  o.add("out", s.out, "output directory");
}

void add_network(Options & o, Settings & s)
{
  o.add("hidden", s.hidden, "hidden width");
  o.add("embed", s.embed, "step/timestamp embedding width");
  o.add("blocks", s.blocks, "residual blocks");
  o.add("groups", s.groups, "group-norm groups");
}

void add_training(Options & o, Settings & s)
{
  o.add("iterations", s.iterations, "training iterations");
  o.add("batch", s.batch, "batch size");
  o.add("lr", s.lr, "AdamW learning rate");
  o.add("lambda-fac", s.lambda_fac, "weight of the facial action constraint");
  o.add("gate", s.gate, "kinematics constraint applies at step indices <= gate");
  o.add("cond-dropout", s.cond_dropout, "condition dropout probability");
  o.flag("full-scale", s.full_scale, "batch 100, 30000 iterations, lr 1e-4");
  o.flag("vanilla", s.vanilla, "no history and no timestamp conditioning");
  o.flag("no-timestamp", s.no_timestamp, "disable timestamp conditioning");
  o.flag("no-face", s.no_face, "disable speaker face conditioning");
  o.flag("no-audio", s.no_audio, "disable speaker audio conditioning");
  o.flag("no-fbk", s.no_fbk, "disable the kinematics loss");
  o.flag("no-fac", s.no_fac, "disable the facial action loss");
}

void add_generation(Options & o, Settings & s)
{
  o.add("steps", s.steps, "solver steps T");
  o.add("solver", s.solver, "ode, sde or euler")->check(CLI::IsMember({"ode", "sde", "euler"}));
  o.add("eta", s.eta, "SDE noise scale");
  o.add("guidance", s.guidance, "classifier-free guidance scale");
  o.add("m-samples", s.m_samples, "samples per speaker stream");
}

ScoreNetConfig network_config(const Settings & s)
{
  ScoreNetConfig c;
  c.window = s.window;
  c.audio_dims = s.audio_dims;
  c.hidden = s.hidden;
  c.embed = s.embed;
  c.blocks = s.blocks;
  c.groups = s.groups;
  c.use_timestamp = !(s.no_timestamp || s.vanilla);
  c.use_history = !s.vanilla;
  c.use_face = !s.no_face;
  c.use_audio = !s.no_audio;
  return c;
}

TrainConfig train_config(const Settings & s)
{
  TrainConfig t;
  t.iterations = s.full_scale ? 30000 : s.iterations;
  t.batch = s.full_scale ? 100 : s.batch;
  t.adam.lr = s.full_scale ? AdamWHyper{}.lr : s.lr;
  t.lambda_fac = s.no_fac ? 0.0 : s.lambda_fac;
  t.gate = s.gate;
  t.use_fbk = !s.no_fbk;
  t.cond_dropout = s.cond_dropout;
  t.seed = s.seed;
  return t;
}

GenerationConfig generation_config(const Settings & s)
{
  GenerationConfig g;
  g.steps = s.steps;
  g.solver = solver_from_string(s.solver);
  g.eta = s.eta;
  g.guidance_scale = s.guidance;
  g.m_samples = s.m_samples;
  g.seed = s.seed;
  g.constraint_gate_step = s.gate;
  g.jobs = s.jobs;
  g.validate();
  return g;
}

class Run
{
public:
  Run(std::string command, const Options & opts, const Settings & s) : command_(std::move(command)), opts_(opts), s_(s)
  {
    fs::create_directories(s.out);
    start_ = std::chrono::steady_clock::now();
  }

  std::string path(const std::string & name)
  {
    outputs_.push_back(name);
    return (fs::path(s_.out) / name).string();
  }

  void finish(const json & extra = json::object())
  {
    json m;
    m["tool"] = "reactgen";
    m["version"] = kVersion;
    m["command"] = command_;
    m["seed"] = s_.seed;
    m["config"] = opts_.resolved();
    m["outputs"] = outputs_;
    m["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const auto & [k, v] : extra.items()) m[k] = v;
    write_text((fs::path(s_.out) / "manifest.json").string(), m.dump(2) + "\n");
    write_text((fs::path(s_.out) / "run.conf").string(), "# reactgen " + command_ + "\n" + opts_.conf());
  }

  static void write_text(const std::string & path, const std::string & text)
  {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
  }

private:
  std::string command_;
  const Options & opts_;
  const Settings & s_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_out(const std::string & path)
{
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << std::setprecision(17);
  return os;
}

std::vector<Session> require_sessions(const std::string & path, const char * what)
{
  if (path.empty()) throw ConfigError(std::string("--") + what + " is required");
  auto s = load_sessions(path);
  if (s.empty()) throw InputError("'" + path + "' holds no sessions");
  return s;
}

json report_json(const EvalReport & r)
{
  // NaN (undefined metric) becomes null.
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"frvar", num(r.frvar)}, {"frdvs", num(r.frdvs)}, {"frdiv", num(r.frdiv)}, {"frcorr", num(r.frcorr)},
          {"frsyn", num(r.frsyn)}, {"fcd", num(r.fcd)}, {"boundary_jump", num(r.boundary_jump)},
          {"symmetric_gap", num(r.symmetric_gap)}};
}

const char * kReportColumns = "frvar,frdvs,frdiv,frcorr,frsyn,fcd,boundary_jump,symmetric_gap";

void write_report_row(std::ostream & os, const EvalReport & r)
{
  os << r.frvar << ',' << r.frdvs << ',' << r.frdiv << ',' << r.frcorr << ',' << r.frsyn << ',' << r.fcd << ','
     << r.boundary_jump << ',' << r.symmetric_gap;
}

struct Series
{
  std::string name;
  std::vector<double> y;
};

void write_line_chart_svg(std::ostream & os, const std::string & title, const std::vector<Series> & series)
{
  const double W = 640, H = 400, pad = 48;
  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 0;
  for (const auto & s : series) {
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n = std::max(n, s.y.size());
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const char * colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
     << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" points=\"";
    for (std::size_t i = 0; i < series[k].y.size(); ++i) {
      const double x = pad + (W - 2 * pad) * (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
      const double y = H - pad - (H - 2 * pad) * (series[k].y[i] - lo) / (hi - lo);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n<text x=\"" << W - pad - 120 << "\" y=\"" << pad + 16 * (k + 1) << "\" fill=\"" << colors[k % 4]
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[k].name << "</text>\n";
  }
  os << "<text x=\"4\" y=\"" << pad + 4 << "\" font-size=\"10\">" << hi << "</text>\n"
     << "<text x=\"4\" y=\"" << H - pad << "\" font-size=\"10\">" << lo << "</text>\n</svg>\n";
}

// ---- subcommands ----

void cmd_synth(const Options & o, const Settings & s, std::ostream & out)
{
  Run run("synth", o, s);
  SynthConfig c;
  c.sessions = s.sessions;
  c.listeners_per_session = s.listeners;
  c.window = s.window;
  c.windows_per_session = s.windows;
  c.audio_dims = s.audio_dims;
  c.seed = s.seed;
  const auto corpus = synth_corpus(c);
  save_sessions(corpus, run.path("corpus.jsonl"));
  run.finish({{"sessions", corpus.size()}});
  out << "wrote " << corpus.size() << " sessions to " << (fs::path(s.out) / "corpus.jsonl").string() << '\n';
}

ReactionModel train_model(
  const Settings & s, const std::vector<Session> & corpus, TrainLog * log_out, std::ostream * progress)
{
  Settings fit = s;
  fit.window = corpus.front().window;
  fit.audio_dims = static_cast<int>(corpus.front().speaker.front().audio.data.cols());
  ReactionModel model = ReactionModel::create(network_config(fit), corpus, s.seed);
  AdamWState opt;
  const TrainConfig tc = train_config(s);
  const int every = std::max(1, tc.iterations / 10);
  auto log = train(corpus, model, opt, build_cosine_schedule(50), AUPairRegistry::builtin(), tc,
                   [&](int it, const LossBreakdown & l) {
                     if (progress != nullptr && ((it + 1) % every == 0)) {
                       *progress << "iteration " << it + 1 << " dm " << l.dm << " fbk " << l.fbk << " fac " << l.fac
                                  << " total " << l.total << '\n';
                     }
                   });
  if (log_out != nullptr) *log_out = std::move(log);
  return model;
}

void cmd_train(const Options & o, const Settings & s, std::ostream & out)
{
  const auto corpus = require_sessions(s.data, "data");
  Run run("train", o, s);
  TrainLog log;
  ReactionModel model = train_model(s, corpus, &log, &out);
  // Optimizer moments are not kept by train_model; the checkpoint holds the fitted weights.
  save_model(model, nullptr, run.path("model.ckpt"));
  auto csv = open_out(run.path("loss.csv"));
  log.write_csv(csv);
  json extra;
  if (!log.iterations.empty()) {
    const auto & last = log.iterations.back();
    extra["final_loss"] = {{"dm", last.dm}, {"fbk", last.fbk}, {"fac", last.fac}, {"total", last.total}};
  }
  run.finish(extra);
}

void check_model_matches(const ReactionModel & model, const std::vector<Session> & data)
{
  for (const auto & s : data) {
    if (s.window != model.config().window) {
      throw ConfigError("session '" + s.session_id + "' has window " + std::to_string(s.window) +
                        " but the model was trained with " + std::to_string(model.config().window));
    }
  }
}

void cmd_sample(const Options & o, const Settings & s, std::ostream & out)
{
  if (s.model.empty()) throw ConfigError("--model is required");
  const auto data = require_sessions(s.data, "data");
  const ReactionModel model = load_model(s.model);
  check_model_matches(model, data);
  const GenerationConfig g = generation_config(s);
  Run run("sample", o, s);
  auto os = open_out(run.path("samples.jsonl"));
  for (std::size_t i = 0; i < data.size(); ++i) {
    GenerationConfig c = g;
    c.seed = session_seed(g.seed, i);
    write_sequences_jsonl(generate_session(data[i].speaker, model, c), os, data[i].session_id);
  }
  run.finish({{"sessions", data.size()}});
  out << "wrote " << data.size() * static_cast<std::size_t>(g.m_samples) << " sequences\n";
}

void cmd_eval(const Options & o, const Settings & s, std::ostream & out)
{
  const auto gt = require_sessions(s.data, "data");
  if (s.generated.empty()) throw ConfigError("--generated is required");
  std::ifstream is(s.generated);
  if (!is) throw std::runtime_error("cannot open '" + s.generated + "'");
  const auto sets = read_generated_jsonl(is);

  std::vector<std::vector<Matrix>> generated;
  for (const auto & sess : gt) {
    auto it = std::find_if(sets.begin(), sets.end(), [&](const GeneratedSet & g) { return g.session_id == sess.session_id; });
    if (it == sets.end()) throw InputError("no generated sequences for session '" + sess.session_id + "'");
    for (const auto & m : it->samples) {
      if (m.rows() != sess.frames() || m.cols() != kFrameDims) {
        throw DimensionError("generated sequence for '" + sess.session_id + "' has shape " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()));
      }
    }
    generated.push_back(it->samples);
  }
  Run run("eval", o, s);
  const EvalReport r = score_generation(gt, generated);
  const json j = report_json(r);
  Run::write_text(run.path("metrics.json"), j.dump(2) + "\n");
  auto csv = open_out(run.path("metrics.csv"));
  csv << kReportColumns << '\n';
  write_report_row(csv, r);
  csv << '\n';
  run.finish({{"metrics", j}});
  out << j.dump() << '\n';
}

void cmd_inspect_schedule(const Options & o, const Settings & s, std::ostream &)
{
  Run run("inspect schedule", o, s);
  const auto sched = build_cosine_schedule(s.steps);
  auto csv = open_out(run.path("schedule.csv"));
  write_schedule_csv(sched, csv);
  if (s.svg) {
    auto svg = open_out(run.path("schedule.svg"));
    write_line_chart_svg(svg, "noise schedule", {{"alpha", sched.alpha}, {"sigma", sched.sigma}});
  }
  run.finish();
}

void cmd_inspect_trajectory(const Options & o, const Settings & s, std::ostream &)
{
  if (s.model.empty()) throw ConfigError("--model is required");
  const auto data = require_sessions(s.data, "data");
  if (s.session < 0 || static_cast<std::size_t>(s.session) >= data.size()) {
    throw ConfigError("--session must index one of the " + std::to_string(data.size()) + " sessions");
  }
  const ReactionModel model = load_model(s.model);
  check_model_matches(model, data);
  GenerationConfig g = generation_config(s);
  const auto sched = build_cosine_schedule(g.steps);
  const auto & speaker = data[static_cast<std::size_t>(s.session)].speaker.front();
  const Vector past = Vector::Zero(kFrameDims);

  // Same x_T for both solvers: the initial draw is the first thing taken from the stream.
  std::vector<Series> series;
  for (SolverKind kind : {SolverKind::Ode2M, SolverKind::Sde2M}) {
    g.solver = kind;
    std::mt19937_64 rng(g.seed);
    const auto traj = sample_window(model, speaker, 0, past, sched, g, rng);
    Series ser{std::string(to_string(kind)), {}};
    for (const auto & x : traj.states) ser.y.push_back(x.mean());
    series.push_back(std::move(ser));
  }

  Run run("inspect trajectory", o, s);
  auto csv = open_out(run.path("trajectory.csv"));
  csv << "step,index," << series[0].name << ',' << series[1].name << '\n';
  for (std::size_t i = 0; i < series[0].y.size(); ++i) {
    csv << i << ',' << g.steps - static_cast<int>(i) << ',' << series[0].y[i] << ',' << series[1].y[i] << '\n';
  }
  if (s.svg) {
    auto svg = open_out(run.path("trajectory.svg"));
    write_line_chart_svg(svg, "mean coefficient per solver step", series);
  }
  run.finish();
}

struct Variant
{
  std::string name;
  Settings settings;
};

void cmd_ablate(const Options & o, const Settings & s, std::ostream & out)
{
  auto data = require_sessions(s.data, "data");
  std::vector<Session> test;
  if (!s.test_data.empty()) {
    test = load_sessions(s.test_data);
  } else {
    if (s.test_sessions < 1 || static_cast<std::size_t>(s.test_sessions) >= data.size()) {
      throw ConfigError("--test-sessions must leave at least one training session");
    }
    test.assign(data.end() - s.test_sessions, data.end());
    data.erase(data.end() - s.test_sessions, data.end());
  }
  if (test.empty()) throw InputError("no test sessions");

  std::vector<Variant> variants{{"baseline", s}};
  for (const auto & t : s.toggles) {
    Settings v = s;
    if (t == "timestamp") v.no_timestamp = !v.no_timestamp;
    else if (t == "face") v.no_face = !v.no_face;
    else if (t == "audio") v.no_audio = !v.no_audio;
    else if (t == "fbk") v.no_fbk = !v.no_fbk;
    else if (t == "fac") v.no_fac = !v.no_fac;
    else if (t == "solver") v.solver = v.solver == "ode" ? "sde" : "ode";
    else if (t == "steps") v.steps = v.steps == s.alt_steps ? 50 : s.alt_steps;
    variants.push_back({"toggle:" + t, v});
  }

  Run run("ablate", o, s);
  // Generation-only toggles reuse the baseline weights.
  auto train_key = [](const Settings & v) {
    return json{{"timestamp", !v.no_timestamp}, {"face", !v.no_face}, {"audio", !v.no_audio}, {"fbk", !v.no_fbk},
                {"fac", !v.no_fac}}.dump();
  };
  std::map<std::string, ReactionModel> models;

  auto csv = open_out(run.path("ablation.csv"));
  csv << "variant,timestamp,face,audio,fbk,fac,solver,steps," << kReportColumns << '\n';
  json rows = json::array();
  for (const auto & v : variants) {
    const auto key = train_key(v.settings);
    if (!models.count(key)) {
      out << "training " << v.name << '\n';
      models.emplace(key, train_model(v.settings, data, nullptr, nullptr));
    }
    const EvalReport r = evaluate_generation(models.at(key), test, generation_config(v.settings));
    const auto & c = v.settings;
    csv << v.name << ',' << !c.no_timestamp << ',' << !c.no_face << ',' << !c.no_audio << ',' << !c.no_fbk << ','
        << !c.no_fac << ',' << c.solver << ',' << c.steps << ',';
    write_report_row(csv, r);
    csv << '\n';
    rows.push_back({{"variant", v.name},
                    {"timestamp", !c.no_timestamp},
                    {"face", !c.no_face},
                    {"audio", !c.no_audio},
                    {"fbk", !c.no_fbk},
                    {"fac", !c.no_fac},
                    {"solver", c.solver},
                    {"steps", c.steps},
                    {"metrics", report_json(r)}});
    out << v.name << ' ' << report_json(r).dump() << '\n';
  }
  Run::write_text(run.path("ablation.json"), rows.dump(2) + "\n");
  run.finish();
}

std::string error_kind(const std::exception & e)
{
  if (dynamic_cast<const ConfigError *>(&e)) return "config";
  if (dynamic_cast<const DimensionError *>(&e)) return "dimension";
  if (dynamic_cast<const DomainError *>(&e)) return "domain";
  if (dynamic_cast<const InputError *>(&e)) return "input";
  if (dynamic_cast<const StateError *>(&e)) return "state";
  if (dynamic_cast<const NumericError *>(&e)) return "numeric";
  if (dynamic_cast<const ParseError *>(&e)) return "parse";
  if (dynamic_cast<const ValidationError *>(&e)) return "validation";
  if (dynamic_cast<const fs::filesystem_error *>(&e)) return "io";
  return "runtime";
}

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> config_tokens(const std::string & path)
{
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key == "config") continue;
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

int run(const std::vector<std::string> & args_in, std::ostream & out, std::ostream & err)
{
  std::vector<std::string> args = args_in;

  // Config file entries go right after the subcommand path, before the explicit flags;
  // every option keeps its last value, so flags win.
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    else continue;
    std::vector<std::string> extra;
    try {
      extra = config_tokens(path);
    } catch (const std::exception & e) {
      err << "reactgen: " << e.what() << '\n';
      return kUsage;
    }
    std::size_t at = std::min<std::size_t>(1, args.size());
    if (args.size() > 1 && args[0] == "inspect" && (args[1] == "schedule" || args[1] == "trajectory")) at = 2;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
    break;
  }

  CLI::App app{"reactgen: windowed diffusion generator of listener reactions"};
  app.name("reactgen");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Settings s;
  auto * synth = app.add_subcommand("synth", "emit a synthetic dyadic corpus");
  Options o_synth(synth);
  add_shared(o_synth, s);
  o_synth.add("sessions", s.sessions, "sessions");
  o_synth.add("listeners", s.listeners, "listeners per session");
  o_synth.add("window", s.window, "frames per window");
  o_synth.add("windows", s.windows, "windows per session");
  o_synth.add("audio-dims", s.audio_dims, "audio feature width");

  auto * train_cmd = app.add_subcommand("train", "train a model on a corpus");
  Options o_train(train_cmd);
  add_shared(o_train, s);
  o_train.add("data", s.data, "training corpus (JSONL)")->check(CLI::ExistingFile);
  add_network(o_train, s);
  add_training(o_train, s);

  auto * sample = app.add_subcommand("sample", "generate reactions for speaker streams");
  Options o_sample(sample);
  add_shared(o_sample, s);
  o_sample.add("model", s.model, "checkpoint")->check(CLI::ExistingFile);
  o_sample.add("data", s.data, "sessions whose speaker streams are used")->check(CLI::ExistingFile);
  add_generation(o_sample, s);
  o_sample.add("gate", s.gate, "constraint gate step recorded with the run");

  auto * eval = app.add_subcommand("eval", "score generated reactions against ground truth");
  Options o_eval(eval);
  add_shared(o_eval, s);
  o_eval.add("generated", s.generated, "samples JSONL from `sample`")->check(CLI::ExistingFile);
  o_eval.add("data", s.data, "ground-truth sessions")->check(CLI::ExistingFile);

  auto * inspect = app.add_subcommand("inspect", "diagnostic CSVs");
  inspect->require_subcommand(1);
  auto * sched_cmd = inspect->add_subcommand("schedule", "alpha, sigma and lambda per step");
  Options o_sched(sched_cmd);
  add_shared(o_sched, s);
  o_sched.add("steps", s.steps, "solver steps T");
  o_sched.flag("svg", s.svg, "also write an SVG chart");
  auto * traj_cmd = inspect->add_subcommand("trajectory", "per-step mean coefficient, ODE vs SDE");
  Options o_traj(traj_cmd);
  add_shared(o_traj, s);
  o_traj.add("model", s.model, "checkpoint")->check(CLI::ExistingFile);
  o_traj.add("data", s.data, "sessions")->check(CLI::ExistingFile);
  o_traj.add("session", s.session, "session index");
  o_traj.add("steps", s.steps, "solver steps T");
  o_traj.add("eta", s.eta, "SDE noise scale");
  o_traj.add("guidance", s.guidance, "classifier-free guidance scale");
  o_traj.flag("svg", s.svg, "also write an SVG chart");

  auto * ablate = app.add_subcommand("ablate", "train/evaluate variants that each flip one setting");
  Options o_ablate(ablate);
  add_shared(o_ablate, s);
  o_ablate.add("data", s.data, "corpus")->check(CLI::ExistingFile);
  o_ablate.add("test-data", s.test_data, "held-out sessions (default: last --test-sessions of --data)");
  o_ablate.add("test-sessions", s.test_sessions, "sessions held out when --test-data is empty");
  add_network(o_ablate, s);
  add_training(o_ablate, s);
  add_generation(o_ablate, s);
  o_ablate.add("toggle", s.toggles, "timestamp, face, audio, fbk, fac, solver or steps")
    ->delimiter(',')
    ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
    ->check(CLI::IsMember({"timestamp", "face", "audio", "fbk", "fac", "solver", "steps"}));
  o_ablate.add("alt-steps", s.alt_steps, "step count used by the steps toggle");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError & e) {
    // Help and version exit 0; everything else is a usage error.
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) cmd_synth(o_synth, s, out);
    else if (train_cmd->parsed()) cmd_train(o_train, s, out);
    else if (sample->parsed()) cmd_sample(o_sample, s, out);
    else if (eval->parsed()) cmd_eval(o_eval, s, out);
    else if (sched_cmd->parsed()) cmd_inspect_schedule(o_sched, s, out);
    else if (traj_cmd->parsed()) cmd_inspect_trajectory(o_traj, s, out);
    else if (ablate->parsed()) cmd_ablate(o_ablate, s, out);
  } catch (const std::exception & e) {
    err << json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace reactgen::cli
