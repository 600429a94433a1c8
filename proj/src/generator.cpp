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

#include "reactgen/generator.hpp"

#include "reactgen/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace reactgen
{

FeatureNormalizer FeatureNormalizer::fit(const std::vector<Matrix> & data, double min_scale)
{
  if (data.empty()) throw InputError("normalizer: no data");
  const Eigen::Index d = data.front().cols();
  Vector sum = Vector::Zero(d), sum_sq = Vector::Zero(d);
  double rows = 0.0;
  for (const auto & m : data) {
    if (m.cols() != d) throw DimensionError("normalizer: column counts differ");
    sum += m.colwise().sum().transpose();
    sum_sq += m.cwiseAbs2().colwise().sum().transpose();
    rows += static_cast<double>(m.rows());
  }
  if (rows < 1.0) throw InputError("normalizer: no rows");
  FeatureNormalizer n;
  n.mean = sum / rows;
  n.scale = (sum_sq / rows - n.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(min_scale);
  return n;
}

FeatureNormalizer FeatureNormalizer::identity(int dims)
{
  return {Vector::Zero(dims), Vector::Ones(dims)};
}

Matrix FeatureNormalizer::normalize(const Matrix & m) const
{
  if (m.cols() != mean.size()) throw DimensionError("normalize: column count mismatch");
  return (m.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Matrix FeatureNormalizer::denormalize(const Matrix & m) const
{
  if (m.cols() != mean.size()) throw DimensionError("denormalize: column count mismatch");
  return (m.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

ReactionModel ReactionModel::create(
  const ScoreNetConfig & config, const std::vector<Session> & corpus, std::uint64_t seed)
{
  config.validate();
  ReactionModel m;
  m.params = DenoiserParams(config);
  m.params.init_random(seed);
  if (corpus.empty()) {
    m.listener = FeatureNormalizer::identity(kFrameDims);
    m.face = FeatureNormalizer::identity(kFrameDims);
    m.audio = FeatureNormalizer::identity(config.audio_dims);
    return m;
  }
  std::vector<Matrix> listeners, faces, audios;
  for (const auto & s : corpus) {
    if (s.window != config.window) throw ConfigError("corpus window differs from model window");
    for (const auto & l : s.listeners) listeners.push_back(l);
    faces.push_back(s.speaker_face());
    audios.push_back(s.speaker_audio());
    if (audios.back().cols() != config.audio_dims) throw ConfigError("corpus audio dims differ from model");
  }
  m.listener = FeatureNormalizer::fit(listeners);
  m.face = FeatureNormalizer::fit(faces);
  m.audio = FeatureNormalizer::fit(audios);
  return m;
}

ReactionModel ReactionModel::vanilla() const
{
  ScoreNetConfig cfg = config();
  cfg.use_history = false;
  cfg.use_timestamp = false;
  ReactionModel out = *this;
  DenoiserParams p(cfg);
  for (std::size_t i = 0; i < p.blocks().size(); ++i) p.blocks()[i].value = params.blocks()[i].value;
  out.params = std::move(p);
  return out;
}

ConditionBundle ReactionModel::condition(
  const SpeakerWindow & window, std::int64_t k, const NoiseLevel & level, const Vector & past, bool dropped) const
{
  const int w = config().window;
  if (window.face.frames() != w || window.audio.frames() != w) {
    throw DimensionError("speaker window length differs from model window");
  }
  ConditionBundle c;
  c.speaker_face = face.normalize(window.face.data);
  c.speaker_audio = audio.normalize(window.audio.data);
  c.step = level;
  c.timestamp = (k + 1) * w;
  c.past_frame = past;
  c.cond_dropped = dropped;
  return c;
}

Matrix ReactionModel::predict_data(const Matrix & x, ConditionBundle cond, double guidance_scale) const
{
  Matrix score = score_forward(x, cond, params);
  if (guidance_scale != 1.0) {
    cond.cond_dropped = true;
    score = cfg_combine(score, score_forward(x, cond, params), guidance_scale);
  }
  return data_prediction(x, score, cond.step);
}

SolverTrajectory sample_window(
  const ReactionModel & model, const SpeakerWindow & window, std::int64_t k, const Vector & past,
  const NoiseSchedule & schedule, const GenerationConfig & config, std::mt19937_64 & rng)
{
  const ConditionBundle base = model.condition(window, k, schedule.level(schedule.steps), past);
  const DataPredictor predictor = [&](const Matrix & x, const NoiseLevel & level) {
    ConditionBundle c = base;
    c.step = level;
    return model.predict_data(x, std::move(c), config.guidance_scale);
  };
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix x_T = schedule.sigma.back() *
                     Matrix::NullaryExpr(model.config().window, kFrameDims, [&] { return normal(rng); });
  switch (config.solver) {
    case SolverKind::Ode2M:
      return solve_ode_2m(x_T, schedule, predictor);
    case SolverKind::Sde2M:
      return solve_sde_2m(x_T, schedule, predictor, config.eta, rng);
    case SolverKind::EulerReference: {
      const int substeps = config.euler_substeps > 0 ? config.euler_substeps : 20 * config.steps;
      SolverTrajectory t;
      t.states.push_back(x_T);
      t.states.push_back(solve_euler_reference(x_T, schedule, predictor, substeps, ReferenceMode::Ode));
      return t;
    }
  }
  throw ConfigError("unknown solver");
}

namespace
{

Matrix generate_one(
  const std::vector<SpeakerWindow> & speaker, const ReactionModel & model, const NoiseSchedule & schedule,
  const GenerationConfig & config, std::uint64_t stream)
{
  const int w = model.config().window;
  std::mt19937_64 rng(stream);
  Matrix out(static_cast<Eigen::Index>(speaker.size()) * w, kFrameDims);
  Vector past = Vector::Zero(kFrameDims);
  for (std::size_t k = 0; k < speaker.size(); ++k) {
    const auto traj = sample_window(model, speaker[k], static_cast<std::int64_t>(k), past, schedule, config, rng);
    Matrix decoded = model.listener.denormalize(traj.final_state());
    clamp_to_valid(decoded);
    out.middleRows(static_cast<Eigen::Index>(k) * w, w) = decoded;
    past = model.listener.normalize(decoded.bottomRows(1)).row(0).transpose();
  }
  return out;
}

}  // namespace

std::vector<Matrix> generate_session(
  const std::vector<SpeakerWindow> & speaker, const ReactionModel & model, const GenerationConfig & config)
{
  if (speaker.empty()) throw InputError("generate_session: empty speaker stream");
  config.validate();
  for (std::size_t k = 1; k < speaker.size(); ++k) {
    if (speaker[k].face.start_index != speaker[k - 1].face.start_index + speaker[k - 1].face.frames()) {
      throw InputError("generate_session: speaker windows are not contiguous");
    }
  }
  const NoiseSchedule schedule = build_cosine_schedule(config.steps);
  const auto m_count = static_cast<std::size_t>(config.m_samples);
  std::vector<Matrix> out(m_count);

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.jobs)), m_count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t m = next++; m < m_count; m = next++) {
      try {
        out[m] = generate_one(speaker, model, schedule, config, config.seed ^ static_cast<std::uint64_t>(m));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < workers; ++j) pool.emplace_back(work);
    for (auto & t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double mean_boundary_jump(const Matrix & sequence, int window)
{
  if (window <= 0) throw ConfigError("window must be positive");
  double total = 0.0;
  int count = 0;
  for (Eigen::Index r = window; r < sequence.rows(); r += window) {
    total += (sequence.row(r) - sequence.row(r - 1)).norm();
    ++count;
  }
  return count > 0 ? total / count : 0.0;
}

double mean_symmetric_gap(const Matrix & sequence, const AUPairRegistry & registry)
{
  if (registry.symmetric.empty() || sequence.rows() == 0) return 0.0;
  double total = 0.0;
  for (const auto & [i, j] : registry.symmetric) total += (sequence.col(i) - sequence.col(j)).cwiseAbs().sum();
  return total / static_cast<double>(registry.symmetric.size() * static_cast<std::size_t>(sequence.rows()));
}

EvalReport score_generation(const std::vector<Session> & test, const std::vector<std::vector<Matrix>> & generated)
{
  if (test.empty() || test.size() != generated.size()) throw InputError("score_generation: session count mismatch");
  const auto registry = AUPairRegistry::builtin();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EvalReport r;
  std::vector<Matrix> all_gen, all_gt, first_samples;
  double frdiv = 0.0, frcorr = 0.0, lag = 0.0, jump = 0.0, gap = 0.0;
  int lag_count = 0;
  bool has_div = true;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto & samples = generated[i];
    if (samples.empty()) throw InputError("score_generation: no samples for a session");
    const Matrix speaker = test[i].speaker_face();
    const int max_lag = std::min<int>(48, static_cast<int>(speaker.rows()) - 1);
    for (const auto & g : samples) {
      all_gen.push_back(g);
      lag += fr_syn(speaker, g, max_lag).lag;
      jump += mean_boundary_jump(g, test[i].window);
      gap += mean_symmetric_gap(g, registry);
      ++lag_count;
    }
    for (const auto & l : test[i].listeners) all_gt.push_back(l);
    first_samples.push_back(samples.front());
    if (samples.size() >= 2) {
      frdiv += fr_div(samples);
    } else {
      has_div = false;
    }
    frcorr += fr_corr(samples, test[i].listeners);
  }
  const double n = static_cast<double>(test.size());
  r.frvar = fr_var(all_gen);
  bool same_shape = first_samples.size() >= 2;
  for (const auto & s : first_samples) same_shape = same_shape && s.rows() == first_samples.front().rows();
  r.frdvs = same_shape ? fr_dvs(first_samples) : nan;
  r.frdiv = has_div ? frdiv / n : nan;
  r.frcorr = frcorr / n;
  r.frsyn = lag / lag_count;
  r.fcd = all_gen.size() >= 2 && all_gt.size() >= 2 ? frechet_coeff_distance(all_gen, all_gt) : nan;
  r.boundary_jump = jump / lag_count;
  r.symmetric_gap = gap / lag_count;
  return r;
}

EvalReport evaluate_generation(
  const ReactionModel & model, const std::vector<Session> & test, const GenerationConfig & config,
  std::vector<std::vector<Matrix>> * generated)
{
  std::vector<std::vector<Matrix>> samples;
  for (std::size_t i = 0; i < test.size(); ++i) {
    GenerationConfig c = config;
    c.seed = session_seed(config.seed, i);
    samples.push_back(generate_session(test[i].speaker, model, c));
  }
  EvalReport r = score_generation(test, samples);
  if (generated != nullptr) *generated = std::move(samples);
  return r;
}

}  // namespace reactgen
