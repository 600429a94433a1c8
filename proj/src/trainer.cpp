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

#include <cmath>
#include <iomanip>
#include <ostream>

namespace reactgen
{

void TrainConfig::validate() const
{
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(lambda_fac >= 0.0)) throw ConfigError("lambda_fac must be >= 0");
  if (gate < 0) throw ConfigError("gate must be >= 0");
  if (!(cond_dropout >= 0.0 && cond_dropout <= 1.0)) throw ConfigError("cond_dropout must be in [0, 1]");
}

void TrainLog::write_csv(std::ostream & os) const
{
  os << "iteration,dm,fbk,fac,lambda_fac,total\n" << std::setprecision(10);
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    const auto & l = iterations[i];
    os << i << ',' << l.dm << ',' << l.fbk << ',' << l.fac << ',' << l.lambda_fac << ',' << l.total << '\n';
  }
}

double TrainLog::mean_dm(std::size_t begin, std::size_t end) const
{
  end = std::min(end, iterations.size());
  if (begin >= end) throw InputError("mean_dm: empty range");
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += iterations[i].dm;
  return s / static_cast<double>(end - begin);
}

namespace
{

struct WindowSample
{
  Matrix x0;
  Vector past;
  const SpeakerWindow * speaker = nullptr;
  std::int64_t k = 0;
};

WindowSample make_sample(const Session & s, const ReactionModel & model, std::size_t listener, std::int64_t k)
{
  const int w = s.window;
  const Matrix & l = s.listeners[listener];
  WindowSample out;
  out.x0 = model.listener.normalize(l.middleRows(k * w, w));
  out.past = k > 0 ? Vector(model.listener.normalize(l.row(k * w - 1)).row(0).transpose())
                   : Vector(Vector::Zero(kFrameDims));
  out.speaker = &s.speaker[static_cast<std::size_t>(k)];
  out.k = k;
  return out;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  return Matrix::NullaryExpr(rows, cols, [&] { return normal(rng); });
}

}  // namespace

TrainLog train(
  const std::vector<Session> & corpus, ReactionModel & model, AdamWState & optimizer,
  const NoiseSchedule & schedule, const AUPairRegistry & registry, const TrainConfig & config,
  const TrainProgress & progress)
{
  config.validate();
  if (corpus.empty()) throw InputError("train: empty corpus");
  for (const auto & s : corpus) {
    if (s.window != model.config().window) throw ConfigError("train: corpus window differs from model");
    if (s.speaker.empty() || s.listeners.empty()) throw InputError("train: session without windows or listeners");
  }
  if (optimizer.first_moment.empty()) optimizer = AdamWState::zeros_like(model.params);

  std::mt19937_64 rng(config.seed);
  const NoiseLevelSampler sampler;
  const double inv_batch = 1.0 / static_cast<double>(config.batch);
  const bool with_fac_grad = config.lambda_fac > 0.0;
  const double inv_window = 1.0 / static_cast<double>(model.config().window);

  TrainLog log;
  log.iterations.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 0; it < config.iterations; ++it) {
    model.params.zero_grad();
    double dm = 0.0, fbk = 0.0, fac = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const auto & s = corpus[std::uniform_int_distribution<std::size_t>(0, corpus.size() - 1)(rng)];
      const auto li = std::uniform_int_distribution<std::size_t>(0, s.listeners.size() - 1)(rng);
      const auto k = std::uniform_int_distribution<std::int64_t>(0, static_cast<std::int64_t>(s.speaker.size()) - 1)(rng);
      const auto draw = sampler(schedule, rng);
      const NoiseLevel level = schedule.level(draw.index);
      const bool dropped = std::bernoulli_distribution(config.cond_dropout)(rng);

      // Scores enter every loss multiplied by sigma (noise-prediction units); fbk is
      // averaged over the window's frames like dm is over entries.
      const WindowSample cur = make_sample(s, model, li, k);
      const Matrix eps = gaussian(cur.x0.rows(), cur.x0.cols(), rng);
      const Matrix x_t = forward_diffuse(cur.x0, level, eps);
      ForwardCache cache;
      const Matrix pred = level.sigma *
                          score_forward(x_t, model.condition(*cur.speaker, k, level, cur.past, dropped), model.params, &cache);
      const Matrix target = level.sigma * target_score(cur.x0, x_t, level);

      dm += loss_dm(pred, target);
      Matrix grad = loss_dm_grad(pred, target);

      const FacResult fr = loss_fac(pred, target, registry, with_fac_grad);
      fac += fr.value;
      if (with_fac_grad) grad += config.lambda_fac * fr.grad;

      if (config.use_fbk && k > 0 && draw.index <= config.gate) {
        // Velocities are compared on the implied clean frames x0_hat = (x_t + sigma * pred) / alpha.
        const WindowSample prev = make_sample(s, model, li, k - 1);
        const Matrix eps_p = gaussian(prev.x0.rows(), prev.x0.cols(), rng);
        const Matrix x_tp = forward_diffuse(prev.x0, level, eps_p);
        ForwardCache cache_p;
        const Matrix pred_p =
          level.sigma *
          score_forward(x_tp, model.condition(*prev.speaker, k - 1, level, prev.past, dropped), model.params, &cache_p);
        const double to_x0 = level.sigma / level.alpha;
        const Matrix x0_hat = (x_t + level.sigma * pred) / level.alpha;
        const Matrix x0_hat_p = (x_tp + level.sigma * pred_p) / level.alpha;
        const FbkResult kr = loss_fbk(x0_hat, cur.x0, &x0_hat_p, &prev.x0, draw.index, config.gate, true);
        fbk += kr.value * inv_window;
        grad += (to_x0 * inv_window) * kr.grad_cur;
        score_backward((level.sigma * inv_batch * inv_window * to_x0) * kr.grad_prev, cache_p, model.params);
      }
      score_backward(level.sigma * inv_batch * grad, cache, model.params);
    }

    LossBreakdown loss;
    try {
      loss = total_loss(dm * inv_batch, fbk * inv_batch, fac * inv_batch, config.lambda_fac);
    } catch (const NumericError & e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
    adamw_step(model.params, optimizer, config.adam);
    log.iterations.push_back(loss);
    if (progress) progress(it, loss);
  }
  return log;
}

}  // namespace reactgen
