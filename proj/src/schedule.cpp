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

#include "reactgen/schedule.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace reactgen
{

double NoiseLevel::log_snr() const { return reactgen::log_snr(alpha, sigma); }

NoiseLevel NoiseSchedule::level(int i) const
{
  if (i < 0 || i > steps) throw std::out_of_range("schedule index " + std::to_string(i));
  const auto k = static_cast<std::size_t>(i);
  return {i, t_grid[k], alpha[k], sigma[k]};
}

NoiseLevel cosine_level(double u)
{
  const double angle = (u + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0;
  // cos/sin of the same angle keep alpha^2 + sigma^2 = 1 to rounding.
  return {-1, u, std::cos(angle), std::sin(angle)};
}

NoiseSchedule build_cosine_schedule(int steps)
{
  if (steps < 2) throw ConfigError("cosine schedule needs T >= 2, got " + std::to_string(steps));
  NoiseSchedule s;
  s.steps = steps;
  const auto n = static_cast<std::size_t>(steps) + 1;
  s.alpha.resize(n);
  s.sigma.resize(n);
  s.lambda.resize(n);
  s.t_grid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / steps;
    auto p = cosine_level(u);
    if (p.sigma < kScheduleClip) {
      p.sigma = kScheduleClip;
      p.alpha = std::sqrt(1.0 - p.sigma * p.sigma);
    }
    if (p.alpha < kScheduleClip) {
      p.alpha = kScheduleClip;
      p.sigma = std::sqrt(1.0 - p.alpha * p.alpha);
    }
    s.t_grid[i] = u;
    s.alpha[i] = p.alpha;
    s.sigma[i] = p.sigma;
    s.lambda[i] = log_snr(p.alpha, p.sigma);
  }
  return s;
}

double log_snr(double alpha, double sigma)
{
  if (!(alpha > 0.0) || !(sigma > 0.0)) {
    throw DomainError("log_snr requires alpha > 0 and sigma > 0");
  }
  return std::log(alpha / sigma);
}

int NoiseLevelSampler::nearest_index(const NoiseSchedule & schedule, double log_ratio)
{
  // log(sigma/alpha) = -lambda, increasing with the index.
  int best = 0;
  double best_dist = std::abs(-schedule.lambda[0] - log_ratio);
  for (int i = 1; i <= schedule.steps; ++i) {
    const double d = std::abs(-schedule.lambda[static_cast<std::size_t>(i)] - log_ratio);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

TrainingNoiseDraw NoiseLevelSampler::operator()(
  const NoiseSchedule & schedule, std::mt19937_64 & rng) const
{
  double log_ratio = location;
  if (scale > 0.0) {
    std::normal_distribution<double> normal(location, scale);
    log_ratio = normal(rng);
  }
  const int idx = nearest_index(schedule, log_ratio);
  return {idx, schedule.sigma[static_cast<std::size_t>(idx)]};
}

TrainingNoiseDraw sample_training_noise_level(const NoiseSchedule & schedule, std::mt19937_64 & rng)
{
  return NoiseLevelSampler{}(schedule, rng);
}

void write_schedule_csv(const NoiseSchedule & schedule, std::ostream & os)
{
  os << "i,alpha,sigma,lambda\n" << std::setprecision(17);
  for (int i = 0; i <= schedule.steps; ++i) {
    const auto k = static_cast<std::size_t>(i);
    os << i << ',' << schedule.alpha[k] << ',' << schedule.sigma[k] << ',' << schedule.lambda[k]
       << '\n';
  }
}

}  // namespace reactgen
