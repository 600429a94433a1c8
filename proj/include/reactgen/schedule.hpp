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

#ifndef REACTGEN_SCHEDULE_HPP_
#define REACTGEN_SCHEDULE_HPP_

#include "reactgen/core.hpp"

#include <iosfwd>
#include <random>
#include <vector>

namespace reactgen
{

/// One grid point of a variance-preserving schedule. `index` is -1 for off-grid points
/// (used by the refined reference integrator).
struct NoiseLevel
{
  int index = -1;
  double u = 0.0;      // continuous diffusion time in [0, 1]
  double alpha = 1.0;
  double sigma = 0.0;

  double log_snr() const;
};

/// Discretized VP schedule. Index 0 is the clean end, index T the noisy end.
struct NoiseSchedule
{
  int steps = 0;
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> lambda;
  std::vector<double> t_grid;

  NoiseLevel level(int i) const;
};

inline constexpr double kCosineOffset = 0.008;
inline constexpr double kScheduleClip = 1e-4;

/// Continuous cosine schedule: alpha(u)^2 = cos^2(((u + s) / (1 + s)) * pi / 2), unclipped.
NoiseLevel cosine_level(double u);

/// T+1 uniformly spaced points of the cosine schedule with endpoint clipping.
NoiseSchedule build_cosine_schedule(int steps);

/// log(alpha / sigma). Throws DomainError for nonpositive inputs.
double log_snr(double alpha, double sigma);

struct TrainingNoiseDraw
{
  int index = 0;
  double sigma = 0.0;
};

/// Log-normal proposal over the noise-to-signal ratio sigma/alpha, snapped to the
/// nearest grid point in log space.
struct NoiseLevelSampler
{
  double location = -1.2;
  double scale = 1.2;

  TrainingNoiseDraw operator()(const NoiseSchedule & schedule, std::mt19937_64 & rng) const;
  /// Grid index whose log(sigma/alpha) is nearest to `log_ratio`.
  static int nearest_index(const NoiseSchedule & schedule, double log_ratio);
};

TrainingNoiseDraw sample_training_noise_level(const NoiseSchedule & schedule, std::mt19937_64 & rng);

/// CSV dump with header `i,alpha,sigma,lambda`.
void write_schedule_csv(const NoiseSchedule & schedule, std::ostream & os);

}  // namespace reactgen

#endif  // REACTGEN_SCHEDULE_HPP_
