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

#ifndef REACTGEN_GENERATOR_HPP_
#define REACTGEN_GENERATOR_HPP_

#include "reactgen/core.hpp"
#include "reactgen/losses.hpp"
#include "reactgen/schedule.hpp"
#include "reactgen/score_net.hpp"
#include "reactgen/solvers.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace reactgen
{

/// Per-column affine standardization.
struct FeatureNormalizer
{
  Vector mean;
  Vector scale;

  /// Fits mean / std over all rows of all matrices; std is floored at `min_scale`.
  static FeatureNormalizer fit(const std::vector<Matrix> & data, double min_scale = 1e-3);
  static FeatureNormalizer identity(int dims);

  Matrix normalize(const Matrix & m) const;
  Matrix denormalize(const Matrix & m) const;
  bool operator==(const FeatureNormalizer &) const = default;
};

/// Network parameters together with the feature normalizers of the corpus they were fit on.
/// The diffusion runs in normalized listener space; decoding maps back and clamps.
struct ReactionModel
{
  DenoiserParams params;
  FeatureNormalizer listener;
  FeatureNormalizer face;
  FeatureNormalizer audio;

  static ReactionModel create(const ScoreNetConfig & config, const std::vector<Session> & corpus, std::uint64_t seed);

  const ScoreNetConfig & config() const { return params.config(); }

  /// Copy of this model with history and timestamp conditioning switched off.
  ReactionModel vanilla() const;

  /// Conditions for window `k` of a speaker stream; `past` is in normalized listener space.
  ConditionBundle condition(
    const SpeakerWindow & window, std::int64_t k, const NoiseLevel & level, const Vector & past,
    bool dropped = false) const;

  /// Normalized x0 estimate with classifier-free guidance on the score.
  Matrix predict_data(const Matrix & x, ConditionBundle cond, double guidance_scale) const;
};

/// Denoises one window from x_T drawn from `rng` and returns the solver trajectory.
SolverTrajectory sample_window(
  const ReactionModel & model, const SpeakerWindow & window, std::int64_t k, const Vector & past,
  const NoiseSchedule & schedule, const GenerationConfig & config, std::mt19937_64 & rng);

/// Online generation over a speaker stream. Returns M decoded sequences of (#windows * w) x 58.
std::vector<Matrix> generate_session(
  const std::vector<SpeakerWindow> & speaker, const ReactionModel & model, const GenerationConfig & config);

/// Desk-scale optimizer: 2000 iterations leave too little room for lr = 1e-4.
inline AdamWHyper desk_adam()
{
  AdamWHyper h;
  h.lr = 1e-3;
  return h;
}

struct TrainConfig
{
  int iterations = 2000;
  int batch = 32;
  AdamWHyper adam = desk_adam();
  double lambda_fac = kDefaultLambdaFac;
  int gate = kDefaultGateStep;
  bool use_fbk = true;
  double cond_dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainLog
{
  std::vector<LossBreakdown> iterations;

  void write_csv(std::ostream & os) const;
  /// Mean of the dm component over iterations [begin, end).
  double mean_dm(std::size_t begin, std::size_t end) const;
};

using TrainProgress = std::function<void(int iteration, const LossBreakdown & loss)>;

/// Teacher-forced training. Throws NumericError naming the iteration and component on a
/// non-finite loss. `optimizer` is created on first use when empty.
TrainLog train(
  const std::vector<Session> & corpus, ReactionModel & model, AdamWState & optimizer,
  const NoiseSchedule & schedule, const AUPairRegistry & registry, const TrainConfig & config,
  const TrainProgress & progress = {});

/// Metrics over generated reactions for a set of test sessions.
struct EvalReport
{
  double frvar = 0.0;
  double frdvs = 0.0;   // NaN with a single test session
  double frdiv = 0.0;   // NaN with M = 1
  double frcorr = 0.0;
  double frsyn = 0.0;   // mean |lag| in frames
  double fcd = 0.0;
  double boundary_jump = 0.0;   // mean norm of last-frame -> first-frame steps across windows
  double symmetric_gap = 0.0;   // mean |x_i - x_j| over symmetric pairs and frames
};

/// Generation seed for the i-th session of a set.
inline std::uint64_t session_seed(std::uint64_t base, std::size_t i) { return base + 7919 * static_cast<std::uint64_t>(i); }

/// Generates M samples per test session (seeded by session_seed) and scores them.
EvalReport evaluate_generation(
  const ReactionModel & model, const std::vector<Session> & test, const GenerationConfig & config,
  std::vector<std::vector<Matrix>> * generated = nullptr);

/// Metrics only, on already generated samples (one vector of M sequences per session).
EvalReport score_generation(const std::vector<Session> & test, const std::vector<std::vector<Matrix>> & generated);

double mean_boundary_jump(const Matrix & sequence, int window);
double mean_symmetric_gap(const Matrix & sequence, const AUPairRegistry & registry);

/// Binary checkpoint: magic, u64 header length, JSON header (config, block names/shapes/offsets,
/// optimizer step), then raw doubles for normalizers, parameters and (optionally) Adam moments.
/// save -> load is bitwise.
void save_model(const ReactionModel & model, const AdamWState * optimizer, const std::string & path);
ReactionModel load_model(const std::string & path, AdamWState * optimizer = nullptr);

}  // namespace reactgen

#endif  // REACTGEN_GENERATOR_HPP_
