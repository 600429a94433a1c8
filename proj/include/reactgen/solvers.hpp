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

#ifndef REACTGEN_SOLVERS_HPP_
#define REACTGEN_SOLVERS_HPP_

#include "reactgen/core.hpp"
#include "reactgen/schedule.hpp"

#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

namespace reactgen
{

/// Maps a noisy state and its noise level to a clean-data estimate. Wraps the score network,
/// guidance and data_prediction; analytic models plug in directly in tests.
using DataPredictor = std::function<Matrix(const Matrix & x, const NoiseLevel & level)>;

/// score_uncond + scale * (score_cond - score_uncond)
template <typename DerivedC, typename DerivedU>
Matrix cfg_combine(
  const Eigen::MatrixBase<DerivedC> & score_cond, const Eigen::MatrixBase<DerivedU> & score_uncond,
  double scale)
{
  if (score_cond.rows() != score_uncond.rows() || score_cond.cols() != score_uncond.cols()) {
    throw DimensionError("cfg_combine: shape mismatch");
  }
  return score_uncond + scale * (score_cond - score_uncond);
}

/// Posterior-mean estimate implied by a score under the Gaussian kernel:
/// x0_hat = (x_t + sigma^2 * score) / alpha.
template <typename DerivedX, typename DerivedS>
Matrix data_prediction(
  const Eigen::MatrixBase<DerivedX> & x_t, const Eigen::MatrixBase<DerivedS> & score,
  const NoiseLevel & level)
{
  if (!(level.sigma > 0.0)) throw DomainError("data_prediction requires sigma > 0");
  if (!(level.alpha > 1e-12)) throw DomainError("data_prediction: degenerate step with alpha ~ 0");
  return (x_t + level.sigma * level.sigma * score) / level.alpha;
}

struct SolverTrajectory
{
  std::vector<Matrix> states;       // T+1 entries, states[0] = x_T, states[T] = final sample
  std::vector<Matrix> noise_draws;  // one per step for the SDE solver with eta > 0, else empty
  std::vector<Matrix> predictions;  // data predictions used at each model query

  const Matrix & final_state() const { return states.back(); }
};

/// Second-order multistep exponential integrator, deterministic form.
SolverTrajectory solve_ode_2m(const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model);

/// Second-order multistep exponential integrator with stochastic coupling eta.
/// eta = 0 reproduces solve_ode_2m bit for bit.
SolverTrajectory solve_sde_2m(
  const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model, double eta,
  std::mt19937_64 & rng);

enum class ReferenceMode { Ode, Sde };

/// First-order oracle integrator on a grid refined uniformly in log-SNR: probability-flow Euler
/// (Ode) or reverse-SDE Euler-Maruyama (Sde). `substeps` is the total number of refined steps.
Matrix solve_euler_reference(
  const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model, int substeps,
  ReferenceMode mode, std::mt19937_64 * rng = nullptr);

/// The VP level with the given log-SNR (index -1, u recovered from the cosine schedule).
NoiseLevel level_from_log_snr(double lambda);

/// CSV with header `step,index,mean` holding the mean coefficient of every trajectory state.
void write_trajectory_csv(const SolverTrajectory & traj, const NoiseSchedule & schedule, std::ostream & os);

}  // namespace reactgen

#endif  // REACTGEN_SOLVERS_HPP_
