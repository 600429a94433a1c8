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

#include "reactgen/solvers.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace reactgen
{

namespace
{

Matrix gaussian_like(const Matrix & shape, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  return Matrix::NullaryExpr(shape.rows(), shape.cols(), [&] { return normal(rng); });
}

// The update rules are written for the scaled state x / alpha, whose noise level is
// sigma / alpha = exp(-lambda). In those coordinates the multistep formulas need no
// alpha factors; states are converted back to x = alpha * (x / alpha) when stored.
SolverTrajectory multistep_2m(
  const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model, double eta,
  std::mt19937_64 * rng)
{
  const int steps = schedule.steps;
  if (steps < 2) throw ConfigError("2M solvers need T >= 2");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");

  // t_i runs from the noisy end (index T) to the clean end (index 0).
  auto level_at = [&](int i) { return schedule.level(steps - i); };
  auto noise_at = [&](int i) {
    const auto l = level_at(i);
    return l.sigma / l.alpha;
  };
  auto h_at = [&](int i) {
    return schedule.lambda[static_cast<std::size_t>(steps - i)] -
           schedule.lambda[static_cast<std::size_t>(steps - i + 1)];
  };

  SolverTrajectory traj;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(x_T);

  Matrix scaled = x_T / level_at(0).alpha;
  Matrix m_prev2;
  Matrix m_prev = model(x_T, level_at(0));
  traj.predictions.push_back(m_prev);

  for (int i = 1; i <= steps; ++i) {
    const double h = h_at(i);
    const double ratio = std::exp(-eta * h) * (noise_at(i) / noise_at(i - 1));
    Matrix d;
    if (i == 1) {
      d = m_prev;
    } else {
      const double r = h_at(i - 1) / h;
      d = (1.0 + 1.0 / (2.0 * r)) * m_prev - m_prev2 / (2.0 * r);
    }
    scaled = ratio * scaled - (std::exp(-h - eta * h) - 1.0) * d;
    if (rng != nullptr && eta > 0.0) {  // eta = 0 is the ODE; draw nothing
      Matrix z = gaussian_like(x_T, *rng);
      scaled += noise_at(i) * std::sqrt(1.0 - std::exp(-2.0 * eta * h)) * z;
      traj.noise_draws.push_back(std::move(z));
    }
    const auto level = level_at(i);
    traj.states.push_back(level.alpha * scaled);
    if (i < steps) {
      m_prev2 = std::move(m_prev);
      m_prev = model(traj.states.back(), level);
      traj.predictions.push_back(m_prev);
    }
  }
  return traj;
}

}  // namespace

SolverTrajectory solve_ode_2m(const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model)
{
  return multistep_2m(x_T, schedule, model, 0.0, nullptr);
}

SolverTrajectory solve_sde_2m(
  const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model, double eta,
  std::mt19937_64 & rng)
{
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0, got " + std::to_string(eta));
  return multistep_2m(x_T, schedule, model, eta, &rng);
}

NoiseLevel level_from_log_snr(double lambda)
{
  // alpha^2 = 1 / (1 + e^{-2 lambda}); computed through atan for stability at both ends.
  const double angle = std::atan(std::exp(-lambda));
  NoiseLevel l;
  l.alpha = std::cos(angle);
  l.sigma = std::sin(angle);
  l.u = angle * 2.0 / std::numbers::pi * (1.0 + kCosineOffset) - kCosineOffset;
  l.index = -1;
  return l;
}

Matrix solve_euler_reference(
  const Matrix & x_T, const NoiseSchedule & schedule, const DataPredictor & model, int substeps,
  ReferenceMode mode, std::mt19937_64 * rng)
{
  if (substeps < schedule.steps) throw ConfigError("reference integrator needs substeps >= T");
  if (mode == ReferenceMode::Sde && rng == nullptr) {
    throw ConfigError("reverse-SDE reference needs an rng");
  }
  const double lambda_start = schedule.lambda.back();
  const double lambda_end = schedule.lambda.front();
  const double dl = (lambda_end - lambda_start) / substeps;

  NoiseLevel level = schedule.level(schedule.steps);
  Matrix scaled = x_T / level.alpha;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < substeps; ++k) {
    const NoiseLevel next = k + 1 == substeps ? schedule.level(0)
                                              : level_from_log_snr(lambda_start + (k + 1) * dl);
    const double noise = level.sigma / level.alpha;
    const double noise_next = next.sigma / next.alpha;
    const Matrix d = model(level.alpha * scaled, level);
    if (mode == ReferenceMode::Ode) {
      // In the original variable dx/dlambda = alpha * D - alpha^2 * x, which stays O(1)
      // where the scaled state blows up near the noisy end.
      Matrix x = level.alpha * scaled;
      x += (next.log_snr() - level.log_snr()) * (level.alpha * d - level.alpha * level.alpha * x);
      scaled = x / next.alpha;
    } else {
      const double var = noise * noise - noise_next * noise_next;
      const Matrix grad_log_p = (d - scaled) / (noise * noise);
      scaled += var * grad_log_p;
      scaled += std::sqrt(var) *
                Matrix::NullaryExpr(scaled.rows(), scaled.cols(), [&] { return normal(*rng); });
    }
    level = next;
  }
  return level.alpha * scaled;
}

void write_trajectory_csv(const SolverTrajectory & traj, const NoiseSchedule & schedule, std::ostream & os)
{
  os << "step,index,mean\n" << std::setprecision(12);
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    os << i << ',' << schedule.steps - static_cast<int>(i) << ',' << traj.states[i].mean() << '\n';
  }
}

}  // namespace reactgen
