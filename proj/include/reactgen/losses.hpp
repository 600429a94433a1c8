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

#ifndef REACTGEN_LOSSES_HPP_
#define REACTGEN_LOSSES_HPP_

#include "reactgen/core.hpp"
#include "reactgen/schedule.hpp"

#include <string>
#include <utility>
#include <vector>

namespace reactgen
{

using IndexPair = std::pair<int, int>;

/// Symmetric, co-occurring and mutually exclusive expression-coefficient pairs.
struct AUPairRegistry
{
  std::vector<IndexPair> symmetric;
  std::vector<IndexPair> co_occurred;
  std::vector<IndexPair> mutually_exclusive;

  /// The built-in 20 / 30 / 58 pair table.
  static AUPairRegistry builtin();
  /// Parses {symmetric: [[name, name], ...], co_occurred: [...], mutually_exclusive: [...]}.
  /// Throws InputError on unknown names.
  static AUPairRegistry from_json(const std::string & text);

  /// Problems that make the registry unusable: out-of-range or non-expression indices,
  /// self pairs, duplicates inside one set. Empty when valid.
  std::vector<std::string> validate() const;
  /// Pairs listed in more than one set (informational).
  std::vector<IndexPair> cross_set_overlaps() const;
  /// Concatenation of the three sets.
  std::vector<IndexPair> all_pairs() const;
};

/// x_t = alpha_t * x0 + sigma_t * eps.
template <typename DerivedX, typename DerivedE>
Matrix forward_diffuse(
  const Eigen::MatrixBase<DerivedX> & x0, const NoiseLevel & level,
  const Eigen::MatrixBase<DerivedE> & eps)
{
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) {
    throw DimensionError("forward_diffuse: x0 and eps shapes differ");
  }
  return level.alpha * x0 + level.sigma * eps;
}

/// Exact score of the Gaussian perturbation kernel: -(x_t - alpha * x0) / sigma^2.
template <typename DerivedX, typename DerivedT>
Matrix target_score(
  const Eigen::MatrixBase<DerivedX> & x0, const Eigen::MatrixBase<DerivedT> & x_t,
  const NoiseLevel & level)
{
  if (!(level.sigma > 0.0)) throw DomainError("target_score: degenerate step with sigma = 0");
  return -(x_t - level.alpha * x0) / (level.sigma * level.sigma);
}

/// Mean squared error over all entries.
template <typename DerivedP, typename DerivedT>
double loss_dm(const Eigen::MatrixBase<DerivedP> & pred, const Eigen::MatrixBase<DerivedT> & target)
{
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("loss_dm: shape mismatch");
  }
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

/// d loss_dm / d pred.
Matrix loss_dm_grad(const Matrix & pred, const Matrix & target);

struct FbkResult
{
  double value = 0.0;
  Matrix grad_cur;   // d/d pred_cur
  Matrix grad_prev;  // d/d pred_prev (empty when no history)
};

/// Score-velocity matching across the previous and current window.
///
/// Over the concatenated sequence s = prev || cur, each current frame i contributes
/// |v(i, i-1) - v_hat(i, i-1)| + |v(i, i-w) - v_hat(i, i-w)|, with v(i, j) = ||s(i) - s(j)||
/// and the window term divided by w. Returns exactly 0 when t_index > gate or when the
/// previous window is absent.
FbkResult loss_fbk(
  const Matrix & pred_cur, const Matrix & target_cur, const Matrix * pred_prev,
  const Matrix * target_prev, int t_index, int gate, bool with_grad = false);

struct FacResult
{
  double value = 0.0;
  Matrix grad;  // d/d pred
};

/// Sum over frames and registered pairs of | |t_i - t_j| - |p_i - p_j| |.
FacResult loss_fac(
  const Matrix & pred, const Matrix & target, const AUPairRegistry & registry,
  bool with_grad = false);

struct LossBreakdown
{
  double dm = 0.0;
  double fbk = 0.0;
  double fac = 0.0;
  double total = 0.0;
  double lambda_fac = 0.0;
};

inline constexpr double kDefaultLambdaFac = 1e-4;
inline constexpr int kDefaultGateStep = 5;

/// total = dm + fbk + lambda_fac * fac. Throws NumericError naming a non-finite component.
LossBreakdown total_loss(double dm, double fbk, double fac, double lambda_fac = kDefaultLambdaFac);

}  // namespace reactgen

#endif  // REACTGEN_LOSSES_HPP_
