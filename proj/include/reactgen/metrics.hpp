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

#ifndef REACTGEN_METRICS_HPP_
#define REACTGEN_METRICS_HPP_

#include "reactgen/core.hpp"

#include <vector>

namespace reactgen
{

// Sequences are H x D matrices (frames in rows). All variances are population variances.

/// Mean over sequences and dims of the temporal variance of each coefficient.
double fr_var(const std::vector<Matrix> & sequences);

/// Mean over aligned (frame, dim) of the variance across speakers' reactions.
double fr_dvs(const std::vector<Matrix> & per_speaker_reactions);

/// Mean over unordered sample pairs of the mean squared frame-wise distance.
double fr_div(const std::vector<Matrix> & samples);

/// Concordance correlation of two 1-D signals; 0 when the denominator vanishes.
double concordance(const Eigen::Ref<const Vector> & x, const Eigen::Ref<const Vector> & y);

/// Best-match concordance against the appropriate set, averaged over generated samples.
double fr_corr(const std::vector<Matrix> & generated, const std::vector<Matrix> & appropriate);

struct SynchronyResult
{
  int lag = 0;             // |argmax| of the lagged correlation, in frames
  int signed_lag = 0;      // argmax with sign (positive: generated trails the speaker)
  double correlation = 0;  // mean-over-dims correlation at the chosen lag
  bool undefined = false;  // no usable (non-constant) dimension
};

/// Time-lagged cross correlation over lags in [-max_lag, max_lag].
SynchronyResult fr_syn(const Matrix & speaker, const Matrix & generated, int max_lag = 48);

/// Per-sequence (mean, std) per coefficient, concatenated (2D values).
Vector sequence_embedding(const Matrix & sequence);

/// Frechet distance between Gaussians (mu_a, cov_a) and (mu_b, cov_b).
double frechet_distance(const Vector & mu_a, const Matrix & cov_a, const Vector & mu_b, const Matrix & cov_b);

/// Frechet distance between Gaussian fits of the sequence embeddings of two sets.
double frechet_coeff_distance(const std::vector<Matrix> & set_a, const std::vector<Matrix> & set_b);

}  // namespace reactgen

#endif  // REACTGEN_METRICS_HPP_
