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

#include "reactgen/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace reactgen
{

namespace
{

void require_same_shape(const std::vector<Matrix> & seqs, const char * what)
{
  for (const auto & s : seqs) {
    if (s.rows() != seqs.front().rows() || s.cols() != seqs.front().cols()) {
      throw InputError(std::string(what) + ": sequences must share a shape");
    }
  }
}

Matrix psd_sqrt(const Matrix & m)
{
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fr_var(const std::vector<Matrix> & sequences)
{
  if (sequences.empty()) throw InputError("fr_var: no sequences");
  double total = 0.0;
  Eigen::Index count = 0;
  for (const auto & s : sequences) {
    if (s.rows() < 2) throw InputError("fr_var: sequences need H >= 2");
    const Eigen::RowVectorXd mean = s.colwise().mean();
    total += (s.rowwise() - mean).colwise().squaredNorm().sum() / static_cast<double>(s.rows());
    count += s.cols();
  }
  return total / static_cast<double>(count);
}

double fr_dvs(const std::vector<Matrix> & per_speaker)
{
  if (per_speaker.size() < 2) throw InputError("fr_dvs: needs at least two speakers");
  require_same_shape(per_speaker, "fr_dvs");
  const double n = static_cast<double>(per_speaker.size());
  Matrix sum = Matrix::Zero(per_speaker.front().rows(), per_speaker.front().cols());
  Matrix sum_sq = sum;
  for (const auto & r : per_speaker) {
    sum += r;
    sum_sq += r.cwiseAbs2();
  }
  const Matrix var = (sum_sq / n - (sum / n).cwiseAbs2()).cwiseMax(0.0);
  return var.mean();
}

double fr_div(const std::vector<Matrix> & samples)
{
  if (samples.size() < 2) throw InputError("fr_div: needs M >= 2 samples");
  require_same_shape(samples, "fr_div");
  // sum_{a<b} |x_a - x_b|^2 = M * sum_a |x_a|^2 - |sum_a x_a|^2, entrywise.
  const double m = static_cast<double>(samples.size());
  Matrix sum = Matrix::Zero(samples.front().rows(), samples.front().cols());
  double sum_sq = 0.0;
  for (const auto & s : samples) {
    sum += s;
    sum_sq += s.squaredNorm();
  }
  const double pair_total = std::max(0.0, m * sum_sq - sum.squaredNorm());
  const double pairs = m * (m - 1.0) / 2.0;
  return pair_total / pairs / static_cast<double>(samples.front().size());
}

double concordance(const Eigen::Ref<const Vector> & x, const Eigen::Ref<const Vector> & y)
{
  const double mx = x.mean(), my = y.mean();
  const double n = static_cast<double>(x.size());
  const double vx = (x.array() - mx).square().sum() / n;
  const double vy = (y.array() - my).square().sum() / n;
  const double cov = ((x.array() - mx) * (y.array() - my)).sum() / n;
  const double denom = vx + vy + (mx - my) * (mx - my);
  if (!(denom > 0.0)) return 0.0;
  return 2.0 * cov / denom;
}

double fr_corr(const std::vector<Matrix> & generated, const std::vector<Matrix> & appropriate)
{
  if (generated.empty() || appropriate.empty()) throw InputError("fr_corr: empty input set");
  double total = 0.0;
  for (const auto & g : generated) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto & a : appropriate) {
      if (a.rows() != g.rows() || a.cols() != g.cols()) throw InputError("fr_corr: shape mismatch");
      double mean_ccc = 0.0;
      for (Eigen::Index d = 0; d < g.cols(); ++d) mean_ccc += concordance(g.col(d), a.col(d));
      best = std::max(best, mean_ccc / static_cast<double>(g.cols()));
    }
    total += best;
  }
  return total / static_cast<double>(generated.size());
}

SynchronyResult fr_syn(const Matrix & speaker, const Matrix & generated, int max_lag)
{
  if (speaker.rows() != generated.rows() || speaker.cols() != generated.cols()) {
    throw InputError("fr_syn: speaker and generated shapes differ");
  }
  const Eigen::Index h = speaker.rows();
  if (max_lag < 0 || max_lag >= h) throw InputError("fr_syn: max_lag must be in [0, H)");

  SynchronyResult best;
  best.lag = max_lag;
  best.signed_lag = max_lag;
  best.undefined = true;
  double best_corr = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    // Pair speaker[t] with generated[t + lag].
    const Eigen::Index s0 = std::max<Eigen::Index>(0, -lag);
    const Eigen::Index n = h - std::abs(lag);
    if (n < 2) continue;
    double corr_sum = 0.0;
    int used = 0;
    for (Eigen::Index d = 0; d < speaker.cols(); ++d) {
      const auto a = speaker.col(d).segment(s0, n);
      const auto b = generated.col(d).segment(s0 + lag, n);
      const double ma = a.mean(), mb = b.mean();
      const double va = (a.array() - ma).square().sum();
      const double vb = (b.array() - mb).square().sum();
      if (!(va > 0.0) || !(vb > 0.0)) continue;
      corr_sum += ((a.array() - ma) * (b.array() - mb)).sum() / std::sqrt(va * vb);
      ++used;
    }
    if (used == 0) continue;
    const double corr = corr_sum / used;
    if (corr > best_corr || (corr == best_corr && std::abs(lag) < best.lag)) {
      best_corr = corr;
      best.lag = std::abs(lag);
      best.signed_lag = lag;
      best.correlation = corr;
      best.undefined = false;
    }
  }
  return best;
}

Vector sequence_embedding(const Matrix & s)
{
  const Eigen::Index d = s.cols();
  Vector e(2 * d);
  const Eigen::RowVectorXd mean = s.colwise().mean();
  e.head(d) = mean.transpose();
  e.tail(d) = ((s.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(s.rows()))
                .cwiseSqrt()
                .transpose();
  return e;
}

double frechet_distance(const Vector & mu_a, const Matrix & cov_a, const Vector & mu_b, const Matrix & cov_b)
{
  const Matrix root_a = psd_sqrt(cov_a);
  const Matrix cross = psd_sqrt(root_a * cov_b * root_a);
  return (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross.trace();
}

double frechet_coeff_distance(const std::vector<Matrix> & set_a, const std::vector<Matrix> & set_b)
{
  if (set_a.size() < 2 || set_b.size() < 2) {
    throw InputError("frechet_coeff_distance: each set needs at least two sequences");
  }
  auto fit = [](const std::vector<Matrix> & set, Vector & mu, Matrix & cov) {
    Matrix emb(static_cast<Eigen::Index>(set.size()), 2 * set.front().cols());
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set[i].cols() != set.front().cols()) throw InputError("frechet: dims differ");
      emb.row(static_cast<Eigen::Index>(i)) = sequence_embedding(set[i]).transpose();
    }
    mu = emb.colwise().mean().transpose();
    const Matrix centered = emb.rowwise() - mu.transpose();
    cov = centered.transpose() * centered / static_cast<double>(emb.rows() - 1);
  };
  Vector mu_a, mu_b;
  Matrix cov_a, cov_b;
  fit(set_a, mu_a, cov_a);
  fit(set_b, mu_b, cov_b);
  if (mu_a.size() != mu_b.size()) throw InputError("frechet: sets have different dims");
  return std::max(0.0, frechet_distance(mu_a, cov_a, mu_b, cov_b));
}

}  // namespace reactgen
