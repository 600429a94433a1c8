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

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace reactgen;
using reactgen::testing::random_matrix;

namespace
{

double brute_div(const std::vector<Matrix> & xs)
{
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < xs.size(); ++a) {
    for (std::size_t b = a + 1; b < xs.size(); ++b) {
      double d = 0.0;
      for (Eigen::Index r = 0; r < xs[a].rows(); ++r) {
        for (Eigen::Index c = 0; c < xs[a].cols(); ++c) d += (xs[a](r, c) - xs[b](r, c)) * (xs[a](r, c) - xs[b](r, c));
      }
      total += d / static_cast<double>(xs[a].size());
      ++pairs;
    }
  }
  return total / pairs;
}

// Plain Pearson loop over every lag; ties go to the smaller |lag|, scanning 0, -1, 1, -2, 2, ...
std::pair<int, double> brute_syn(const Matrix & s, const Matrix & g, int max_lag)
{
  const long h = s.rows();
  int best_lag = 0;
  double best = -1e300;
  for (int k = 0; k <= max_lag; ++k) {
    for (int lag : {-k, k}) {
      if (k == 0 && lag != 0) continue;
      const long n = h - std::abs(lag);
      double sum = 0;
      int used = 0;
      for (long d = 0; d < s.cols(); ++d) {
        std::vector<double> a, b;
        for (long t = 0; t < h; ++t) {
          if (t + lag < 0 || t + lag >= h) continue;
          a.push_back(s(t, d));
          b.push_back(g(t + lag, d));
        }
        double ma = 0, mb = 0;
        for (long i = 0; i < n; ++i) ma += a[i], mb += b[i];
        ma /= n;
        mb /= n;
        double sab = 0, saa = 0, sbb = 0;
        for (long i = 0; i < n; ++i) {
          sab += (a[i] - ma) * (b[i] - mb);
          saa += (a[i] - ma) * (a[i] - ma);
          sbb += (b[i] - mb) * (b[i] - mb);
        }
        if (saa <= 0 || sbb <= 0) continue;
        sum += sab / std::sqrt(saa * sbb);
        ++used;
      }
      if (used == 0) continue;
      if (sum / used > best) {
        best = sum / used;
        best_lag = lag;
      }
    }
  }
  return {best_lag, best};
}

}  // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("fr_div matches the pairwise sum")
  {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> m_dist(2, 8), h_dist(2, 12), d_dist(1, 6);
    for (int trial = 0; trial < 100; ++trial) {
      const int m = m_dist(rng), h = h_dist(rng), d = d_dist(rng);
      std::vector<Matrix> xs;
      for (int i = 0; i < m; ++i) xs.push_back(random_matrix(h, d, rng));
      CHECK(std::abs(fr_div(xs) - brute_div(xs)) < 1e-10);
    }
    std::vector<Matrix> same(4, Matrix::Constant(3, 2, 0.7));
    CHECK(fr_div(same) == 0.0);
    CHECK_THROWS_AS(fr_div({Matrix::Zero(2, 2)}), InputError);
    CHECK_THROWS_AS(fr_div({Matrix::Zero(2, 2), Matrix::Zero(3, 2)}), InputError);
  }

  TEST_CASE("fr_syn matches an exhaustive lag scan")
  {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix s = random_matrix(40, 3, rng);
      const Matrix g = random_matrix(40, 3, rng);
      const auto r = fr_syn(s, g, 10);
      const auto [lag, corr] = brute_syn(s, g, 10);
      CHECK(r.signed_lag == lag);
      CHECK(r.lag == std::abs(lag));
      CHECK(std::abs(r.correlation - corr) < 1e-10);
    }
  }

  TEST_CASE("fr_syn recovers an injected lag")
  {
    std::mt19937_64 rng(3);
    const Matrix s = random_matrix(200, 5, rng);
    Matrix g = random_matrix(200, 5, rng, 0.1);
    // generated trails the speaker by 5 frames
    g.bottomRows(195) += s.topRows(195);
    const auto r = fr_syn(s, g, 48);
    CHECK(r.signed_lag == 5);
    CHECK(r.lag == 5);
    CHECK(r.correlation > 0.9);
    CHECK(fr_syn(s, s, 48).lag == 0);
    CHECK(fr_syn(s, s, 48).correlation == doctest::Approx(1.0));
    CHECK(fr_syn(Matrix::Ones(10, 2), s.topRows(10).leftCols(2), 3).undefined);
    CHECK_THROWS_AS(fr_syn(s, s, 200), InputError);
    CHECK_THROWS_AS(fr_syn(s, g.topRows(10), 3), InputError);
  }

  TEST_CASE("fr_var and fr_dvs")
  {
    Matrix a(4, 1);
    a << 0, 1, 2, 3;
    // population variance of 0..3
    CHECK(fr_var({a}) == doctest::Approx(1.25));
    Matrix two(4, 2);
    two << 0, 5, 1, 5, 2, 5, 3, 5;
    CHECK(fr_var({two}) == doctest::Approx(0.625));
    CHECK(fr_var({Matrix::Constant(5, 3, 0.2)}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(fr_var({Matrix::Zero(1, 3)}), InputError);

    std::mt19937_64 rng(4);
    std::vector<Matrix> per;
    for (int i = 0; i < 5; ++i) per.push_back(random_matrix(6, 3, rng));
    double total = 0.0;
    for (Eigen::Index r = 0; r < 6; ++r) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        double m = 0, v = 0;
        for (const auto & p : per) m += p(r, c) / 5.0;
        for (const auto & p : per) v += (p(r, c) - m) * (p(r, c) - m) / 5.0;
        total += v;
      }
    }
    CHECK(fr_dvs(per) == doctest::Approx(total / 18.0).epsilon(1e-12));
    CHECK(fr_dvs({per[0], per[0]}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(fr_dvs({per[0]}), InputError);
  }

  TEST_CASE("concordance and fr_corr")
  {
    std::mt19937_64 rng(5);
    Vector x = random_matrix(50, 1, rng);
    x.array() -= x.mean();
    CHECK(concordance(x, x) == doctest::Approx(1.0));
    CHECK(concordance(x, -x) == doctest::Approx(-1.0));
    // a shifted copy keeps Pearson 1 but loses concordance
    CHECK(concordance(x, (x.array() + 1.0).matrix()) < 0.9);
    CHECK(concordance(Vector::Ones(5), Vector::Ones(5)) == 0.0);
    Vector p(3), q(3);
    p << 1, 2, 3;
    q << 2, 2, 4;
    // means 2, 8/3; vars 2/3, 8/9; cov 2/3
    CHECK(concordance(p, q) == doctest::Approx(2.0 * (2.0 / 3) / (2.0 / 3 + 8.0 / 9 + 4.0 / 9)));

    const Matrix g = random_matrix(20, 4, rng), other = random_matrix(20, 4, rng);
    CHECK(fr_corr({g}, {other, g}) == doctest::Approx(1.0));
    CHECK(fr_corr({g}, {other}) < 0.5);
    CHECK_THROWS_AS(fr_corr({}, {g}), InputError);
    CHECK_THROWS_AS(fr_corr({g}, {g.topRows(3)}), InputError);
  }

  TEST_CASE("frechet distance")
  {
    // 1-D closed form: (ma - mb)^2 + (sa - sb)^2
    Vector ma(1), mb(1);
    ma << 0.5;
    mb << -1.0;
    Matrix ca(1, 1), cb(1, 1);
    ca << 4.0;
    cb << 0.25;
    CHECK(frechet_distance(ma, ca, mb, cb) == doctest::Approx(2.25 + 2.25));
    // diagonal covariances reduce to per-dim terms
    Vector z = Vector::Zero(3);
    const Matrix da = Vector(Eigen::Vector3d(1.0, 4.0, 9.0)).asDiagonal();
    const Matrix db = Vector(Eigen::Vector3d(4.0, 4.0, 1.0)).asDiagonal();
    CHECK(frechet_distance(z, da, z, db) == doctest::Approx(1.0 + 0.0 + 4.0));

    std::mt19937_64 rng(6);
    std::vector<Matrix> set;
    for (int i = 0; i < 12; ++i) set.push_back(random_matrix(16, 3, rng));
    CHECK(std::abs(frechet_coeff_distance(set, set)) < 1e-9);
    std::vector<Matrix> moved = set;
    for (auto & m : moved) m.array() += 2.0;
    // a constant shift moves only the mean half of the embedding
    CHECK(frechet_coeff_distance(set, moved) == doctest::Approx(3 * 4.0).epsilon(1e-9));
    CHECK_THROWS_AS(frechet_coeff_distance({set[0]}, set), InputError);

    const Vector e = sequence_embedding((Matrix(2, 1) << 1.0, 3.0).finished());
    CHECK(e(0) == 2.0);
    CHECK(e(1) == 1.0);
  }
}
