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

#include "reactgen/score_net.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace reactgen;
using reactgen::testing::random_condition;
using reactgen::testing::random_matrix;
using reactgen::testing::tiny_config;

namespace
{

// Worst per-block relative error between the analytic gradient of sum(score .* weights)
// and a central finite difference with step 1e-5.
double worst_gradient_error(bool dropped, std::string * worst_block)
{
  std::mt19937_64 rng(11);
  const auto cfg = tiny_config();
  DenoiserParams p(cfg);
  p.init_random(5);
  for (auto & b : p.blocks()) b.value += random_matrix(b.value.rows(), b.value.cols(), rng, 0.1);

  const NoiseLevel level = cosine_level(0.4);
  ConditionBundle cond = random_condition(cfg, rng, level);
  cond.cond_dropped = dropped;
  const Matrix x = random_matrix(cfg.window, kFrameDims, rng);
  const Matrix weights = random_matrix(cfg.window, kFrameDims, rng);
  auto objective = [&] { return score_forward(x, cond, p).cwiseProduct(weights).sum(); };

  ForwardCache cache;
  score_forward(x, cond, p, &cache);
  p.zero_grad();
  score_backward(weights, cache, p);

  double worst = 0.0;
  const double h = 1e-5;
  for (auto & b : p.blocks()) {
    Matrix fd(b.value.rows(), b.value.cols());
    for (Eigen::Index i = 0; i < b.value.size(); ++i) {
      const double keep = b.value.data()[i];
      b.value.data()[i] = keep + h;
      const double up = objective();
      b.value.data()[i] = keep - h;
      const double down = objective();
      b.value.data()[i] = keep;
      fd.data()[i] = (up - down) / (2.0 * h);
    }
    const double scale = std::max(b.grad.norm(), fd.norm());
    if (scale < 1e-9) continue;
    const double err = (b.grad - fd).norm() / scale;
    if (err > worst) {
      worst = err;
      if (worst_block != nullptr) *worst_block = b.name;
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("score_net")
{
  TEST_CASE("every parameter block matches central finite differences")
  {
    for (bool dropped : {false, true}) {
      std::string name;
      const double err = worst_gradient_error(dropped, &name);
      INFO("dropped=" << dropped << " worst block " << name);
      CHECK(err < 1e-4);
    }
  }

  TEST_CASE("null condition receives gradient only when the condition is dropped")
  {
    std::mt19937_64 rng(2);
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    p.init_random(1);
    ConditionBundle cond = random_condition(cfg, rng, cosine_level(0.3));
    const Matrix x = random_matrix(cfg.window, kFrameDims, rng);
    for (bool dropped : {false, true}) {
      cond.cond_dropped = dropped;
      ForwardCache cache;
      score_forward(x, cond, p, &cache);
      p.zero_grad();
      score_backward(Matrix::Ones(cfg.window, kFrameDims), cache, p);
      CHECK((p.block("attn.null_cond").grad.norm() > 0.0) == dropped);
    }
  }

  TEST_CASE("zero weights give the head bias")
  {
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    std::mt19937_64 rng(3);
    p.block("head.b").value = random_matrix(kFrameDims, 1, rng);
    const NoiseLevel level = cosine_level(0.5);
    ConditionBundle cond;
    cond.speaker_face = Matrix::Zero(cfg.window, kFrameDims);
    cond.speaker_audio = Matrix::Zero(cfg.window, cfg.audio_dims);
    cond.step = level;
    cond.timestamp = cfg.window;
    cond.past_frame = Vector::Zero(kFrameDims);
    const Matrix x = Matrix::Zero(cfg.window, kFrameDims);

    ForwardCache cache;
    const Matrix score = score_forward(x, cond, p, &cache);
    const Matrix bias_rows = Matrix::Ones(cfg.window, 1) * p.block("head.b").value.transpose();
    CHECK((cache.head - bias_rows).cwiseAbs().maxCoeff() == 0.0);
    CHECK((score + (level.alpha / level.sigma) * bias_rows).cwiseAbs().maxCoeff() < 1e-12);

    // Sum of outputs: the head-bias gradient is w copies of d score / d head.
    p.zero_grad();
    score_backward(Matrix::Ones(cfg.window, kFrameDims), cache, p);
    const Matrix expected = Matrix::Constant(kFrameDims, 1, -(level.alpha / level.sigma) * cfg.window);
    CHECK((p.block("head.b").grad - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("forward and backward are deterministic")
  {
    std::mt19937_64 rng(4);
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    p.init_random(9);
    const ConditionBundle cond = random_condition(cfg, rng, cosine_level(0.7));
    const Matrix x = random_matrix(cfg.window, kFrameDims, rng);
    const Matrix g = random_matrix(cfg.window, kFrameDims, rng);
    ForwardCache c1, c2;
    const Matrix a = score_forward(x, cond, p, &c1);
    const Matrix b = score_forward(x, cond, p, &c2);
    CHECK(a == b);
    p.zero_grad();
    score_backward(g, c1, p);
    std::vector<Matrix> first;
    for (const auto & blk : p.blocks()) first.push_back(blk.grad);
    p.zero_grad();
    score_backward(g, c2, p);
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(p.blocks()[i].grad == first[i]);
  }

  TEST_CASE("backward without a recorded forward is a state error")
  {
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    ForwardCache empty;
    CHECK_THROWS_AS(score_backward(Matrix::Zero(cfg.window, kFrameDims), empty, p), StateError);
  }

  TEST_CASE("shape mismatch is a dimension error")
  {
    std::mt19937_64 rng(5);
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    const ConditionBundle cond = random_condition(cfg, rng, cosine_level(0.5));
    CHECK_THROWS_AS(score_forward(Matrix::Zero(cfg.window + 1, kFrameDims), cond, p), DimensionError);
  }

  TEST_CASE("future speaker frames do not affect past outputs")
  {
    std::mt19937_64 rng(6);
    auto cfg = tiny_config();
    cfg.window = 6;
    DenoiserParams p(cfg);
    p.init_random(2);
    ConditionBundle cond = random_condition(cfg, rng, cosine_level(0.5));
    const Matrix x = random_matrix(cfg.window, kFrameDims, rng);
    const Matrix base = score_forward(x, cond, p);
    for (int j = 1; j < cfg.window; ++j) {
      ConditionBundle perturbed = cond;
      perturbed.speaker_face.row(j).array() += 1.0;
      perturbed.speaker_audio.row(j).array() += 1.0;
      const Matrix out = score_forward(x, perturbed, p);
      CHECK((out.topRows(j) - base.topRows(j)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((out.row(j) - base.row(j)).cwiseAbs().maxCoeff() > 0.0);
    }
  }

  TEST_CASE("past frame feeds the recurrent initial state")
  {
    std::mt19937_64 rng(7);
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    p.init_random(3);
    ConditionBundle cond = random_condition(cfg, rng, cosine_level(0.5));
    const Matrix x = random_matrix(cfg.window, kFrameDims, rng);
    const Matrix a = score_forward(x, cond, p);
    cond.past_frame.setZero();
    CHECK((score_forward(x, cond, p) - a).norm() > 0.0);

    auto off = cfg;
    off.use_history = false;
    DenoiserParams q(off);
    for (std::size_t i = 0; i < q.blocks().size(); ++i) q.blocks()[i].value = p.blocks()[i].value;
    const Matrix z = score_forward(x, cond, q);
    cond.past_frame.setOnes();
    CHECK(score_forward(x, cond, q) == z);
  }

  TEST_CASE("adaptive group norm")
  {
    std::mt19937_64 rng(8);
    const Vector scale = random_matrix(8, 1, rng);
    const Vector shift = random_matrix(8, 1, rng);

    SUBCASE("constant input gives the shift")
    {
      const Matrix out = adaptive_group_norm(Matrix::Constant(5, 8, 3.0), scale, shift, 4);
      for (Eigen::Index r = 0; r < out.rows(); ++r) CHECK((out.row(r).transpose() - shift).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero scale and shift give zeros")
    {
      const Matrix out = adaptive_group_norm(random_matrix(5, 8, rng), Vector::Zero(8), Vector::Zero(8), 4);
      CHECK(out.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("per-group statistics are normalized")
    {
      const Matrix h = random_matrix(6, 8, rng, 3.0).array() + 2.0;
      const Matrix out = adaptive_group_norm(h, Vector::Ones(8), Vector::Zero(8), 4);
      for (int g = 0; g < 4; ++g) {
        const auto block = out.middleCols(2 * g, 2);
        CHECK(std::abs(block.mean()) < 1e-6);
        CHECK(std::abs((block.array() - block.mean()).square().mean() - 1.0) < 1e-3);
      }
    }
    SUBCASE("channels must divide into groups")
    {
      CHECK_THROWS_AS(adaptive_group_norm(Matrix::Zero(2, 6), Vector::Zero(6), Vector::Zero(6), 4), ConfigError);
    }
  }

  TEST_CASE("causal attention weights")
  {
    std::mt19937_64 rng(9);
    SUBCASE("a single frame attends fully to itself")
    {
      const Matrix w = causal_attention_weights(random_matrix(1, 4, rng), random_matrix(1, 4, rng));
      CHECK(w(0, 0) == 1.0);
    }
    SUBCASE("uniform keys average the visible values")
    {
      const Matrix keys = Matrix::Ones(5, 3) * 0.7;
      const Matrix w = causal_attention_weights(random_matrix(5, 3, rng), keys);
      const Matrix values = Matrix::Ones(5, 1) * random_matrix(1, 4, rng);
      const Matrix out = w * values;
      for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) CHECK(w(i, j) == doctest::Approx(1.0 / static_cast<double>(i + 1)));
        CHECK((out.row(i) - values.row(0)).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
    SUBCASE("upper triangle is exactly zero")
    {
      const Matrix w = causal_attention_weights(random_matrix(7, 5, rng), random_matrix(7, 5, rng));
      for (Eigen::Index i = 0; i < 7; ++i) {
        for (Eigen::Index j = i + 1; j < 7; ++j) CHECK(w(i, j) == 0.0);
        CHECK(w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("parameter layout")
  {
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    for (const auto & b : p.blocks()) {
      CHECK(b.grad.rows() == b.value.rows());
      CHECK(b.grad.cols() == b.value.cols());
    }
    CHECK(p.block("attn.null_cond").value.cols() == 1);
    CHECK(p.block("attn.null_cond").value.rows() == cfg.speaker_dims());
    CHECK(DenoiserParams(cfg).parameter_count() == p.parameter_count());
    auto wider = cfg;
    wider.hidden = 16;
    CHECK(DenoiserParams(wider).parameter_count() > p.parameter_count());
    CHECK_THROWS_AS(p.block("nope"), std::out_of_range);
  }

  TEST_CASE("adamw")
  {
    const auto cfg = tiny_config();
    DenoiserParams p(cfg);
    p.init_random(4);
    AdamWHyper hp;

    SUBCASE("zero gradient and zero decay leave parameters unchanged")
    {
      auto no_decay = hp;
      no_decay.weight_decay = 0.0;
      const auto before = p.blocks();
      p.zero_grad();
      AdamWState s;
      adamw_step(p, s, no_decay);
      for (std::size_t i = 0; i < before.size(); ++i) CHECK(p.blocks()[i].value == before[i].value);
    }
    SUBCASE("first step on a scalar matches the hand formula")
    {
      auto & w = p.block("head.w");
      w.value(0, 0) = 0.5;
      p.zero_grad();
      w.grad(0, 0) = 1.0;
      AdamWState s;
      adamw_step(p, s, hp);
      // m_hat = v_hat = 1 after bias correction.
      const double expected = 0.5 - hp.lr * hp.weight_decay * 0.5 - hp.lr * 1.0 / (1.0 + hp.epsilon);
      CHECK(w.value(0, 0) == doctest::Approx(expected).epsilon(1e-14));
      CHECK(s.step == 1);
    }
    SUBCASE("weight decay alone shrinks by 1 - lr * wd per step")
    {
      const Matrix before = p.block("attn.q.w").value;
      p.zero_grad();
      AdamWState s;
      for (int k = 0; k < 3; ++k) adamw_step(p, s, hp);
      const double factor = std::pow(1.0 - hp.lr * hp.weight_decay, 3);
      CHECK((p.block("attn.q.w").value - factor * before).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}
