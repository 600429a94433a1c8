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

#include "reactgen/generator.hpp"

#include "reactgen/data.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace reactgen;
using reactgen::testing::random_matrix;
using reactgen::testing::tiny_config;

namespace
{

std::vector<Session> tiny_corpus(std::uint64_t seed = 3)
{
  SynthConfig c;
  c.sessions = 2;
  c.listeners_per_session = 2;
  c.window = 4;
  c.windows_per_session = 3;
  c.audio_dims = 4;
  c.seed = seed;
  return synth_corpus(c);
}

TrainConfig quick_train(int iterations)
{
  TrainConfig t;
  t.iterations = iterations;
  t.batch = 4;
  t.seed = 11;
  return t;
}

GenerationConfig quick_gen()
{
  GenerationConfig g;
  g.steps = 6;
  g.m_samples = 3;
  g.seed = 21;
  return g;
}

std::string temp_path(const std::string & name)
{
  return (std::filesystem::temp_directory_path() / ("reactgen_test_" + name)).string();
}

}  // namespace

TEST_SUITE("generator")
{
  TEST_CASE("feature normalizer")
  {
    std::mt19937_64 rng(1);
    const Matrix a = random_matrix(30, 3, rng, 2.0), b = random_matrix(10, 3, rng, 2.0);
    auto n = FeatureNormalizer::fit({a, b});
    Matrix all(40, 3);
    all << a, b;
    CHECK(n.normalize(all).colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(n.denormalize(n.normalize(a)).isApprox(a, 1e-12));
    const auto flat = FeatureNormalizer::fit({Matrix::Constant(5, 2, 0.4)});
    CHECK(flat.scale.minCoeff() == 1e-3);
    CHECK(FeatureNormalizer::identity(3).normalize(a) == a);
  }

  TEST_CASE("checkpoint round trip is bitwise")
  {
    const auto corpus = tiny_corpus();
    auto model = ReactionModel::create(tiny_config(), corpus, 7);
    AdamWState opt;
    train(corpus, model, opt, build_cosine_schedule(10), AUPairRegistry::builtin(), quick_train(3));
    const auto path = temp_path("roundtrip.ckpt");
    save_model(model, &opt, path);

    AdamWState opt2;
    const auto back = load_model(path, &opt2);
    CHECK(back.config() == model.config());
    CHECK(back.listener == model.listener);
    CHECK(back.face == model.face);
    CHECK(back.audio == model.audio);
    REQUIRE(back.params.blocks().size() == model.params.blocks().size());
    for (std::size_t i = 0; i < model.params.blocks().size(); ++i) {
      CHECK(back.params.blocks()[i].name == model.params.blocks()[i].name);
      CHECK(back.params.blocks()[i].value == model.params.blocks()[i].value);
      CHECK(opt2.first_moment[i] == opt.first_moment[i]);
      CHECK(opt2.second_moment[i] == opt.second_moment[i]);
    }
    CHECK(opt2.step == 3);

    // without optimizer state
    save_model(model, nullptr, path);
    AdamWState none;
    load_model(path, &none);
    CHECK(none.first_moment.empty());

    // corruption
    {
      std::ofstream os(path, std::ios::binary);
      os << "NOTACKPT";
    }
    CHECK_THROWS_AS(load_model(path), InputError);
    std::filesystem::resize_file(path, 0);
    CHECK_THROWS_AS(load_model(path), InputError);
    save_model(model, &opt, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(load_model(path), InputError);
    std::filesystem::remove(path);
    CHECK_THROWS(load_model(path));
  }

  TEST_CASE("training bookkeeping")
  {
    const auto corpus = tiny_corpus();
    const auto schedule = build_cosine_schedule(10);
    const auto reg = AUPairRegistry::builtin();
    auto model = ReactionModel::create(tiny_config(), corpus, 7);
    const auto before = model.params.blocks();

    AdamWState opt;
    const auto log0 = train(corpus, model, opt, schedule, reg, quick_train(0));
    CHECK(log0.iterations.empty());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(model.params.blocks()[i].value == before[i].value);

    const auto log = train(corpus, model, opt, schedule, reg, quick_train(5));
    REQUIRE(log.iterations.size() == 5);
    for (const auto & l : log.iterations) {
      CHECK(std::isfinite(l.total));
      CHECK(l.dm > 0.0);
      CHECK(l.total == doctest::Approx(l.dm + l.fbk + l.lambda_fac * l.fac));
    }
    CHECK(opt.step == 5);
    bool moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) moved = moved || model.params.blocks()[i].value != before[i].value;
    CHECK(moved);
    std::ostringstream csv;
    log.write_csv(csv);
    CHECK(csv.str().rfind("iteration,dm,fbk,fac,lambda_fac,total\n", 0) == 0);

    // same seed, same result
    auto m1 = ReactionModel::create(tiny_config(), corpus, 7), m2 = m1;
    AdamWState o1, o2;
    const auto l1 = train(corpus, m1, o1, schedule, reg, quick_train(3));
    const auto l2 = train(corpus, m2, o2, schedule, reg, quick_train(3));
    CHECK(l1.iterations.back().total == l2.iterations.back().total);

    auto bad = quick_train(2);
    bad.batch = 0;
    CHECK_THROWS_AS(train(corpus, m1, o1, schedule, reg, bad), ConfigError);
  }

  TEST_CASE("non-finite loss aborts with the iteration")
  {
    const auto corpus = tiny_corpus();
    auto model = ReactionModel::create(tiny_config(), corpus, 7);
    model.params.block("head.w").value.setConstant(std::nan(""));
    AdamWState opt;
    try {
      train(corpus, model, opt, build_cosine_schedule(10), AUPairRegistry::builtin(), quick_train(3));
      FAIL("expected NumericError");
    } catch (const NumericError & e) {
      CHECK(std::string(e.what()).rfind("iteration 0:", 0) == 0);
    }
  }

  TEST_CASE("history and timestamp conditioning")
  {
    const auto corpus = tiny_corpus();
    auto model = ReactionModel::create(tiny_config(), corpus, 7);
    const auto schedule = build_cosine_schedule(6);
    auto g = quick_gen();
    g.solver = SolverKind::Ode2M;
    const auto & win = corpus[0].speaker[1];
    const Vector p1 = Vector::Zero(kFrameDims), p2 = Vector::Constant(kFrameDims, 1.5);
    auto run = [&](const ReactionModel & m, const Vector & past, std::int64_t k) {
      std::mt19937_64 rng(5);
      return sample_window(m, win, k, past, schedule, g, rng).final_state();
    };
    CHECK(run(model, p1, 1) != run(model, p2, 1));
    CHECK(run(model, p1, 1) != run(model, p1, 2));
    CHECK(run(model, p1, 1) == run(model, p1, 1));
    const auto vanilla = model.vanilla();
    CHECK_FALSE(vanilla.config().use_history);
    CHECK_FALSE(vanilla.config().use_timestamp);
    CHECK(run(vanilla, p1, 1) == run(vanilla, p2, 1));
    CHECK(run(vanilla, p1, 1) == run(vanilla, p1, 2));
    CHECK(run(vanilla, p1, 1) != run(model, p1, 1));
  }

  TEST_CASE("generate_session")
  {
    const auto corpus = tiny_corpus();
    const auto model = ReactionModel::create(tiny_config(), corpus, 7);
    auto g = quick_gen();
    const auto out = generate_session(corpus[0].speaker, model, g);
    REQUIRE(out.size() == 3);
    for (const auto & m : out) {
      CHECK(m.rows() == corpus[0].frames());
      CHECK(m.cols() == kFrameDims);
      CHECK(m.leftCols(kExprDims).minCoeff() >= 0.0);
      CHECK(m.leftCols(kExprDims).maxCoeff() <= 1.0);
    }
    CHECK(out[0] != out[1]);
    const auto again = generate_session(corpus[0].speaker, model, g);
    g.jobs = 3;
    const auto parallel = generate_session(corpus[0].speaker, model, g);
    for (std::size_t m = 0; m < out.size(); ++m) {
      CHECK(again[m] == out[m]);
      CHECK(parallel[m] == out[m]);
    }
    g.seed = 22;
    CHECK(generate_session(corpus[0].speaker, model, g)[0] != out[0]);

    g = quick_gen();
    g.solver = SolverKind::Sde2M;
    g.eta = 0.0;
    const auto sde0 = generate_session(corpus[0].speaker, model, g);
    g.solver = SolverKind::Ode2M;
    CHECK(generate_session(corpus[0].speaker, model, g)[1] == sde0[1]);

    auto gap = corpus[0].speaker;
    gap.erase(gap.begin() + 1);
    CHECK_THROWS_AS(generate_session(gap, model, quick_gen()), InputError);
    CHECK_THROWS_AS(generate_session({}, model, quick_gen()), InputError);
  }

  TEST_CASE("evaluation helpers")
  {
    Matrix seq = Matrix::Zero(8, kFrameDims);
    seq.bottomRows(4).col(0).setConstant(3.0);
    CHECK(mean_boundary_jump(seq, 4) == 3.0);
    CHECK(mean_boundary_jump(seq, 8) == 0.0);
    CHECK(mean_symmetric_gap(seq, AUPairRegistry::builtin()) >= 0.0);

    const auto corpus = tiny_corpus();
    std::vector<std::vector<Matrix>> gen;
    for (const auto & s : corpus) gen.push_back(s.listeners);
    const auto r = score_generation(corpus, gen);
    CHECK(r.frcorr == doctest::Approx(1.0));
    CHECK(r.fcd < 1e-6);
    CHECK(std::isfinite(r.frdvs));
    CHECK(std::isnan(score_generation({corpus[0]}, {{corpus[0].listeners[0]}}).frdiv));

    const auto model = ReactionModel::create(tiny_config(), corpus, 7);
    auto g = quick_gen();
    g.m_samples = 2;
    std::vector<std::vector<Matrix>> produced;
    const auto e = evaluate_generation(model, corpus, g, &produced);
    REQUIRE(produced.size() == 2);
    // session i uses session_seed(seed, i)
    g.seed = session_seed(21, 1);
    CHECK(generate_session(corpus[1].speaker, model, g)[0] == produced[1][0]);
    CHECK(e.frdiv > 0.0);
  }
}
