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

#include "reactgen/core.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <numbers>
#include <set>

using namespace reactgen;
using reactgen::testing::make_session;

TEST_SUITE("core")
{
  TEST_CASE("frame names")
  {
    CHECK(frame_name(52) == "angleX");
    CHECK(frame_name(55) == "transX");
    CHECK(frame_name(57) == "transZ");
    CHECK_THROWS_AS(frame_name(58), std::out_of_range);
    CHECK_THROWS_AS(frame_name(-1), std::out_of_range);

    const auto brow = frame_index("browInnerUp");
    REQUIRE(brow.has_value());
    CHECK(frame_name(*brow) == "browInnerUp");
    CHECK(frame_index("MouthLeft") == frame_index("mouthLeft"));
    CHECK_FALSE(frame_index("noSuchShape").has_value());
  }

  TEST_CASE("name table is a bijection")
  {
    std::set<std::string> names;
    for (int i = 0; i < kFrameDims; ++i) {
      const std::string n(frame_name(i));
      names.insert(n);
      CHECK(frame_index(n) == i);
    }
    CHECK(names.size() == static_cast<std::size_t>(kFrameDims));
  }

  TEST_CASE("reaction frame flatten round trip")
  {
    std::mt19937_64 rng(1);
    const Vector v = reactgen::testing::random_matrix(kFrameDims, 1, rng);
    const auto f = ReactionFrame::from_flat(v);
    CHECK(f.flatten() == v);
    CHECK(f.pose(0) == v(52));
    CHECK_THROWS_AS(ReactionFrame::from_flat(Vector::Zero(57)), DimensionError);
  }

  TEST_CASE("validate_session")
  {
    std::mt19937_64 rng(2);
    SUBCASE("well-formed")
    {
      const auto s = make_session(2, 1, 16, 4, rng);
      CHECK(validate_session(s).empty());
    }
    SUBCASE("H not a multiple of w")
    {
      auto s = make_session(2, 1, 16, 4, rng);
      s.listeners[0].conservativeResize(30, Eigen::NoChange);
      const auto v = validate_session(s);
      bool found = false;
      for (const auto & x : v) found = found || x.rule == "H not multiple of w";
      CHECK(found);
    }
    SUBCASE("out-of-range coefficient")
    {
      auto s = make_session(2, 1, 16, 4, rng);
      s.listeners[0](5, 7) = 1.3;
      const auto v = validate_session(s);
      REQUIRE(v.size() == 1);
      CHECK(v[0].field == "listeners");
      CHECK(v[0].rule.find("frame 5 coefficient 7") != std::string::npos);
      CHECK(validate_session(s, false).empty());
    }
    SUBCASE("window tiling")
    {
      auto s = make_session(3, 1, 8, 4, rng);
      s.speaker[1].face.start_index = 9;
      s.speaker[1].audio.start_index = 9;
      CHECK_FALSE(validate_session(s).empty());
    }
    SUBCASE("listener lengths differ")
    {
      auto s = make_session(2, 2, 8, 4, rng);
      s.listeners[1] = s.listeners[1].topRows(8).eval();
      CHECK_FALSE(validate_session(s).empty());
    }
  }

  TEST_CASE("clamp_to_valid")
  {
    Matrix m = Matrix::Constant(2, kFrameDims, 5.0);
    m.row(1).setConstant(-5.0);
    clamp_to_valid(m);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 0) == 0.0);
    CHECK(m(0, 52) == doctest::Approx(std::numbers::pi / 2));
    CHECK(m(1, 53) == doctest::Approx(-std::numbers::pi / 2));
    CHECK(m(0, 57) == 1.0);
    CHECK(m(1, 57) == -1.0);
    Matrix bad(2, 5);
    CHECK_THROWS_AS(clamp_to_valid(bad), DimensionError);
  }

  TEST_CASE("generation config")
  {
    GenerationConfig g;
    CHECK(g.steps == 50);
    CHECK(g.eta == 1.0);
    CHECK(g.guidance_scale == 1.5);
    CHECK(g.constraint_gate_step == 5);
    CHECK_NOTHROW(g.validate());
    g.steps = 1;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = {};
    g.eta = -0.1;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = {};
    g.m_samples = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    CHECK(solver_from_string("ode_2m") == SolverKind::Ode2M);
    CHECK(solver_from_string("sde") == SolverKind::Sde2M);
    CHECK(solver_from_string("euler_reference") == SolverKind::EulerReference);
    CHECK_THROWS_AS(solver_from_string("rk4"), ConfigError);
  }
}
