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

#ifndef REACTGEN_TESTS_TEST_UTIL_HPP_
#define REACTGEN_TESTS_TEST_UTIL_HPP_

#include "reactgen/core.hpp"
#include "reactgen/score_net.hpp"

#include <random>

namespace reactgen::testing
{

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 & rng, double scale = 1.0)
{
  std::normal_distribution<double> normal(0.0, scale);
  return Matrix::NullaryExpr(rows, cols, [&] { return normal(rng); });
}

inline ScoreNetConfig tiny_config()
{
  ScoreNetConfig c;
  c.window = 4;
  c.audio_dims = 4;
  c.hidden = 8;
  c.embed = 8;
  c.blocks = 2;
  c.groups = 2;
  return c;
}

inline ConditionBundle random_condition(const ScoreNetConfig & c, std::mt19937_64 & rng, const NoiseLevel & level)
{
  ConditionBundle b;
  b.speaker_face = random_matrix(c.window, kFrameDims, rng);
  b.speaker_audio = random_matrix(c.window, c.audio_dims, rng);
  b.step = level;
  b.timestamp = 3 * c.window;
  b.past_frame = random_matrix(kFrameDims, 1, rng, 0.5);
  return b;
}

// Valid session: `windows` windows of width w, listener values inside the decoded ranges.
inline Session make_session(int windows, int listeners, int w, int audio_dims, std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  Session s;
  s.session_id = "test-session";
  s.window = w;
  for (int k = 0; k < windows; ++k) {
    SpeakerWindow sw;
    sw.face = {Matrix::NullaryExpr(w, kFrameDims, [&] { return unit(rng); }), static_cast<std::int64_t>(k) * w};
    sw.audio = {random_matrix(w, audio_dims, rng), static_cast<std::int64_t>(k) * w};
    s.speaker.push_back(sw);
  }
  for (int l = 0; l < listeners; ++l) {
    s.listeners.push_back(Matrix::NullaryExpr(windows * w, kFrameDims, [&] { return unit(rng) - 0.05; }));
  }
  return s;
}

}  // namespace reactgen::testing

#endif  // REACTGEN_TESTS_TEST_UTIL_HPP_
