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

#include "reactgen/data.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/QR>

#include <map>
#include <numbers>
#include <random>
#include <set>

namespace reactgen
{

namespace
{

constexpr int kMaxLag = 8;
constexpr int kCrossfade = 4;
constexpr int kBasisRank = 12;
constexpr double kExclusiveMargin = 0.25;
constexpr double kCoOccurMargin = 0.1;

using Rng = std::mt19937_64;

double uniform(Rng & rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng & rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Sum of 2-4 random-phase sinusoids, redrawn every 2-4 windows with a short crossfade.
Vector regime_signal(int frames, int window, Rng & rng)
{
  struct Wave
  {
    double freq, phase, amp;
  };
  auto draw_regime = [&] {
    std::vector<Wave> waves(static_cast<std::size_t>(uniform_int(rng, 2, 4)));
    const double norm = 1.0 / std::sqrt(static_cast<double>(waves.size()));
    for (auto & wv : waves) {
      wv = {uniform(rng, 0.02, 0.1), uniform(rng, 0.0, 2.0 * std::numbers::pi), uniform(rng, 0.7, 1.3) * norm};
    }
    return waves;
  };
  auto eval = [](const std::vector<Wave> & waves, int t) {
    double v = 0.0;
    for (const auto & wv : waves) v += wv.amp * std::sin(2.0 * std::numbers::pi * wv.freq * t + wv.phase);
    return v;
  };

  Vector out(frames);
  std::vector<Wave> prev;
  std::vector<Wave> cur = draw_regime();
  int regime_start = 0;
  int regime_end = window * uniform_int(rng, 2, 4);
  for (int t = 0; t < frames; ++t) {
    if (t == regime_end) {
      prev = std::move(cur);
      cur = draw_regime();
      regime_start = t;
      regime_end = t + window * uniform_int(rng, 2, 4);
    }
    double v = eval(cur, t);
    if (!prev.empty() && t - regime_start < kCrossfade) {
      const double a = static_cast<double>(t - regime_start + 1) / (kCrossfade + 1);
      v = a * v + (1.0 - a) * eval(prev, t);
    }
    out(t) = v;
  }
  return out;
}

// Centers the columns and, when there are enough rows, makes them exactly orthogonal with
// unit population variance. Signs follow the input so the result stays close to it.
Matrix orthonormal_columns(Matrix m)
{
  m.rowwise() -= m.colwise().mean();
  const auto rows = m.rows();
  if (rows <= m.cols()) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double sd = std::sqrt(m.col(c).squaredNorm() / static_cast<double>(rows));
      if (sd > 0.0) m.col(c) /= sd;
    }
    return m;
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, m.cols());
  const Matrix r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return std::sqrt(static_cast<double>(rows)) * q;
}

// Maps the right-hand member of every symmetric pair onto its left-hand partner.
std::vector<int> representatives(const AUPairRegistry & reg)
{
  std::vector<int> rep(kFrameDims);
  for (int c = 0; c < kFrameDims; ++c) rep[static_cast<std::size_t>(c)] = c;
  for (const auto & [a, b] : reg.symmetric) rep[static_cast<std::size_t>(b)] = a;
  return rep;
}

std::vector<IndexPair> representative_pairs(const std::vector<IndexPair> & pairs, const std::vector<int> & rep)
{
  std::set<IndexPair> out;
  for (const auto & [a, b] : pairs) {
    const int ra = rep[static_cast<std::size_t>(a)];
    const int rb = rep[static_cast<std::size_t>(b)];
    if (ra != rb) out.insert({ra, rb});
  }
  return {out.begin(), out.end()};
}

// Unit loading vector per expression channel (columns) such that exclusive pairs point
// apart and co-occurring pairs together. Any signal of the form B * U with orthonormal B
// then has exactly these pairwise correlation signs.
Matrix au_loadings(const std::vector<IndexPair> & exclusive, const std::vector<IndexPair> & co_occur, Rng & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix u = Matrix::NullaryExpr(kBasisRank, kExprDims, [&] { return normal(rng); });
  u.colwise().normalize();
  for (int it = 0; it < 3000; ++it) {
    Matrix g = Matrix::Zero(kBasisRank, kExprDims);
    for (const auto & [a, b] : exclusive) {
      const double c = u.col(a).dot(u.col(b));
      if (c > -kExclusiveMargin) {
        g.col(a) += (c + kExclusiveMargin) * u.col(b);
        g.col(b) += (c + kExclusiveMargin) * u.col(a);
      }
    }
    for (const auto & [a, b] : co_occur) {
      const double c = u.col(a).dot(u.col(b));
      if (c < kCoOccurMargin) {
        g.col(a) -= (kCoOccurMargin - c) * u.col(b);
        g.col(b) -= (kCoOccurMargin - c) * u.col(a);
      }
    }
    if (g.squaredNorm() == 0.0) break;
    u -= 0.2 * g;
    u.colwise().normalize();
  }
  return u;
}

}  // namespace

double engagement_trend(std::int64_t frame)
{
  return 0.12 * std::tanh(static_cast<double>(frame) / 160.0) - 0.04;
}

std::vector<SynthSession> synth_corpus_detailed(const SynthConfig & cfg)
{
  if (cfg.sessions < 1) throw ConfigError("synth: sessions must be >= 1");
  if (cfg.listeners_per_session < 2) throw ConfigError("synth: needs >= 2 listeners per session");
  if (cfg.window < 1 || cfg.windows_per_session < 1) throw ConfigError("synth: bad window config");
  if (cfg.audio_dims < 4) throw ConfigError("synth: audio_dims must be >= 4");

  const auto registry = AUPairRegistry::builtin();
  const auto rep = representatives(registry);
  const auto exclusive = representative_pairs(registry.mutually_exclusive, rep);
  const auto co_occur = representative_pairs(registry.co_occurred, rep);
  Rng structure_rng(cfg.seed);
  const Matrix loadings = au_loadings(exclusive, co_occur, structure_rng);

  // Engagement and prosody couplings land on channels outside every exclusive pair.
  const int cheek = *frame_index("cheekSquintLeft");
  const int dimple = *frame_index("mouthDimpleLeft");
  const int jaw_forward = *frame_index("jawForward");
  const int angle_x = kExprDims;

  const int w = cfg.window;
  const int frames = w * cfg.windows_per_session;
  const int padded = frames + kMaxLag;
  const int env_dims = cfg.audio_dims / 2;
  const int prosody_dims = cfg.audio_dims - env_dims;

  std::vector<SynthSession> out;
  for (int s = 0; s < cfg.sessions; ++s) {
    Rng rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(s + 1)));

    // Speaker deviations on the padded timeline; row t is frame t - kMaxLag.
    Matrix basis_raw(padded, kBasisRank);
    for (int j = 0; j < kBasisRank; ++j) basis_raw.col(j) = regime_signal(padded, w, rng);
    const Matrix basis = orthonormal_columns(basis_raw);
    Vector amp(kFrameDims), base(kFrameDims);
    Matrix dev(padded, kFrameDims);
    for (int c = 0; c < kFrameDims; ++c) {
      if (rep[static_cast<std::size_t>(c)] != c) continue;
      if (c < kExprDims) {
        amp(c) = uniform(rng, 0.05, 0.08);
        base(c) = uniform(rng, 0.3, 0.45);
        dev.col(c) = amp(c) * (basis * loadings.col(c));
      } else {
        amp(c) = c < kExprDims + 3 ? 0.2 : 0.1;
        base(c) = 0.0;
        dev.col(c) = amp(c) * regime_signal(padded, w, rng);
      }
    }
    for (int c = 0; c < kFrameDims; ++c) {
      const int r = rep[static_cast<std::size_t>(c)];
      dev.col(c) = dev.col(r);
      base(c) = base(r);
      amp(c) = amp(r);
    }
    Matrix face_padded = dev.rowwise() + base.transpose();
    clamp_to_valid(face_padded);

    // Audio: low-passed mouth-activity envelope + independent prosody channels.
    Matrix audio_padded(padded, cfg.audio_dims);
    {
      Vector energy = Vector::Zero(padded);
      for (int c = 0; c < kExprDims; ++c) {
        const auto name = frame_name(c);
        if (name.substr(0, 5) == "mouth" || name == "jawOpen") energy += dev.col(c).cwiseAbs();
      }
      energy /= energy.maxCoeff() > 0.0 ? energy.maxCoeff() : 1.0;
      for (int k = 0; k < env_dims; ++k) {
        const double beta = 0.5 + 0.45 * k / std::max(1, env_dims - 1);
        double state = energy(0);
        for (int t = 0; t < padded; ++t) {
          state = beta * state + (1.0 - beta) * energy(t);
          audio_padded(t, k) = state;
        }
      }
      std::normal_distribution<double> noise(0.0, 0.05);
      for (int k = 0; k < prosody_dims; ++k) {
        const Vector p = regime_signal(padded, w, rng);
        for (int t = 0; t < padded; ++t) audio_padded(t, env_dims + k) = p(t) + noise(rng);
      }
    }
    const auto prosody = [&](int k) { return audio_padded.col(env_dims + (k % prosody_dims)); };

    SynthSession ss;
    Session & session = ss.session;
    session.session_id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(s);
    session.window = w;
    const Matrix face = face_padded.bottomRows(frames);
    const Matrix audio = audio_padded.bottomRows(frames);
    for (int k = 0; k < cfg.windows_per_session; ++k) {
      SpeakerWindow sw;
      sw.face = {face.middleRows(k * w, w), static_cast<std::int64_t>(k) * w};
      sw.audio = {audio.middleRows(k * w, w), static_cast<std::int64_t>(k) * w};
      session.speaker.push_back(std::move(sw));
    }

    for (int l = 0; l < cfg.listeners_per_session; ++l) {
      ListenerStyle style;
      style.lag = uniform_int(rng, 2, kMaxLag);
      const int src0 = kMaxLag - style.lag;

      // Lagged speaker basis plus a personal idle basis, re-orthonormalized on the listener's
      // own span so the loading structure carries over exactly.
      Matrix joint(frames, 2 * kBasisRank);
      joint.leftCols(kBasisRank) = basis.middleRows(src0, frames);
      for (int j = 0; j < kBasisRank; ++j) joint.col(kBasisRank + j) = regime_signal(frames, w, rng);
      const Matrix own = orthonormal_columns(joint);

      style.gain.resize(kFrameDims);
      Vector idle_amp(kFrameDims), offset(kFrameDims);
      for (int c = 0; c < kFrameDims; ++c) {
        style.gain(c) = uniform(rng, 0.3, 1.2);
        idle_amp(c) = 0.01;
        offset(c) = c < kExprDims ? uniform(rng, -0.05, 0.05) : 0.0;
      }
      Matrix listener(frames, kFrameDims);
      for (int c = 0; c < kFrameDims; ++c) {
        const int r = rep[static_cast<std::size_t>(c)];
        if (r != c) continue;
        if (c < kExprDims) {
          const Vector u = loadings.col(c);
          listener.col(c) = style.gain(c) * amp(c) * (own.leftCols(kBasisRank) * u) +
                            idle_amp(c) * (own.rightCols(kBasisRank) * u);
        } else {
          const double f = uniform(rng, 0.01, 0.04), ph = uniform(rng, 0.0, 2.0 * std::numbers::pi);
          for (int t = 0; t < frames; ++t) {
            listener(t, c) = style.gain(c) * dev(src0 + t, c) +
                             idle_amp(c) * std::sin(2.0 * std::numbers::pi * f * t + ph);
          }
        }
        listener.col(c).array() += base(c) + offset(c);
      }
      for (int t = 0; t < frames; ++t) {
        const int src = src0 + t;
        listener(t, angle_x) += 0.25 * prosody(0)(src);
        listener(t, jaw_forward) += 0.05 * prosody(1)(src);
        const double engaged = engagement_trend(t) + 0.03 * prosody(2)(src);
        listener(t, cheek) += engaged;
        listener(t, dimple) += 0.5 * engaged;
      }
      for (int c = 0; c < kFrameDims; ++c) {
        const int r = rep[static_cast<std::size_t>(c)];
        listener.col(c) = listener.col(r);
        style.gain(c) = style.gain(r);
      }
      clamp_to_valid(listener);
      session.listeners.push_back(std::move(listener));
      ss.styles.push_back(std::move(style));
    }
    out.push_back(std::move(ss));
  }
  return out;
}

std::vector<Session> synth_corpus(const SynthConfig & config)
{
  std::vector<Session> out;
  for (auto & s : synth_corpus_detailed(config)) out.push_back(std::move(s.session));
  return out;
}

}  // namespace reactgen
