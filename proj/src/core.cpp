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

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace reactgen
{

namespace
{

// ARKit blendshape order (alphabetical, as Apple documents it), then pose.
constexpr std::array<std::string_view, kFrameDims> kNames = {
  "browDownLeft",       "browDownRight",       "browInnerUp",      "browOuterUpLeft",
  "browOuterUpRight",   "cheekPuff",           "cheekSquintLeft",  "cheekSquintRight",
  "eyeBlinkLeft",       "eyeBlinkRight",       "eyeLookDownLeft",  "eyeLookDownRight",
  "eyeLookInLeft",      "eyeLookInRight",      "eyeLookOutLeft",   "eyeLookOutRight",
  "eyeLookUpLeft",      "eyeLookUpRight",      "eyeSquintLeft",    "eyeSquintRight",
  "eyeWideLeft",        "eyeWideRight",        "jawForward",       "jawLeft",
  "jawOpen",            "jawRight",            "mouthClose",       "mouthDimpleLeft",
  "mouthDimpleRight",   "mouthFrownLeft",      "mouthFrownRight",  "mouthFunnel",
  "mouthLeft",          "mouthLowerDownLeft",  "mouthLowerDownRight", "mouthPressLeft",
  "mouthPressRight",    "mouthPucker",         "mouthRight",       "mouthRollLower",
  "mouthRollUpper",     "mouthShrugLower",     "mouthShrugUpper",  "mouthSmileLeft",
  "mouthSmileRight",    "mouthStretchLeft",    "mouthStretchRight", "mouthUpperUpLeft",
  "mouthUpperUpRight",  "noseSneerLeft",       "noseSneerRight",   "tongueOut",
  "angleX",             "angleY",              "angleZ",           "transX",
  "transY",             "transZ",
};

bool iequals(std::string_view a, std::string_view b)
{
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

Matrix concat_rows(const std::vector<SpeakerWindow> & windows, bool audio)
{
  if (windows.empty()) return {};
  const auto & first = audio ? windows.front().audio.data : windows.front().face.data;
  Matrix out(first.rows() * static_cast<Eigen::Index>(windows.size()), first.cols());
  Eigen::Index row = 0;
  for (const auto & w : windows) {
    const auto & block = audio ? w.audio.data : w.face.data;
    out.middleRows(row, block.rows()) = block;
    row += block.rows();
  }
  return out;
}

}  // namespace

std::string_view frame_name(int index)
{
  if (index < 0 || index >= kFrameDims) {
    throw std::out_of_range("frame index " + std::to_string(index) + " outside [0, 58)");
  }
  return kNames[static_cast<std::size_t>(index)];
}

std::optional<int> frame_index(std::string_view name)
{
  for (int i = 0; i < kFrameDims; ++i) {
    if (iequals(kNames[static_cast<std::size_t>(i)], name)) return i;
  }
  return std::nullopt;
}

Vector ReactionFrame::flatten() const
{
  Vector v(kFrameDims);
  v << expr, pose;
  return v;
}

ReactionFrame ReactionFrame::from_flat(const Eigen::Ref<const Vector> & v)
{
  if (v.size() != kFrameDims) {
    throw DimensionError("reaction frame needs 58 values, got " + std::to_string(v.size()));
  }
  ReactionFrame f;
  f.expr = v.head<kExprDims>();
  f.pose = v.tail<kPoseDims>();
  return f;
}

Matrix Session::speaker_face() const { return concat_rows(speaker, false); }
Matrix Session::speaker_audio() const { return concat_rows(speaker, true); }

bool operator==(const Session & a, const Session & b)
{
  if (a.session_id != b.session_id || a.window != b.window) return false;
  if (a.speaker.size() != b.speaker.size() || a.listeners.size() != b.listeners.size()) {
    return false;
  }
  auto same = [](const Matrix & x, const Matrix & y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  for (std::size_t k = 0; k < a.speaker.size(); ++k) {
    const auto & sa = a.speaker[k];
    const auto & sb = b.speaker[k];
    if (sa.face.start_index != sb.face.start_index || sa.audio.start_index != sb.audio.start_index) {
      return false;
    }
    if (!same(sa.face.data, sb.face.data) || !same(sa.audio.data, sb.audio.data)) return false;
  }
  for (std::size_t l = 0; l < a.listeners.size(); ++l) {
    if (!same(a.listeners[l], b.listeners[l])) return false;
  }
  return true;
}

std::string_view to_string(SolverKind kind)
{
  switch (kind) {
    case SolverKind::Ode2M:
      return "ode";
    case SolverKind::Sde2M:
      return "sde";
    case SolverKind::EulerReference:
      return "euler";
  }
  return "?";
}

SolverKind solver_from_string(std::string_view name)
{
  if (name == "ode" || name == "ode_2m") return SolverKind::Ode2M;
  if (name == "sde" || name == "sde_2m") return SolverKind::Sde2M;
  if (name == "euler" || name == "euler_reference") return SolverKind::EulerReference;
  throw ConfigError("unknown solver '" + std::string(name) + "'");
}

void GenerationConfig::validate() const
{
  if (steps < 2) throw ConfigError("steps must be >= 2 for the multistep solvers");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  if (!(guidance_scale >= 0.0)) throw ConfigError("guidance scale must be >= 0");
  if (m_samples < 1) throw ConfigError("m_samples must be >= 1");
  if (constraint_gate_step < 0) throw ConfigError("constraint gate step must be >= 0");
  if (euler_substeps != 0 && euler_substeps < steps) {
    throw ConfigError("euler substeps must be >= steps");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::string Violation::to_string() const
{
  std::ostringstream os;
  os << field;
  if (index >= 0) os << '[' << index << ']';
  os << ": " << rule;
  return os.str();
}

std::vector<Violation> validate_session(const Session & s, bool check_decoded_ranges)
{
  std::vector<Violation> out;
  const int w = s.window;
  if (w <= 0) {
    out.push_back({"window", -1, "window size must be positive"});
    return out;
  }
  if (s.session_id.empty()) out.push_back({"session_id", -1, "must be non-empty"});
  if (s.speaker.empty()) out.push_back({"speaker", -1, "at least one speaker window required"});

  std::int64_t audio_dims = -1;
  for (std::size_t k = 0; k < s.speaker.size(); ++k) {
    const auto & sw = s.speaker[k];
    const auto idx = static_cast<std::int64_t>(k);
    if (sw.face.frames() != w) out.push_back({"speaker.face", idx, "frames != w"});
    if (sw.face.dims() != kFrameDims) out.push_back({"speaker.face", idx, "dims != 58"});
    if (sw.audio.frames() != w) out.push_back({"speaker.audio", idx, "frames != w"});
    if (audio_dims < 0) audio_dims = sw.audio.dims();
    if (sw.audio.dims() != audio_dims || audio_dims <= 0) {
      out.push_back({"speaker.audio", idx, "audio dims inconsistent"});
    }
    if (sw.face.start_index != sw.audio.start_index) {
      out.push_back({"speaker", idx, "face and audio start_index differ"});
    }
    if (sw.face.start_index % w != 0) {
      out.push_back({"speaker.face", idx, "start_index not a multiple of w"});
    }
    if (sw.face.start_index != idx * w) {
      out.push_back({"speaker.face", idx, "windows not contiguous"});
    }
    if (!sw.face.data.allFinite() || !sw.audio.data.allFinite()) {
      out.push_back({"speaker", idx, "non-finite value"});
    }
  }

  const std::int64_t expected_h = static_cast<std::int64_t>(s.speaker.size()) * w;
  std::int64_t first_h = -1;
  for (std::size_t l = 0; l < s.listeners.size(); ++l) {
    const auto & m = s.listeners[l];
    const auto idx = static_cast<std::int64_t>(l);
    if (m.cols() != kFrameDims) out.push_back({"listeners", idx, "dims != 58"});
    if (m.rows() % w != 0) out.push_back({"listeners", idx, "H not multiple of w"});
    if (first_h < 0) first_h = m.rows();
    if (m.rows() != first_h) out.push_back({"listeners", idx, "listener lengths differ"});
    if (m.rows() != expected_h) {
      out.push_back({"listeners", idx, "H != speaker windows * w"});
    }
    if (!check_decoded_ranges || m.cols() != kFrameDims) continue;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < kFrameDims; ++c) {
        const double v = m(r, c);
        double lo = 0.0, hi = 1.0;
        if (c >= kExprDims && c < kExprDims + 3) {
          lo = -std::numbers::pi / 2;
          hi = std::numbers::pi / 2;
        } else if (c >= kExprDims + 3) {
          lo = -1.0;
        }
        if (!(v >= lo && v <= hi)) {
          std::ostringstream rule;
          rule << "frame " << r << " coefficient " << c << " (" << frame_name(c) << ") = " << v
               << " outside [" << lo << ", " << hi << "]";
          out.push_back({"listeners", idx, rule.str()});
        }
      }
    }
  }
  return out;
}

void clamp_to_valid(Eigen::Ref<Matrix> frames)
{
  if (frames.cols() != kFrameDims) throw DimensionError("clamp_to_valid expects 58 columns");
  constexpr double half_pi = std::numbers::pi / 2;
  frames.leftCols(kExprDims) = frames.leftCols(kExprDims).cwiseMax(0.0).cwiseMin(1.0);
  frames.middleCols(kExprDims, 3) = frames.middleCols(kExprDims, 3).cwiseMax(-half_pi).cwiseMin(half_pi);
  frames.rightCols(3) = frames.rightCols(3).cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace reactgen
