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

#ifndef REACTGEN_CORE_HPP_
#define REACTGEN_CORE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reactgen
{

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Frame layout: 52 ARKit expression coefficients followed by 3 head angles and 3 translations.
inline constexpr int kExprDims = 52;
inline constexpr int kPoseDims = 6;
inline constexpr int kFrameDims = kExprDims + kPoseDims;
inline constexpr int kDefaultWindow = 16;
inline constexpr int kDefaultAudioDims = 16;

// Error kinds. Each maps to one failure class named in the module contracts.
struct ConfigError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct DimensionError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};
struct InputError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct StateError : std::logic_error
{
  using std::logic_error::logic_error;
};
struct NumericError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error
{
  ParseError(const std::string & what, std::size_t line_no)
  : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no)
  {
  }
  std::size_t line;
};
struct ValidationError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Canonical name of coefficient `index` (0..57). Throws std::out_of_range otherwise.
std::string_view frame_name(int index);

/// Inverse of frame_name. Matching is case-insensitive so table spellings like
/// "MouthLeft" resolve to "mouthLeft".
std::optional<int> frame_index(std::string_view name);

/// One time step of listener state.
struct ReactionFrame
{
  Eigen::Matrix<double, kExprDims, 1> expr = Eigen::Matrix<double, kExprDims, 1>::Zero();
  Eigen::Matrix<double, kPoseDims, 1> pose = Eigen::Matrix<double, kPoseDims, 1>::Zero();

  Vector flatten() const;
  static ReactionFrame from_flat(const Eigen::Ref<const Vector> & v);
};

/// A w-frame block of coefficients whose first frame has global index start_index.
struct WindowTensor
{
  Matrix data;
  std::int64_t start_index = 0;

  int frames() const { return static_cast<int>(data.rows()); }
  int dims() const { return static_cast<int>(data.cols()); }
};

struct SpeakerWindow
{
  WindowTensor face;
  WindowTensor audio;
};

struct Session
{
  std::string session_id;
  int window = kDefaultWindow;
  std::vector<SpeakerWindow> speaker;
  std::vector<Matrix> listeners;  // each H x 58

  int frames() const { return static_cast<int>(speaker.size()) * window; }
  /// Concatenated speaker face (H x 58).
  Matrix speaker_face() const;
  /// Concatenated speaker audio (H x A).
  Matrix speaker_audio() const;
};

bool operator==(const Session & a, const Session & b);

enum class SolverKind { Ode2M, Sde2M, EulerReference };

std::string_view to_string(SolverKind kind);
SolverKind solver_from_string(std::string_view name);

struct GenerationConfig
{
  int steps = 50;
  SolverKind solver = SolverKind::Sde2M;
  double eta = 1.0;
  double guidance_scale = 1.5;
  int m_samples = 1;
  std::uint64_t seed = 0;
  int constraint_gate_step = 5;
  int euler_substeps = 0;  // 0 selects 20 * steps for the reference integrator
  int jobs = 1;

  /// Throws ConfigError when an invariant is broken.
  void validate() const;
};

struct Violation
{
  std::string field;
  std::int64_t index = -1;
  std::string rule;

  std::string to_string() const;
};

/// Diagnostic check of every Session invariant. Never throws.
/// `check_decoded_ranges` enables the [0,1] / pose bound checks on listener frames.
std::vector<Violation> validate_session(const Session & session, bool check_decoded_ranges = true);

/// Clamp a decoded H x 58 block to valid coefficient ranges.
void clamp_to_valid(Eigen::Ref<Matrix> frames);

}  // namespace reactgen

#endif  // REACTGEN_CORE_HPP_
