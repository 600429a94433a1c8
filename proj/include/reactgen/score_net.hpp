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

#ifndef REACTGEN_SCORE_NET_HPP_
#define REACTGEN_SCORE_NET_HPP_

#include "reactgen/core.hpp"
#include "reactgen/schedule.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reactgen
{

struct ScoreNetConfig
{
  int window = kDefaultWindow;
  int audio_dims = kDefaultAudioDims;
  int hidden = 128;
  int embed = 64;
  int blocks = 2;
  int groups = 8;

  // Conditioning switches used by the ablation harness.
  bool use_timestamp = true;
  bool use_face = true;
  bool use_audio = true;
  bool use_history = true;

  int speaker_dims() const { return kFrameDims + audio_dims; }
  void validate() const;
  bool operator==(const ScoreNetConfig &) const = default;
};

/// A named parameter block and its same-shape gradient buffer.
struct ParamBlock
{
  std::string name;
  Matrix value;
  Matrix grad;
};

/// The trainable parameter tree. Block layout is a pure function of the config.
class DenoiserParams
{
public:
  struct Lstm
  {
    int wx, wh, bias, init_h_w, init_h_b, init_c_w, init_c_b;
  };
  struct ResBlock
  {
    int scale_w, scale_b, shift_w, shift_b, lin1_w, lin1_b, lin2_w, lin2_b;
  };
  struct Attention
  {
    int q_w, q_b, k_w, k_b, v_w, v_b, o_w, o_b, null_cond;
  };
  struct Layout
  {
    Lstm in_lstm;
    int step_w, step_b, time_w, time_b;
    std::vector<ResBlock> res;
    Attention attn;
    Lstm out_lstm;
    int head_w, head_b, skip_w, skip_t, skip_tw;
  };

  DenoiserParams() = default;
  /// All blocks zero-initialized.
  explicit DenoiserParams(const ScoreNetConfig & config);

  /// Scaled-Gaussian initialization (fan-in), gate/scale biases set so the net starts near identity.
  void init_random(std::uint64_t seed);
  void zero_grad();

  const ScoreNetConfig & config() const { return config_; }
  const Layout & layout() const { return layout_; }
  std::vector<ParamBlock> & blocks() { return blocks_; }
  const std::vector<ParamBlock> & blocks() const { return blocks_; }
  ParamBlock & block(std::string_view name);
  const ParamBlock & block(std::string_view name) const;
  Matrix & value(int i) { return blocks_[static_cast<std::size_t>(i)].value; }
  const Matrix & value(int i) const { return blocks_[static_cast<std::size_t>(i)].value; }
  Matrix & grad(int i) { return blocks_[static_cast<std::size_t>(i)].grad; }
  Eigen::Index parameter_count() const;

private:
  int add(std::string name, Eigen::Index rows, Eigen::Index cols);
  Lstm add_lstm(const std::string & prefix, int input_dims);

  ScoreNetConfig config_;
  Layout layout_{};
  std::vector<ParamBlock> blocks_;
};

/// Conditions for one window query.
struct ConditionBundle
{
  Matrix speaker_face;   // w x 58
  Matrix speaker_audio;  // w x A
  NoiseLevel step;
  std::int64_t timestamp = 0;  // global frame index h of the window's last frame + 1
  Vector past_frame;           // 58, zeros for the first window
  bool cond_dropped = false;   // face and audio dropped jointly
};

/// Activations recorded by forward for the reverse pass.
struct ForwardCache
{
  struct LstmTape
  {
    Matrix input;   // w x in
    Matrix gates;   // w x 4C, activated (i, f, g, o)
    Matrix cells;   // (w+1) x C, row 0 = c0
    Matrix hidden;  // (w+1) x C, row 0 = h0
    Matrix tanh_c;  // w x C
  };
  struct NormTape
  {
    Matrix normalized;  // w x C
    Vector inv_std;     // per group
    Vector scale, shift;
  };
  struct ResTape
  {
    Matrix input;
    NormTape norm;
    Matrix modulated;  // AdaGN output
    Matrix act1;       // SiLU(modulated)
    Matrix pre2;       // lin1 output
    Matrix act2;       // SiLU(pre2)
  };
  struct AttnTape
  {
    Matrix input;    // w x C (queries source)
    Matrix speaker;  // w x (58 + A) after masking / dropout
    Matrix q, k, v;
    Matrix weights;  // w x w
    Matrix context;  // weights * v
    bool dropped = false;
  };

  bool recorded = false;
  Vector past;
  Vector step_features, time_features;
  Vector step_pre, time_pre;
  Vector embedding;
  LstmTape in_lstm;
  std::vector<ResTape> res;
  AttnTape attn;
  LstmTape out_lstm;
  Matrix head;  // raw network output (velocity parameterization)
  Matrix skip_in;
  Matrix skip_mix;
  double alpha = 1.0, sigma = 1.0;
};

/// Sinusoidal positional features of `position` (dims must be even).
Vector sinusoidal_features(double position, int dims);

/// Per-group normalization over (frames x channels-in-group) followed by row-broadcast scale/shift.
/// Throws ConfigError when the channel count is not divisible by `groups`.
Matrix adaptive_group_norm(
  const Matrix & hidden, const Vector & scale, const Vector & shift, int groups,
  ForwardCache::NormTape * tape = nullptr);

/// Single-head causal scaled dot-product attention weights: rows are queries, entries j > i are 0.
Matrix causal_attention_weights(const Matrix & queries, const Matrix & keys);

/// The conditional score network. forward returns the score estimate for the noisy window.
///
/// The network head predicts the velocity target v = alpha * eps - sigma * x0; the score is
/// recovered as -(sigma * x_t + alpha * v) / sigma, which keeps the output bounded across
/// the whole noise range. Linear skips on (alpha / sigma) * x_t feed the head directly: one per
/// frame, one after a learned w x w mixing across frames.
Matrix score_forward(
  const Matrix & noisy_window, const ConditionBundle & cond, const DenoiserParams & params,
  ForwardCache * cache = nullptr);

/// Accumulates d(loss)/d(param) into the gradient buffers. Requires a recorded cache.
void score_backward(const Matrix & score_grad, const ForwardCache & cache, DenoiserParams & params);

struct AdamWHyper
{
  double lr = 1e-4;
  double beta1 = 0.95;
  double beta2 = 0.999;
  double weight_decay = 1e-3;
  double epsilon = 1e-8;
};

struct AdamWState
{
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;

  static AdamWState zeros_like(const DenoiserParams & params);
};

/// Decoupled-weight-decay Adam with bias correction. Increments state.step.
void adamw_step(DenoiserParams & params, AdamWState & state, const AdamWHyper & hyper);

}  // namespace reactgen

#endif  // REACTGEN_SCORE_NET_HPP_
