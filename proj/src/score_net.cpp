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

#include <cmath>
#include <limits>
#include <random>

namespace reactgen
{

namespace
{

constexpr double kNormEps = 1e-5;
constexpr double kStepPositionScale = 1000.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix silu(const Matrix & x)
{
  return x.unaryExpr([](double v) { return v * sigmoid(v); });
}

Matrix silu_grad(const Matrix & x)
{
  return x.unaryExpr([](double v) {
    const double s = sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

// Row-vector broadcast helpers for w x C activations.
Matrix affine_rows(const Matrix & x, const Matrix & weight, const Matrix & bias)
{
  Matrix out = x * weight.transpose();
  out.rowwise() += bias.col(0).transpose();
  return out;
}

void check_shape(const Matrix & m, Eigen::Index rows, Eigen::Index cols, const char * what)
{
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(
      std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
      ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

Matrix lstm_forward(
  const DenoiserParams::Lstm & ix, const DenoiserParams & p, const Matrix & input,
  const Vector & past, ForwardCache::LstmTape & tape)
{
  const Eigen::Index w = input.rows();
  const Eigen::Index c = p.value(ix.wh).cols();
  const Matrix & wh = p.value(ix.wh);

  tape.input = input;
  tape.gates.resize(w, 4 * c);
  tape.cells.resize(w + 1, c);
  tape.hidden.resize(w + 1, c);
  tape.tanh_c.resize(w, c);
  tape.hidden.row(0) = (p.value(ix.init_h_w) * past + p.value(ix.init_h_b)).transpose();
  tape.cells.row(0) = (p.value(ix.init_c_w) * past + p.value(ix.init_c_b)).transpose();

  const Matrix pre_in = affine_rows(input, p.value(ix.wx), p.value(ix.bias));
  for (Eigen::Index t = 0; t < w; ++t) {
    Eigen::RowVectorXd z = pre_in.row(t) + tape.hidden.row(t) * wh.transpose();
    auto gates = tape.gates.row(t);
    for (Eigen::Index j = 0; j < c; ++j) {
      gates(j) = sigmoid(z(j));                  // input
      gates(c + j) = sigmoid(z(c + j));          // forget
      gates(2 * c + j) = std::tanh(z(2 * c + j));  // candidate
      gates(3 * c + j) = sigmoid(z(3 * c + j));  // output
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      const double cell = gates(c + j) * tape.cells(t, j) + gates(j) * gates(2 * c + j);
      tape.cells(t + 1, j) = cell;
      tape.tanh_c(t, j) = std::tanh(cell);
      tape.hidden(t + 1, j) = gates(3 * c + j) * tape.tanh_c(t, j);
    }
  }
  return tape.hidden.bottomRows(w);
}

// Returns d(loss)/d(input).
Matrix lstm_backward(
  const DenoiserParams::Lstm & ix, DenoiserParams & p, const ForwardCache::LstmTape & tape,
  const Vector & past, const Matrix & d_out)
{
  const Eigen::Index w = d_out.rows();
  const Eigen::Index c = d_out.cols();
  const Matrix & wh = p.value(ix.wh);
  Matrix d_pre(w, 4 * c);
  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(c);
  Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(c);

  for (Eigen::Index t = w - 1; t >= 0; --t) {
    const auto gates = tape.gates.row(t);
    for (Eigen::Index j = 0; j < c; ++j) {
      const double ig = gates(j), fg = gates(c + j), gg = gates(2 * c + j), og = gates(3 * c + j);
      const double tc = tape.tanh_c(t, j);
      const double dh = d_out(t, j) + dh_next(j);
      const double dc = dc_next(j) + dh * og * (1.0 - tc * tc);
      d_pre(t, j) = dc * gg * ig * (1.0 - ig);
      d_pre(t, c + j) = dc * tape.cells(t, j) * fg * (1.0 - fg);
      d_pre(t, 2 * c + j) = dc * ig * (1.0 - gg * gg);
      d_pre(t, 3 * c + j) = dh * tc * og * (1.0 - og);
      dc_next(j) = dc * fg;
    }
    dh_next = d_pre.row(t) * wh;
  }

  p.grad(ix.wx) += d_pre.transpose() * tape.input;
  p.grad(ix.wh) += d_pre.transpose() * tape.hidden.topRows(w);
  p.grad(ix.bias) += d_pre.colwise().sum().transpose();
  p.grad(ix.init_h_w) += dh_next.transpose() * past.transpose();
  p.grad(ix.init_h_b) += dh_next.transpose();
  p.grad(ix.init_c_w) += dc_next.transpose() * past.transpose();
  p.grad(ix.init_c_b) += dc_next.transpose();
  return d_pre * p.value(ix.wx);
}

Matrix group_norm_backward(const ForwardCache::NormTape & tape, const Matrix & d_norm, int groups)
{
  const Eigen::Index w = d_norm.rows();
  const Eigen::Index cg = d_norm.cols() / groups;
  const double n = static_cast<double>(w * cg);
  Matrix dx(d_norm.rows(), d_norm.cols());
  for (int g = 0; g < groups; ++g) {
    const auto dn = d_norm.middleCols(g * cg, cg);
    const auto xn = tape.normalized.middleCols(g * cg, cg);
    const double mean_dn = dn.sum() / n;
    const double mean_dn_xn = dn.cwiseProduct(xn).sum() / n;
    dx.middleCols(g * cg, cg) =
      tape.inv_std(g) * (dn.array() - mean_dn - xn.array() * mean_dn_xn).matrix();
  }
  return dx;
}

}  // namespace

void ScoreNetConfig::validate() const
{
  if (window < 1) throw ConfigError("window must be >= 1");
  if (audio_dims < 1) throw ConfigError("audio_dims must be >= 1");
  if (hidden < 1 || embed < 2 || embed % 2 != 0) {
    throw ConfigError("hidden must be >= 1 and embed a positive even number");
  }
  if (blocks < 0) throw ConfigError("blocks must be >= 0");
  if (groups < 1 || hidden % groups != 0) {
    throw ConfigError(
      "hidden width " + std::to_string(hidden) + " not divisible by group count " +
      std::to_string(groups));
  }
}

int DenoiserParams::add(std::string name, Eigen::Index rows, Eigen::Index cols)
{
  blocks_.push_back({std::move(name), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
  return static_cast<int>(blocks_.size()) - 1;
}

DenoiserParams::Lstm DenoiserParams::add_lstm(const std::string & prefix, int input_dims)
{
  const int c = config_.hidden;
  Lstm l{};
  l.wx = add(prefix + ".wx", 4 * c, input_dims);
  l.wh = add(prefix + ".wh", 4 * c, c);
  l.bias = add(prefix + ".bias", 4 * c, 1);
  l.init_h_w = add(prefix + ".init_h.w", c, kFrameDims);
  l.init_h_b = add(prefix + ".init_h.b", c, 1);
  l.init_c_w = add(prefix + ".init_c.w", c, kFrameDims);
  l.init_c_b = add(prefix + ".init_c.b", c, 1);
  return l;
}

DenoiserParams::DenoiserParams(const ScoreNetConfig & config) : config_(config)
{
  config_.validate();
  const int c = config_.hidden;
  const int e = config_.embed;
  const int s = config_.speaker_dims();
  layout_.in_lstm = add_lstm("in_lstm", kFrameDims);
  layout_.step_w = add("step_embed.w", e, e);
  layout_.step_b = add("step_embed.b", e, 1);
  layout_.time_w = add("time_embed.w", e, e);
  layout_.time_b = add("time_embed.b", e, 1);
  for (int k = 0; k < config_.blocks; ++k) {
    const std::string pre = "res" + std::to_string(k);
    ResBlock r{};
    r.scale_w = add(pre + ".scale.w", c, e);
    r.scale_b = add(pre + ".scale.b", c, 1);
    r.shift_w = add(pre + ".shift.w", c, e);
    r.shift_b = add(pre + ".shift.b", c, 1);
    r.lin1_w = add(pre + ".lin1.w", c, c);
    r.lin1_b = add(pre + ".lin1.b", c, 1);
    r.lin2_w = add(pre + ".lin2.w", c, c);
    r.lin2_b = add(pre + ".lin2.b", c, 1);
    layout_.res.push_back(r);
  }
  auto & a = layout_.attn;
  a.q_w = add("attn.q.w", c, c);
  a.q_b = add("attn.q.b", c, 1);
  a.k_w = add("attn.k.w", c, s);
  a.k_b = add("attn.k.b", c, 1);
  a.v_w = add("attn.v.w", c, s);
  a.v_b = add("attn.v.b", c, 1);
  a.o_w = add("attn.o.w", c, c);
  a.o_b = add("attn.o.b", c, 1);
  a.null_cond = add("attn.null_cond", s, 1);
  layout_.out_lstm = add_lstm("out_lstm", c);
  layout_.head_w = add("head.w", kFrameDims, c);
  layout_.head_b = add("head.b", kFrameDims, 1);
  layout_.skip_w = add("skip.w", kFrameDims, kFrameDims);
  layout_.skip_t = add("skip.t", config_.window, config_.window);
  layout_.skip_tw = add("skip.tw", kFrameDims, kFrameDims);
}

void DenoiserParams::init_random(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto & b : blocks_) {
    const bool is_bias = b.value.cols() == 1;
    if (is_bias) {
      b.value.setZero();
      continue;
    }
    const double stddev = 1.0 / std::sqrt(static_cast<double>(b.value.cols()));
    b.value = Matrix::NullaryExpr(b.value.rows(), b.value.cols(), [&] { return stddev * normal(rng); });
  }
  const int c = config_.hidden;
  for (const auto * l : {&layout_.in_lstm, &layout_.out_lstm}) {
    value(l->bias).middleRows(c, c).setOnes();  // forget-gate bias
  }
  for (const auto & r : layout_.res) {
    value(r.scale_b).setOnes();
    value(r.lin2_w) *= 0.1;
  }
  value(layout_.skip_w).setZero();
  value(layout_.skip_t).setIdentity();
  value(layout_.skip_tw).setZero();
  value(layout_.attn.null_cond) =
    Matrix::NullaryExpr(value(layout_.attn.null_cond).rows(), 1, [&] { return normal(rng); });
}

void DenoiserParams::zero_grad()
{
  for (auto & b : blocks_) b.grad.setZero();
}

ParamBlock & DenoiserParams::block(std::string_view name)
{
  for (auto & b : blocks_) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("no parameter block '" + std::string(name) + "'");
}

const ParamBlock & DenoiserParams::block(std::string_view name) const
{
  return const_cast<DenoiserParams *>(this)->block(name);
}

Eigen::Index DenoiserParams::parameter_count() const
{
  Eigen::Index n = 0;
  for (const auto & b : blocks_) n += b.value.size();
  return n;
}

Vector sinusoidal_features(double position, int dims)
{
  if (dims < 2 || dims % 2 != 0) throw ConfigError("sinusoidal features need an even size");
  const int half = dims / 2;
  Vector f(dims);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    f(k) = std::sin(position * freq);
    f(half + k) = std::cos(position * freq);
  }
  return f;
}

Matrix adaptive_group_norm(
  const Matrix & hidden, const Vector & scale, const Vector & shift, int groups,
  ForwardCache::NormTape * tape)
{
  if (groups < 1 || hidden.cols() % groups != 0) {
    throw ConfigError("channel count not divisible by group count");
  }
  if (scale.size() != hidden.cols() || shift.size() != hidden.cols()) {
    throw DimensionError("adaptive_group_norm: scale/shift size must equal channel count");
  }
  const Eigen::Index cg = hidden.cols() / groups;
  Matrix normalized(hidden.rows(), hidden.cols());
  Vector inv_std(groups);
  for (int g = 0; g < groups; ++g) {
    const auto block = hidden.middleCols(g * cg, cg);
    const double mean = block.mean();
    const double var = (block.array() - mean).square().mean();
    inv_std(g) = 1.0 / std::sqrt(var + kNormEps);
    normalized.middleCols(g * cg, cg) = ((block.array() - mean) * inv_std(g)).matrix();
  }
  Matrix out = normalized.array().rowwise() * scale.transpose().array();
  out.rowwise() += shift.transpose();
  if (tape != nullptr) {
    tape->normalized = std::move(normalized);
    tape->inv_std = std::move(inv_std);
    tape->scale = scale;
    tape->shift = shift;
  }
  return out;
}

Matrix causal_attention_weights(const Matrix & queries, const Matrix & keys)
{
  if (queries.cols() != keys.cols() || queries.rows() != keys.rows()) {
    throw DimensionError("causal attention: queries and keys must have equal shape");
  }
  const Eigen::Index w = queries.rows();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  Matrix logits = queries * keys.transpose() * inv_sqrt;
  Matrix weights = Matrix::Zero(w, w);
  for (Eigen::Index i = 0; i < w; ++i) {
    const double mx = logits.row(i).head(i + 1).maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) {
      weights(i, j) = std::exp(logits(i, j) - mx);
      total += weights(i, j);
    }
    weights.row(i).head(i + 1) /= total;
  }
  return weights;
}

Matrix score_forward(
  const Matrix & x, const ConditionBundle & cond, const DenoiserParams & p, ForwardCache * cache)
{
  const auto & cfg = p.config();
  const auto & L = p.layout();
  const int w = cfg.window;
  check_shape(x, w, kFrameDims, "noisy window");
  check_shape(cond.speaker_face, w, kFrameDims, "speaker face");
  check_shape(cond.speaker_audio, w, cfg.audio_dims, "speaker audio");
  if (cond.past_frame.size() != kFrameDims) throw DimensionError("past frame must have 58 values");
  if (!(cond.step.sigma > 0.0)) throw DomainError("score network needs sigma > 0");

  ForwardCache local;
  ForwardCache & c = cache != nullptr ? *cache : local;
  c.alpha = cond.step.alpha;
  c.sigma = cond.step.sigma;
  c.past = cfg.use_history ? cond.past_frame : Vector::Zero(kFrameDims);

  // Step + timestamp embedding shared by every residual block.
  c.step_features = sinusoidal_features(cond.step.u * kStepPositionScale, cfg.embed);
  c.step_pre = p.value(L.step_w) * c.step_features + p.value(L.step_b);
  c.embedding = silu(c.step_pre);
  if (cfg.use_timestamp) {
    c.time_features = sinusoidal_features(static_cast<double>(cond.timestamp), cfg.embed);
    c.time_pre = p.value(L.time_w) * c.time_features + p.value(L.time_b);
    c.embedding += silu(c.time_pre);
  } else {
    c.time_features = Vector::Zero(cfg.embed);
    c.time_pre = Vector::Zero(cfg.embed);
  }

  Matrix h = lstm_forward(L.in_lstm, p, x, c.past, c.in_lstm);

  c.res.resize(L.res.size());
  for (std::size_t k = 0; k < L.res.size(); ++k) {
    const auto & r = L.res[k];
    auto & t = c.res[k];
    t.input = h;
    const Vector scale = p.value(r.scale_w) * c.embedding + p.value(r.scale_b);
    const Vector shift = p.value(r.shift_w) * c.embedding + p.value(r.shift_b);
    t.modulated = adaptive_group_norm(h, scale, shift, cfg.groups, &t.norm);
    t.act1 = silu(t.modulated);
    t.pre2 = affine_rows(t.act1, p.value(r.lin1_w), p.value(r.lin1_b));
    t.act2 = silu(t.pre2);
    h += affine_rows(t.act2, p.value(r.lin2_w), p.value(r.lin2_b));
  }

  // Causal cross-attention: listener hidden states query the speaker stream.
  auto & at = c.attn;
  const auto & A = L.attn;
  at.input = h;
  at.dropped = cond.cond_dropped;
  if (cond.cond_dropped) {
    at.speaker = Matrix::Ones(w, 1) * p.value(A.null_cond).transpose();
  } else {
    at.speaker.resize(w, cfg.speaker_dims());
    at.speaker.leftCols(kFrameDims) = cfg.use_face ? cond.speaker_face : Matrix::Zero(w, kFrameDims);
    at.speaker.rightCols(cfg.audio_dims) =
      cfg.use_audio ? cond.speaker_audio : Matrix::Zero(w, cfg.audio_dims);
  }
  at.q = affine_rows(h, p.value(A.q_w), p.value(A.q_b));
  at.k = affine_rows(at.speaker, p.value(A.k_w), p.value(A.k_b));
  at.v = affine_rows(at.speaker, p.value(A.v_w), p.value(A.v_b));
  at.weights = causal_attention_weights(at.q, at.k);
  at.context = at.weights * at.v;
  h += affine_rows(at.context, p.value(A.o_w), p.value(A.o_b));

  const Matrix h2 = lstm_forward(L.out_lstm, p, h, c.past, c.out_lstm);
  c.head = affine_rows(h2, p.value(L.head_w), p.value(L.head_b));
  c.skip_in = (cond.step.alpha / cond.step.sigma) * x;
  c.head += c.skip_in * p.value(L.skip_w).transpose();
  // second skip term mixes frames before the channel map
  c.skip_mix = p.value(L.skip_t) * c.skip_in;
  c.head += c.skip_mix * p.value(L.skip_tw).transpose();
  c.recorded = cache != nullptr;

  // eps_hat = sigma * x + alpha * v_hat; score = -eps_hat / sigma.
  return -x - (cond.step.alpha / cond.step.sigma) * c.head;
}

void score_backward(const Matrix & score_grad, const ForwardCache & c, DenoiserParams & p)
{
  if (!c.recorded) throw StateError("score_backward called without a recorded forward pass");
  const auto & cfg = p.config();
  const auto & L = p.layout();
  check_shape(score_grad, c.head.rows(), c.head.cols(), "score gradient");

  const Matrix d_head = -(c.alpha / c.sigma) * score_grad;
  const Matrix & h2 = c.out_lstm.hidden;
  const auto w = d_head.rows();
  p.grad(L.head_w) += d_head.transpose() * h2.bottomRows(w);
  p.grad(L.head_b) += d_head.colwise().sum().transpose();
  p.grad(L.skip_w) += d_head.transpose() * c.skip_in;
  p.grad(L.skip_tw) += d_head.transpose() * c.skip_mix;
  p.grad(L.skip_t) += (d_head * p.value(L.skip_tw)) * c.skip_in.transpose();
  Matrix dh = d_head * p.value(L.head_w);

  dh = lstm_backward(L.out_lstm, p, c.out_lstm, c.past, dh);

  // Attention block (residual).
  const auto & A = L.attn;
  const auto & at = c.attn;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  p.grad(A.o_w) += dh.transpose() * at.context;
  p.grad(A.o_b) += dh.colwise().sum().transpose();
  const Matrix d_context = dh * p.value(A.o_w);
  const Matrix d_weights = d_context * at.v.transpose();
  const Matrix d_v = at.weights.transpose() * d_context;
  Matrix d_logits = at.weights.cwiseProduct(d_weights);
  const Vector row_dot = d_logits.rowwise().sum();
  d_logits -= at.weights.cwiseProduct(row_dot * Eigen::RowVectorXd::Ones(w));
  const Matrix d_q = d_logits * at.k * inv_sqrt;
  const Matrix d_k = d_logits.transpose() * at.q * inv_sqrt;
  p.grad(A.q_w) += d_q.transpose() * at.input;
  p.grad(A.q_b) += d_q.colwise().sum().transpose();
  p.grad(A.k_w) += d_k.transpose() * at.speaker;
  p.grad(A.k_b) += d_k.colwise().sum().transpose();
  p.grad(A.v_w) += d_v.transpose() * at.speaker;
  p.grad(A.v_b) += d_v.colwise().sum().transpose();
  if (at.dropped) {
    const Matrix d_speaker = d_k * p.value(A.k_w) + d_v * p.value(A.v_w);
    p.grad(A.null_cond) += d_speaker.colwise().sum().transpose();
  }
  dh += d_q * p.value(A.q_w);

  // Embedding gradient accumulates across blocks.
  Vector d_embed = Vector::Zero(cfg.embed);
  for (std::size_t k = L.res.size(); k-- > 0;) {
    const auto & r = L.res[k];
    const auto & t = c.res[k];
    p.grad(r.lin2_w) += dh.transpose() * t.act2;
    p.grad(r.lin2_b) += dh.colwise().sum().transpose();
    const Matrix d_pre2 = (dh * p.value(r.lin2_w)).cwiseProduct(silu_grad(t.pre2));
    p.grad(r.lin1_w) += d_pre2.transpose() * t.act1;
    p.grad(r.lin1_b) += d_pre2.colwise().sum().transpose();
    const Matrix d_mod = (d_pre2 * p.value(r.lin1_w)).cwiseProduct(silu_grad(t.modulated));
    const Vector d_scale = d_mod.cwiseProduct(t.norm.normalized).colwise().sum().transpose();
    const Vector d_shift = d_mod.colwise().sum().transpose();
    p.grad(r.scale_w) += d_scale * c.embedding.transpose();
    p.grad(r.scale_b) += d_scale;
    p.grad(r.shift_w) += d_shift * c.embedding.transpose();
    p.grad(r.shift_b) += d_shift;
    d_embed += p.value(r.scale_w).transpose() * d_scale + p.value(r.shift_w).transpose() * d_shift;
    const Matrix d_norm = d_mod.array().rowwise() * t.norm.scale.transpose().array();
    dh += group_norm_backward(t.norm, d_norm, cfg.groups);
  }

  const Vector d_step_pre = d_embed.cwiseProduct(silu_grad(c.step_pre));
  p.grad(L.step_w) += d_step_pre * c.step_features.transpose();
  p.grad(L.step_b) += d_step_pre;
  if (cfg.use_timestamp) {
    const Vector d_time_pre = d_embed.cwiseProduct(silu_grad(c.time_pre));
    p.grad(L.time_w) += d_time_pre * c.time_features.transpose();
    p.grad(L.time_b) += d_time_pre;
  }

  lstm_backward(L.in_lstm, p, c.in_lstm, c.past, dh);
}

AdamWState AdamWState::zeros_like(const DenoiserParams & params)
{
  AdamWState s;
  for (const auto & b : params.blocks()) {
    s.first_moment.push_back(Matrix::Zero(b.value.rows(), b.value.cols()));
    s.second_moment.push_back(Matrix::Zero(b.value.rows(), b.value.cols()));
  }
  return s;
}

void adamw_step(DenoiserParams & params, AdamWState & state, const AdamWHyper & hp)
{
  auto & blocks = params.blocks();
  if (state.first_moment.size() != blocks.size()) state = AdamWState::zeros_like(params);
  ++state.step;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto & b = blocks[i];
    auto & m = state.first_moment[i];
    auto & v = state.second_moment[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * b.grad;
    v = hp.beta2 * v + (1.0 - hp.beta2) * b.grad.cwiseAbs2();
    b.value *= (1.0 - hp.lr * hp.weight_decay);
    b.value.array() -= hp.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + hp.epsilon);
  }
}

}  // namespace reactgen
