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

#include "reactgen/losses.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string_view>

namespace reactgen
{

namespace
{

using NamePair = std::pair<std::string_view, std::string_view>;

constexpr std::array<NamePair, 20> kSymmetric = {{
  {"browDownLeft", "browDownRight"},
  {"browOuterUpLeft", "browOuterUpRight"},
  {"cheekSquintLeft", "cheekSquintRight"},
  {"eyeBlinkLeft", "eyeBlinkRight"},
  {"eyeLookDownLeft", "eyeLookDownRight"},
  {"eyeLookInLeft", "eyeLookInRight"},
  {"eyeLookOutLeft", "eyeLookOutRight"},
  {"eyeLookUpLeft", "eyeLookUpRight"},
  {"eyeSquintLeft", "eyeSquintRight"},
  {"eyeWideLeft", "eyeWideRight"},
  {"jawLeft", "jawRight"},
  {"mouthDimpleLeft", "mouthDimpleRight"},
  {"mouthFrownLeft", "mouthFrownRight"},
  {"mouthLeft", "mouthRight"},
  {"mouthLowerDownLeft", "mouthLowerDownRight"},
  {"mouthPressLeft", "mouthPressRight"},
  {"mouthSmileLeft", "mouthSmileRight"},
  {"mouthStretchLeft", "mouthStretchRight"},
  {"mouthUpperUpLeft", "mouthUpperUpRight"},
  {"noseSneerLeft", "noseSneerRight"},
}};

constexpr std::array<NamePair, 30> kCoOccurred = {{
  {"browOuterUpLeft", "eyeLookUpLeft"},
  {"browOuterUpRight", "eyeLookUpRight"},
  {"eyeLookDownLeft", "browDownLeft"},
  {"eyeLookDownRight", "browDownRight"},
  {"eyeBlinkLeft", "browDownLeft"},
  {"eyeBlinkRight", "browDownRight"},
  {"eyeWideLeft", "browOuterUpLeft"},
  {"eyeWideRight", "browOuterUpRight"},
  {"eyeWideLeft", "browInnerUp"},
  {"eyeWideRight", "browInnerUp"},
  {"cheekSquintLeft", "mouthLeft"},
  {"cheekSquintRight", "mouthRight"},
  {"cheekSquintLeft", "mouthSmileLeft"},
  {"cheekSquintRight", "mouthSmileRight"},
  {"cheekSquintLeft", "mouthFrownLeft"},
  {"cheekSquintRight", "mouthFrownRight"},
  {"cheekSquintLeft", "mouthDimpleLeft"},
  {"cheekSquintRight", "mouthDimpleRight"},
  {"cheekSquintLeft", "mouthUpperUpLeft"},
  {"cheekSquintRight", "mouthUpperUpRight"},
  {"cheekSquintLeft", "mouthPressLeft"},
  {"cheekSquintRight", "mouthPressRight"},
  {"browOuterUpLeft", "mouthSmileLeft"},
  {"browOuterUpRight", "mouthSmileRight"},
  {"noseSneerLeft", "cheekSquintLeft"},
  {"noseSneerRight", "cheekSquintRight"},
  {"mouthFrownLeft", "browDownLeft"},
  {"mouthFrownRight", "browDownRight"},
  {"mouthUpperUpLeft", "browDownLeft"},
  {"mouthUpperUpRight", "browDownRight"},
}};

constexpr std::array<NamePair, 58> kMutuallyExclusive = {{
  {"browDownLeft", "browOuterUpLeft"},
  {"browDownRight", "browOuterUpRight"},
  {"browDownLeft", "eyeLookUpLeft"},
  {"browDownRight", "eyeLookUpRight"},
  {"browDownLeft", "eyeWideLeft"},
  {"browDownRight", "eyeWideRight"},
  {"browInnerUp", "eyeBlinkLeft"},
  {"browInnerUp", "eyeBlinkRight"},
  {"eyeLookDownLeft", "eyeLookUpLeft"},
  {"eyeLookDownRight", "eyeLookUpRight"},
  {"eyeLookInLeft", "eyeLookOutLeft"},
  {"eyeLookInRight", "eyeLookOutRight"},
  {"eyeLookInLeft", "eyeSquintLeft"},
  {"eyeLookInRight", "eyeSquintRight"},
  {"eyeWideLeft", "eyeBlinkLeft"},
  {"eyeWideRight", "eyeBlinkRight"},
  {"jawOpen", "mouthClose"},
  {"mouthClose", "mouthUpperUpLeft"},
  {"mouthClose", "mouthUpperUpRight"},
  {"mouthClose", "tongueOut"},
  {"mouthClose", "mouthLowerDownLeft"},
  {"mouthClose", "mouthLowerDownRight"},
  {"mouthFrownLeft", "mouthSmileLeft"},
  {"mouthFrownRight", "mouthSmileRight"},
  {"mouthFrownLeft", "mouthUpperUpLeft"},
  {"mouthFrownRight", "mouthUpperUpRight"},
  {"mouthFrownLeft", "mouthFunnel"},
  {"mouthFrownRight", "mouthFunnel"},
  {"mouthFrownLeft", "mouthFrownRight"},
  {"mouthFunnel", "mouthLowerDownLeft"},
  {"mouthFunnel", "mouthLowerDownRight"},
  {"mouthFunnel", "mouthRollLower"},
  {"mouthFunnel", "mouthSmileLeft"},
  {"mouthFunnel", "mouthSmileRight"},
  {"mouthFunnel", "tongueOut"},
  {"mouthLowerDownLeft", "mouthPressLeft"},
  {"mouthLowerDownRight", "mouthPressRight"},
  {"mouthLowerDownLeft", "mouthUpperUpLeft"},
  {"mouthLowerDownRight", "mouthUpperUpRight"},
  {"mouthLowerDownLeft", "mouthSmileLeft"},
  {"mouthLowerDownRight", "mouthSmileRight"},
  {"mouthPressLeft", "mouthStretchLeft"},
  {"mouthPressRight", "mouthStretchRight"},
  {"mouthPressLeft", "mouthUpperUpLeft"},
  {"mouthPressRight", "mouthUpperUpRight"},
  {"mouthPucker", "jawOpen"},
  {"mouthFunnel", "jawOpen"},
  {"mouthPucker", "mouthUpperUpLeft"},
  {"mouthPucker", "mouthUpperUpRight"},
  {"mouthPucker", "mouthLowerDownLeft"},
  {"mouthPucker", "mouthLowerDownRight"},
  {"mouthRollLower", "mouthRollUpper"},
  {"mouthShrugLower", "mouthShrugUpper"},
  {"mouthShrugLower", "tongueOut"},
  {"mouthSmileLeft", "mouthStretchLeft"},
  {"mouthSmileRight", "mouthStretchRight"},
  {"mouthSmileLeft", "mouthUpperUpLeft"},
  {"mouthSmileRight", "mouthUpperUpRight"},
}};
template <std::size_t N>
std::vector<IndexPair> resolve(const std::array<NamePair, N> & table)
{
  std::vector<IndexPair> out;
  out.reserve(N);
  for (const auto & [a, b] : table) out.emplace_back(*frame_index(a), *frame_index(b));
  return out;
}

IndexPair canonical(IndexPair p) { return {std::min(p.first, p.second), std::max(p.first, p.second)}; }

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

std::vector<IndexPair> parse_set(const nlohmann::json & doc, const char * key)
{
  std::vector<IndexPair> out;
  if (!doc.contains(key)) return out;
  for (const auto & entry : doc.at(key)) {
    if (!entry.is_array() || entry.size() != 2) {
      throw InputError(std::string(key) + ": each pair must be a two-element array");
    }
    int idx[2];
    for (int k = 0; k < 2; ++k) {
      const auto name = entry[static_cast<std::size_t>(k)].get<std::string>();
      const auto found = frame_index(name);
      if (!found) throw InputError(std::string(key) + ": unknown coefficient name '" + name + "'");
      idx[k] = *found;
    }
    out.emplace_back(idx[0], idx[1]);
  }
  return out;
}

}  // namespace

AUPairRegistry AUPairRegistry::builtin()
{
  return {resolve(kSymmetric), resolve(kCoOccurred), resolve(kMutuallyExclusive)};
}

AUPairRegistry AUPairRegistry::from_json(const std::string & text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw InputError(std::string("AU registry JSON: ") + e.what());
  }
  AUPairRegistry r;
  r.symmetric = parse_set(doc, "symmetric");
  r.co_occurred = parse_set(doc, "co_occurred");
  r.mutually_exclusive = parse_set(doc, "mutually_exclusive");
  return r;
}

std::vector<std::string> AUPairRegistry::validate() const
{
  std::vector<std::string> problems;
  const std::pair<const char *, const std::vector<IndexPair> *> sets[] = {
    {"symmetric", &symmetric}, {"co_occurred", &co_occurred}, {"mutually_exclusive", &mutually_exclusive}};
  for (const auto & [name, pairs] : sets) {
    std::set<IndexPair> seen;
    for (const auto & p : *pairs) {
      const std::string label = std::string(name) + " (" + std::to_string(p.first) + ", " +
                                std::to_string(p.second) + ")";
      if (p.first < 0 || p.first >= kExprDims || p.second < 0 || p.second >= kExprDims) {
        problems.push_back(label + ": not an expression coefficient");
        continue;
      }
      if (p.first == p.second) problems.push_back(label + ": self pair");
      if (!seen.insert(canonical(p)).second) problems.push_back(label + ": duplicate");
    }
  }
  return problems;
}

std::vector<IndexPair> AUPairRegistry::cross_set_overlaps() const
{
  auto as_set = [](const std::vector<IndexPair> & v) {
    std::set<IndexPair> s;
    for (const auto & p : v) s.insert(canonical(p));
    return s;
  };
  const std::set<IndexPair> sets[] = {as_set(symmetric), as_set(co_occurred), as_set(mutually_exclusive)};
  std::set<IndexPair> overlaps;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      for (const auto & p : sets[a]) {
        if (sets[b].count(p)) overlaps.insert(p);
      }
    }
  }
  return {overlaps.begin(), overlaps.end()};
}

std::vector<IndexPair> AUPairRegistry::all_pairs() const
{
  std::vector<IndexPair> out = symmetric;
  out.insert(out.end(), co_occurred.begin(), co_occurred.end());
  out.insert(out.end(), mutually_exclusive.begin(), mutually_exclusive.end());
  return out;
}

Matrix loss_dm_grad(const Matrix & pred, const Matrix & target)
{
  return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

FbkResult loss_fbk(
  const Matrix & pred_cur, const Matrix & target_cur, const Matrix * pred_prev,
  const Matrix * target_prev, int t_index, int gate, bool with_grad)
{
  FbkResult r;
  if (pred_cur.rows() != target_cur.rows() || pred_cur.cols() != target_cur.cols()) {
    throw DimensionError("loss_fbk: current window shapes differ");
  }
  if (with_grad) r.grad_cur = Matrix::Zero(pred_cur.rows(), pred_cur.cols());
  if (t_index > gate || pred_prev == nullptr || target_prev == nullptr) return r;
  if (pred_prev->rows() != pred_cur.rows() || target_prev->rows() != pred_cur.rows() ||
      pred_prev->cols() != pred_cur.cols() || target_prev->cols() != pred_cur.cols()) {
    throw DimensionError("loss_fbk: previous window shape differs from current");
  }
  const Eigen::Index w = pred_cur.rows();
  const Eigen::Index d = pred_cur.cols();
  Matrix real(2 * w, d), est(2 * w, d);
  real << *target_prev, target_cur;
  est << *pred_prev, pred_cur;
  Matrix grad_est = Matrix::Zero(2 * w, d);
  const double inv_w = 1.0 / static_cast<double>(w);

  // One velocity term between rows i and j, scaled by `scale`.
  auto term = [&](Eigen::Index i, Eigen::Index j, double scale) {
    // Both norms go through the same evaluation path so matched inputs give exactly 0.
    const Eigen::RowVectorXd real_diff = real.row(i) - real.row(j);
    const double v = real_diff.norm() * scale;
    const Eigen::RowVectorXd diff = est.row(i) - est.row(j);
    const double norm = diff.norm();
    const double v_hat = norm * scale;
    r.value += std::abs(v - v_hat);
    if (with_grad && norm > 0.0) {
      const Eigen::RowVectorXd g = -sign(v - v_hat) * scale / norm * diff;
      grad_est.row(i) += g;
      grad_est.row(j) -= g;
    }
  };
  for (Eigen::Index i = w; i < 2 * w; ++i) {
    term(i, i - 1, 1.0);
    term(i, i - w, inv_w);
  }
  if (with_grad) {
    r.grad_prev = grad_est.topRows(w);
    r.grad_cur = grad_est.bottomRows(w);
  }
  return r;
}

FacResult loss_fac(
  const Matrix & pred, const Matrix & target, const AUPairRegistry & registry, bool with_grad)
{
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("loss_fac: shape mismatch");
  }
  FacResult r;
  if (with_grad) r.grad = Matrix::Zero(pred.rows(), pred.cols());
  // Every set shares the same per-pair form; membership is all that differs.
  for (const auto * set : {&registry.symmetric, &registry.co_occurred, &registry.mutually_exclusive}) {
    for (const auto & [i, j] : *set) {
      if (i >= pred.cols() || j >= pred.cols()) throw DimensionError("loss_fac: pair index out of range");
      for (Eigen::Index f = 0; f < pred.rows(); ++f) {
        const double d = std::abs(target(f, i) - target(f, j));
        const double diff_hat = pred(f, i) - pred(f, j);
        const double d_hat = std::abs(diff_hat);
        r.value += std::abs(d - d_hat);
        if (with_grad) {
          const double g = -sign(d - d_hat) * sign(diff_hat);
          r.grad(f, i) += g;
          r.grad(f, j) -= g;
        }
      }
    }
  }
  return r;
}

LossBreakdown total_loss(double dm, double fbk, double fac, double lambda_fac)
{
  const std::pair<const char *, double> parts[] = {
    {"dm", dm}, {"fbk", fbk}, {"fac", fac}, {"lambda_fac", lambda_fac}};
  for (const auto & [name, v] : parts) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss component: ") + name);
  }
  return {dm, fbk, fac, dm + fbk + lambda_fac * fac, lambda_fac};
}

}  // namespace reactgen
