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

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace reactgen
{

using nlohmann::json;

namespace
{

json matrix_to_json(const Matrix & m)
{
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json & j, const char * field, std::size_t line_no)
{
  if (!j.is_array()) throw ParseError(std::string(field) + " must be an array of rows", line_no);
  if (j.empty()) return {};
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto & row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(std::string(field) + " row " + std::to_string(r) + " has wrong length", line_no);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ParseError(std::string(field) + " contains a non-number", line_no);
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string session_to_json(const Session & s)
{
  json j;
  j["session_id"] = s.session_id;
  j["w"] = s.window;
  j["speaker_face"] = matrix_to_json(s.speaker_face());
  j["speaker_audio"] = matrix_to_json(s.speaker_audio());
  json listeners = json::array();
  for (const auto & l : s.listeners) listeners.push_back(matrix_to_json(l));
  j["listeners"] = std::move(listeners);
  return j.dump();
}

Session session_from_json(const std::string & line, std::size_t line_no)
{
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error & e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  for (const char * key : {"session_id", "w", "speaker_face", "speaker_audio", "listeners"}) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line_no);
  }
  Session s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.window = j.at("w").get<int>();
  } catch (const json::exception & e) {
    throw ParseError(e.what(), line_no);
  }
  if (s.window <= 0) throw ParseError("w must be positive", line_no);
  const Matrix face = matrix_from_json(j.at("speaker_face"), "speaker_face", line_no);
  const Matrix audio = matrix_from_json(j.at("speaker_audio"), "speaker_audio", line_no);
  if (face.rows() != audio.rows()) {
    throw ParseError("speaker_face and speaker_audio lengths differ", line_no);
  }
  if (face.rows() % s.window != 0) throw ParseError("speaker length not a multiple of w", line_no);
  for (Eigen::Index k = 0; k * s.window < face.rows(); ++k) {
    SpeakerWindow sw;
    sw.face = {face.middleRows(k * s.window, s.window), k * s.window};
    sw.audio = {audio.middleRows(k * s.window, s.window), k * s.window};
    s.speaker.push_back(std::move(sw));
  }
  if (!j.at("listeners").is_array()) throw ParseError("listeners must be an array", line_no);
  for (const auto & l : j.at("listeners")) s.listeners.push_back(matrix_from_json(l, "listeners", line_no));
  return s;
}

void write_sessions(const std::vector<Session> & sessions, std::ostream & os)
{
  for (const auto & s : sessions) os << session_to_json(s) << '\n';
}

void save_sessions(const std::vector<Session> & sessions, const std::string & path)
{
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_sessions(sessions, os);
}

std::vector<Session> read_sessions(std::istream & is)
{
  std::vector<Session> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Session s = session_from_json(line, line_no);
    const auto problems = validate_session(s, false);
    if (!problems.empty()) {
      throw ValidationError(
        "line " + std::to_string(line_no) + ": " + problems.front().to_string() + " (" +
        std::to_string(problems.size()) + " violation(s))");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Session> load_sessions(const std::string & path)
{
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_sessions(is);
}

Matrix read_listener_csv(std::istream & is)
{
  std::string header;
  if (!std::getline(is, header)) throw ParseError("empty CSV", 1);
  std::vector<int> column_map;  // CSV column -> frame dim, -1 for frame_index
  {
    std::stringstream hs(header);
    std::string name;
    std::vector<bool> seen(kFrameDims, false);
    bool has_index = false;
    while (std::getline(hs, name, ',')) {
      while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
      if (name == "frame_index") {
        column_map.push_back(-1);
        has_index = true;
        continue;
      }
      const auto idx = frame_index(name);
      if (!idx) throw ParseError("unknown column '" + name + "'", 1);
      if (seen[static_cast<std::size_t>(*idx)]) throw ParseError("duplicate column '" + name + "'", 1);
      seen[static_cast<std::size_t>(*idx)] = true;
      column_map.push_back(*idx);
    }
    if (!has_index) throw ParseError("missing frame_index column", 1);
    for (int d = 0; d < kFrameDims; ++d) {
      if (!seen[static_cast<std::size_t>(d)]) {
        throw ParseError("missing column '" + std::string(frame_name(d)) + "'", 1);
      }
    }
  }
  std::vector<std::pair<long, Vector>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ls(line);
    std::string cell;
    Vector v(kFrameDims);
    long frame = -1;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= column_map.size()) throw ParseError("too many cells", line_no);
      try {
        std::size_t used = 0;
        const double x = std::stod(cell, &used);
        if (column_map[col] < 0) {
          frame = static_cast<long>(x);
        } else {
          v(column_map[col]) = x;
        }
      } catch (const std::exception &) {
        throw ParseError("bad number '" + cell + "'", line_no);
      }
      ++col;
    }
    if (col != column_map.size()) throw ParseError("too few cells", line_no);
    rows.emplace_back(frame, std::move(v));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), kFrameDims);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].first != static_cast<long>(r)) {
      throw ParseError("frame_index not consecutive from 0", r + 2);
    }
    out.row(static_cast<Eigen::Index>(r)) = rows[r].second.transpose();
  }
  return out;
}

Matrix load_listener_csv(const std::string & path)
{
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_listener_csv(is);
}

void write_listener_csv(const Matrix & frames, std::ostream & os)
{
  if (frames.cols() != kFrameDims) throw DimensionError("listener CSV needs 58 columns");
  os << "frame_index";
  for (int d = 0; d < kFrameDims; ++d) os << ',' << frame_name(d);
  os << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    os << r;
    for (int d = 0; d < kFrameDims; ++d) os << ',' << frames(r, d);
    os << '\n';
  }
}

void write_sequences_jsonl(const std::vector<Matrix> & sequences, std::ostream & os, const std::string & session_id)
{
  for (std::size_t m = 0; m < sequences.size(); ++m) {
    json j;
    if (!session_id.empty()) j["session"] = session_id;
    j["sample"] = m;
    j["frames"] = matrix_to_json(sequences[m]);
    os << j.dump() << '\n';
  }
}

namespace
{

template <typename F>
void for_each_json_line(std::istream & is, F && f)
{
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error & e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.contains("frames")) throw ParseError("missing field 'frames'", line_no);
    f(j, line_no);
  }
}

}  // namespace

std::vector<Matrix> read_sequences_jsonl(std::istream & is)
{
  std::vector<Matrix> out;
  for_each_json_line(is, [&](const json & j, std::size_t line_no) {
    out.push_back(matrix_from_json(j.at("frames"), "frames", line_no));
  });
  return out;
}

std::vector<GeneratedSet> read_generated_jsonl(std::istream & is)
{
  std::vector<GeneratedSet> out;
  for_each_json_line(is, [&](const json & j, std::size_t line_no) {
    std::string id;
    if (j.contains("session")) {
      if (!j.at("session").is_string()) throw ParseError("field 'session' must be a string", line_no);
      id = j.at("session").get<std::string>();
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const GeneratedSet & g) { return g.session_id == id; });
    if (it == out.end()) it = out.insert(out.end(), GeneratedSet{id, {}});
    it->samples.push_back(matrix_from_json(j.at("frames"), "frames", line_no));
  });
  return out;
}

}  // namespace reactgen
