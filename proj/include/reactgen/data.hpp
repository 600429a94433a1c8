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

#ifndef REACTGEN_DATA_HPP_
#define REACTGEN_DATA_HPP_

#include "reactgen/core.hpp"
#include "reactgen/losses.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace reactgen
{

struct SynthConfig
{
  int sessions = 8;
  int listeners_per_session = 3;
  int window = kDefaultWindow;
  int windows_per_session = 8;
  int audio_dims = kDefaultAudioDims;
  std::uint64_t seed = 0;
};

/// Per-listener style parameters, exposed so tests can check the injected structure.
struct ListenerStyle
{
  int lag = 0;
  Vector gain;  // per coefficient
};

struct SynthSession
{
  Session session;
  std::vector<ListenerStyle> styles;
};

/// Synthetic dyadic corpus: regime-switching speaker faces, envelope + prosody audio, and
/// listeners that follow the speaker through a per-listener gain / lag / idle transform.
/// Symmetric AU pairs are equal and mutually exclusive pairs anti-correlated in every listener.
std::vector<SynthSession> synth_corpus_detailed(const SynthConfig & config);
std::vector<Session> synth_corpus(const SynthConfig & config);

/// Global listener trend used by the generator: a function of the absolute frame index only.
double engagement_trend(std::int64_t frame);

/// Session <-> one JSONL line.
std::string session_to_json(const Session & session);
Session session_from_json(const std::string & line, std::size_t line_no = 1);

/// Writes one session per line.
void save_sessions(const std::vector<Session> & sessions, const std::string & path);
void write_sessions(const std::vector<Session> & sessions, std::ostream & os);

/// Parses every line; throws ParseError with the 1-based line number on malformed input
/// and ValidationError when a parsed session breaks an invariant (decoded ranges are not enforced).
std::vector<Session> load_sessions(const std::string & path);
std::vector<Session> read_sessions(std::istream & is);

/// Single listener sequence as CSV: frame_index + 58 named columns, any column order.
Matrix read_listener_csv(std::istream & is);
Matrix load_listener_csv(const std::string & path);
void write_listener_csv(const Matrix & frames, std::ostream & os);

/// Generated sequences (H x 58 each) as JSONL, one {"session": id, "sample": m, "frames": [[...]]}
/// per line. The session field is omitted when `session_id` is empty.
void write_sequences_jsonl(const std::vector<Matrix> & sequences, std::ostream & os, const std::string & session_id = "");
std::vector<Matrix> read_sequences_jsonl(std::istream & is);

struct GeneratedSet
{
  std::string session_id;
  std::vector<Matrix> samples;
};

/// Groups lines by their session field, in order of first appearance.
std::vector<GeneratedSet> read_generated_jsonl(std::istream & is);

}  // namespace reactgen

#endif  // REACTGEN_DATA_HPP_
