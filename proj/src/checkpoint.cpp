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

#include "reactgen/generator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>

namespace reactgen
{

using nlohmann::json;

namespace
{

constexpr const char * kFormat = "reactgen-checkpoint/2";
constexpr char kMagic[8] = {'R', 'G', 'C', 'K', 'P', 'T', '0', '2'};

struct Named
{
  std::string name;
  Matrix value;
};

json config_json(const ScoreNetConfig & c)
{
  return {
    {"window", c.window},         {"audio_dims", c.audio_dims},       {"hidden", c.hidden},
    {"embed", c.embed},           {"blocks", c.blocks},               {"groups", c.groups},
    {"use_timestamp", c.use_timestamp}, {"use_face", c.use_face},     {"use_audio", c.use_audio},
    {"use_history", c.use_history}};
}

ScoreNetConfig config_from(const json & jc)
{
  ScoreNetConfig c;
  c.window = jc.at("window");
  c.audio_dims = jc.at("audio_dims");
  c.hidden = jc.at("hidden");
  c.embed = jc.at("embed");
  c.blocks = jc.at("blocks");
  c.groups = jc.at("groups");
  c.use_timestamp = jc.at("use_timestamp");
  c.use_face = jc.at("use_face");
  c.use_audio = jc.at("use_audio");
  c.use_history = jc.at("use_history");
  return c;
}

}  // namespace

void save_model(const ReactionModel & model, const AdamWState * optimizer, const std::string & path)
{
  std::vector<Named> all;
  for (const auto & [tag, n] :
       {std::pair<const char *, const FeatureNormalizer *>{"listener", &model.listener}, {"face", &model.face},
        {"audio", &model.audio}}) {
    all.push_back({std::string("norm/") + tag + "/mean", Matrix(n->mean)});
    all.push_back({std::string("norm/") + tag + "/scale", Matrix(n->scale)});
  }
  const auto & blocks = model.params.blocks();
  for (const auto & b : blocks) all.push_back({"param/" + b.name, b.value});
  const bool with_opt = optimizer != nullptr && !optimizer->first_moment.empty();
  if (with_opt) {
    if (optimizer->first_moment.size() != blocks.size() || optimizer->second_moment.size() != blocks.size()) {
      throw StateError("optimizer state does not match parameters");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      all.push_back({"adam/m/" + blocks[i].name, optimizer->first_moment[i]});
      all.push_back({"adam/v/" + blocks[i].name, optimizer->second_moment[i]});
    }
  }

  json header;
  header["format"] = kFormat;
  header["config"] = config_json(model.config());
  header["optimizer"] = with_opt ? json{{"step", optimizer->step}} : json(nullptr);
  json list = json::array();
  std::uint64_t offset = 0;
  for (const auto & n : all) {
    list.push_back({{"name", n.name}, {"rows", n.value.rows()}, {"cols", n.value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(n.value.size());
  }
  header["blocks"] = std::move(list);
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::uint64_t len = text.size();
  os.write(kMagic, sizeof kMagic);
  os.write(reinterpret_cast<const char *>(&len), sizeof len);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  // Column-major doubles, host byte order (little-endian on every supported target).
  for (const auto & n : all) {
    os.write(reinterpret_cast<const char *>(n.value.data()), static_cast<std::streamsize>(n.value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

ReactionModel load_model(const std::string & path, AdamWState * optimizer)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  char magic[sizeof kMagic];
  std::uint64_t len = 0;
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw InputError("'" + path + "' is not a reactgen checkpoint");
  }
  if (!is.read(reinterpret_cast<char *>(&len), sizeof len) || len > (std::uint64_t{1} << 32)) {
    throw InputError("checkpoint: bad header length");
  }
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw InputError("checkpoint: truncated header");
  const auto payload_start = is.tellg();
  is.seekg(0, std::ios::end);
  const auto payload_bytes = static_cast<std::uint64_t>(is.tellg() - payload_start);
  is.seekg(payload_start);

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what(), 1);
  }
  try {
    if (j.at("format") != kFormat) throw InputError("unsupported checkpoint format");
    ReactionModel m;
    m.params = DenoiserParams(config_from(j.at("config")));

    std::map<std::string, Matrix> found;
    for (const auto & jb : j.at("blocks")) {
      const auto rows = jb.at("rows").get<std::int64_t>();
      const auto cols = jb.at("cols").get<std::int64_t>();
      const auto offset = jb.at("offset").get<std::uint64_t>();
      if (rows < 0 || cols < 0) throw InputError("checkpoint: negative shape");
      const auto count = static_cast<std::uint64_t>(rows * cols);
      if ((offset + count) * sizeof(double) > payload_bytes) throw InputError("checkpoint: truncated payload");
      Matrix v(rows, cols);
      is.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(double)));
      is.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
      if (!is) throw InputError("checkpoint: read failed");
      found.emplace(jb.at("name").get<std::string>(), std::move(v));
    }
    auto take = [&](const std::string & name, Eigen::Index rows, Eigen::Index cols) {
      auto it = found.find(name);
      if (it == found.end()) throw InputError("checkpoint: missing block '" + name + "'");
      if ((rows >= 0 && it->second.rows() != rows) || (cols >= 0 && it->second.cols() != cols)) {
        throw InputError("checkpoint: shape mismatch for " + name);
      }
      return std::move(it->second);
    };
    for (auto & b : m.params.blocks()) b.value = take("param/" + b.name, b.value.rows(), b.value.cols());
    for (const auto & [tag, n] :
         {std::pair<const char *, FeatureNormalizer *>{"listener", &m.listener}, {"face", &m.face}, {"audio", &m.audio}}) {
      n->mean = take(std::string("norm/") + tag + "/mean", -1, 1);
      n->scale = take(std::string("norm/") + tag + "/scale", n->mean.size(), 1);
    }

    if (optimizer != nullptr) {
      *optimizer = AdamWState{};
      if (!j.at("optimizer").is_null()) {
        optimizer->step = j.at("optimizer").at("step");
        for (const auto & b : m.params.blocks()) {
          optimizer->first_moment.push_back(take("adam/m/" + b.name, b.value.rows(), b.value.cols()));
          optimizer->second_moment.push_back(take("adam/v/" + b.name, b.value.rows(), b.value.cols()));
        }
      }
    }
    return m;
  } catch (const json::exception & e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace reactgen
