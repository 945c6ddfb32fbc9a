// Copyright 2026 The tprcap Authors.
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

#include "tprcap/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "tprcap/error.h"

namespace tprcap {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kBos = "<s>";
constexpr const char* kEos = "</s>";

bool IsReserved(const std::string& token) {
  return token == "<pad>" || token == kBos || token == kEos || token == "<unk>";
}

// Fixed caption templates; {c} color, {o} object, {a} action.
const std::vector<std::vector<std::string>>& Templates() {
  static const std::vector<std::vector<std::string>> kTemplates = {
      {"a", "{c}", "{o}", "is", "{a}"},
      {"the", "{c}", "{o}", "is", "{a}"},
      {"there", "is", "a", "{c}", "{o}", "{a}"},
  };
  return kTemplates;
}

Tensor ParseVector(const Json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_array()) {
    Fail(ErrorKind::kFormat, where + "missing array field '" + field + "'");
  }
  std::vector<double> values;
  for (const Json& x : j[field]) {
    if (!x.is_number()) {
      Fail(ErrorKind::kFormat, where + "non-numeric entry in '" + field + "'");
    }
    const double v = x.get<double>();
    if (!std::isfinite(v)) {
      Fail(ErrorKind::kFormat, where + "non-finite entry in '" + field + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) Fail(ErrorKind::kFormat, where + "empty '" + field + "'");
  return Tensor::Vector(std::move(values));
}

}  // namespace

size_t Dataset::feature_dim() const {
  return samples.empty() ? 0 : samples.front().feature.size();
}

size_t Dataset::tag_dim() const {
  return samples.empty() ? 0 : samples.front().tags.size();
}

Dataset DatasetFromJsonl(const std::string& text, size_t capacity,
                         const std::string& source) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kFormat, where + "malformed JSON: " + e.what());
    }
    if (!j.is_object()) Fail(ErrorKind::kFormat, where + "expected an object");
    CaptionSample s;
    if (!j.contains("id") || !j["id"].is_string()) {
      Fail(ErrorKind::kFormat, where + "missing string field 'id'");
    }
    s.id = j["id"].get<std::string>();
    s.feature = ParseVector(j, "v", where);
    s.tags = ParseVector(j, "tags", where);
    if (!ds.empty()) {
      if (s.feature.size() != ds.feature_dim()) {
        Fail(ErrorKind::kFormat,
             where + "feature length " + std::to_string(s.feature.size()) +
                 ", expected " + std::to_string(ds.feature_dim()));
      }
      if (s.tags.size() != ds.tag_dim()) {
        Fail(ErrorKind::kFormat,
             where + "tag length " + std::to_string(s.tags.size()) +
                 ", expected " + std::to_string(ds.tag_dim()));
      }
    }
    for (double t : s.tags.data()) {
      if (t < 0.0 || t > 1.0) {
        Fail(ErrorKind::kFormat, where + "tag value outside [0, 1]");
      }
    }
    if (!j.contains("captions") || !j["captions"].is_array() ||
        j["captions"].empty()) {
      Fail(ErrorKind::kFormat, where + "needs at least one caption");
    }
    for (const Json& cap : j["captions"]) {
      if (!cap.is_array() || cap.empty()) {
        Fail(ErrorKind::kFormat, where + "empty caption");
      }
      Sentence wrapped{kBos};
      for (const Json& tok : cap) {
        if (!tok.is_string() || tok.get<std::string>().empty()) {
          Fail(ErrorKind::kFormat, where + "caption tokens must be strings");
        }
        const std::string t = tok.get<std::string>();
        if (IsReserved(t)) {
          Fail(ErrorKind::kFormat,
               where + "reserved token '" + t + "' inside a caption");
        }
        wrapped.push_back(t);
      }
      wrapped.push_back(kEos);
      if (wrapped.size() > capacity) {
        Fail(ErrorKind::kCapacity,
             where + "caption of " + std::to_string(wrapped.size()) +
                 " tokens exceeds capacity " + std::to_string(capacity));
      }
      s.captions.push_back(std::move(wrapped));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset LoadDataset(const std::string& path, size_t capacity) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorKind::kIo, "cannot open dataset " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return DatasetFromJsonl(buf.str(), capacity, path);
}

std::string DatasetToJsonl(const Dataset& dataset) {
  std::string out;
  for (const CaptionSample& s : dataset.samples) {
    Json j;
    j["id"] = s.id;
    j["v"] = s.feature.values();
    j["tags"] = s.tags.values();
    Json caps = Json::array();
    for (const Sentence& c : s.captions) caps.push_back(CaptionBody(c));
    j["captions"] = std::move(caps);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void SaveDataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorKind::kIo, "cannot write dataset " + path);
  out << DatasetToJsonl(dataset);
  Require(out.good(), ErrorKind::kIo, "write failed: " + path);
}

Vocabulary BuildVocabulary(const Dataset& dataset) {
  Vocabulary vocab;
  for (const CaptionSample& s : dataset.samples) {
    for (const Sentence& c : s.captions) {
      for (const std::string& t : CaptionBody(c)) vocab.Add(t);
    }
  }
  return vocab;
}

std::vector<TokenId> EncodeCaption(const Sentence& caption,
                                   const Vocabulary& vocab) {
  return vocab.Encode(caption);
}

Sentence CaptionBody(const Sentence& caption) {
  auto first = caption.begin();
  auto last = caption.end();
  if (first != last && *first == kBos) ++first;
  if (first != last && *(last - 1) == kEos) --last;
  return Sentence(first, last);
}

SynthGrammar SynthGrammar::Default() {
  return {{"cat", "dog", "bird", "horse", "car", "boat", "man", "woman"},
          {"red", "blue", "green", "black", "white", "brown"},
          {"running", "sitting", "jumping", "sleeping", "eating", "standing"}};
}

Vocabulary SynthVocabulary(const SynthGrammar& grammar) {
  Vocabulary vocab;
  for (const auto& tmpl : Templates()) {
    for (const std::string& t : tmpl) {
      if (t.front() != '{') vocab.Add(t);
    }
  }
  for (const auto& w : grammar.objects) vocab.Add(w);
  for (const auto& w : grammar.colors) vocab.Add(w);
  for (const auto& w : grammar.actions) vocab.Add(w);
  return vocab;
}

Tensor SynthAttributeBasis(uint64_t seed, const SynthGrammar& grammar,
                           size_t feature_dim) {
  // Separate stream from the per-sample draws so the basis depends only on
  // the seed.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(3.0));
  Tensor basis({feature_dim, grammar.num_attributes()});
  for (double& x : basis.data()) x = normal(rng);
  return basis;
}

Dataset SynthGenerate(uint64_t seed, size_t num_samples,
                      const SynthGrammar& grammar,
                      const SynthOptions& options) {
  Require(num_samples >= 1, ErrorKind::kValidation,
          "synthetic corpus needs at least one sample");
  Require(!grammar.objects.empty() && !grammar.colors.empty() &&
              !grammar.actions.empty(),
          ErrorKind::kValidation, "grammar attribute sets must be non-empty");
  Require(options.min_captions >= 1 &&
              options.min_captions <= options.max_captions &&
              options.max_captions <= Templates().size(),
          ErrorKind::kValidation,
          "caption count range must lie within [1, " +
              std::to_string(Templates().size()) + "]");
  Require(options.feature_dim >= 1, ErrorKind::kValidation,
          "feature dimension must be positive");

  const Tensor basis = SynthAttributeBasis(options.basis_seed.value_or(seed),
                                           grammar, options.feature_dim);
  const size_t n_obj = grammar.objects.size();
  const size_t n_col = grammar.colors.size();
  const size_t n_act = grammar.actions.size();
  const size_t k_s = grammar.num_attributes();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick_obj(0, n_obj - 1);
  std::uniform_int_distribution<size_t> pick_col(0, n_col - 1);
  std::uniform_int_distribution<size_t> pick_act(0, n_act - 1);
  std::uniform_int_distribution<size_t> pick_count(options.min_captions,
                                                   options.max_captions);
  std::uniform_real_distribution<double> tag_noise(0.0, options.tag_noise);
  std::normal_distribution<double> feat_noise(0.0, 1.0);

  Dataset ds;
  for (size_t n = 0; n < num_samples; ++n) {
    const size_t obj = pick_obj(rng);
    const size_t col = pick_col(rng);
    const size_t act = pick_act(rng);
    const size_t attrs[3] = {obj, n_obj + col, n_obj + n_col + act};

    CaptionSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%05zu", n);
    s.id = id;

    s.tags = Tensor({k_s});
    for (size_t k = 0; k < k_s; ++k) s.tags[k] = tag_noise(rng);
    for (size_t a : attrs) s.tags[a] = 1.0;

    s.feature = Tensor({options.feature_dim});
    for (size_t i = 0; i < options.feature_dim; ++i) {
      double x = 0.0;
      for (size_t a : attrs) x += basis.at(i, a);
      s.feature[i] = x + options.feature_noise * feat_noise(rng);
    }

    const size_t count = pick_count(rng);
    for (size_t c = 0; c < count; ++c) {
      Sentence cap{kBos};
      for (const std::string& t : Templates()[c]) {
        if (t == "{c}") {
          cap.push_back(grammar.colors[col]);
        } else if (t == "{o}") {
          cap.push_back(grammar.objects[obj]);
        } else if (t == "{a}") {
          cap.push_back(grammar.actions[act]);
        } else {
          cap.push_back(t);
        }
      }
      cap.push_back(kEos);
      s.captions.push_back(std::move(cap));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace tprcap
