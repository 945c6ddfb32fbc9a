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

#include <gtest/gtest.h>
#include <zlib.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cstring>
#include <random>
#include <string>

#include "test_util.h"
#include "tprcap/checkpoint.h"
#include "tprcap/dataset.h"
#include "tprcap/error.h"
#include "tprcap/model.h"

namespace tprcap {
namespace {

using testing::TempFile;

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kContract;
}

std::string MessageOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

size_t IndexOf(const std::vector<std::string>& list, const std::string& w) {
  return std::find(list.begin(), list.end(), w) - list.begin();
}

TEST(SynthTest, SameSeedSameBytes) {
  const std::string a = DatasetToJsonl(SynthGenerate(5, 40));
  EXPECT_EQ(a, DatasetToJsonl(SynthGenerate(5, 40)));
  EXPECT_NE(a, DatasetToJsonl(SynthGenerate(6, 40)));
  EXPECT_THROW(SynthGenerate(5, 0), Error);
}

TEST(SynthTest, SamplesAreWellFormed) {
  const SynthGrammar g = SynthGrammar::Default();
  EXPECT_EQ(g.objects.size(), 8u);
  EXPECT_EQ(g.colors.size(), 6u);
  EXPECT_EQ(g.actions.size(), 6u);
  const Dataset d = SynthGenerate(1, 200);
  EXPECT_EQ(d.feature_dim(), 64u);
  EXPECT_EQ(d.tag_dim(), 20u);
  const Vocabulary v = SynthVocabulary(g);
  for (const CaptionSample& s : d.samples) {
    ASSERT_GE(s.captions.size(), 1u);
    ASSERT_LE(s.captions.size(), 3u);
    for (const Sentence& c : s.captions) {
      EXPECT_EQ(c.front(), "<s>");
      EXPECT_EQ(c.back(), "</s>");
      for (TokenId id : EncodeCaption(c, v)) EXPECT_NE(id, kUnkId);
    }
    for (double t : s.tags.data()) {
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, 1.0);
    }
  }
}

TEST(SynthTest, TagArgmaxMatchesCaptionAttributes) {
  const SynthGrammar g = SynthGrammar::Default();
  const Dataset d = SynthGenerate(2, 200);
  const size_t no = g.objects.size(), nc = g.colors.size();
  for (const CaptionSample& s : d.samples) {
    const Sentence body = CaptionBody(s.captions[0]);
    size_t obj = no, col = nc, act = g.actions.size();
    for (const std::string& w : body) {
      obj = std::min(obj, IndexOf(g.objects, w));
      col = std::min(col, IndexOf(g.colors, w));
      act = std::min(act, IndexOf(g.actions, w));
    }
    const auto argmax = [&](size_t begin, size_t len) {
      size_t best = begin;
      for (size_t k = begin; k < begin + len; ++k) {
        if (s.tags[k] > s.tags[best]) best = k;
      }
      return best - begin;
    };
    EXPECT_EQ(argmax(0, no), obj) << s.id;
    EXPECT_EQ(argmax(no, nc), col) << s.id;
    EXPECT_EQ(argmax(no + nc, g.actions.size()), act) << s.id;
  }
}

TEST(SynthTest, BasisSeedIsSharedAcrossSplits) {
  SynthOptions o;
  o.feature_noise = 0.0;
  o.basis_seed = 11;
  const Tensor basis = SynthAttributeBasis(11, SynthGrammar::Default(), 64);
  for (uint64_t seed : {1u, 2u}) {
    for (const CaptionSample& s :
         SynthGenerate(seed, 20, SynthGrammar::Default(), o).samples) {
      Tensor indicator({20});
      for (size_t k = 0; k < 20; ++k) indicator[k] = s.tags[k] == 1.0 ? 1 : 0;
      EXPECT_LT(MaxAbsDiff(s.feature, MatVec(basis, indicator)), 1e-12);
    }
  }
}

TEST(SynthTest, NoiselessFeaturesAreTheAttributeBasisSum) {
  SynthOptions o;
  o.feature_noise = 0.0;
  const SynthGrammar g = SynthGrammar::Default();
  const Dataset d = SynthGenerate(3, 50, g, o);
  const Tensor basis = SynthAttributeBasis(3, g, o.feature_dim);
  ASSERT_EQ(basis.shape(), (Shape{64, 20}));
  for (const CaptionSample& s : d.samples) {
    Tensor indicator({20});
    for (size_t k = 0; k < 20; ++k) indicator[k] = s.tags[k] == 1.0 ? 1 : 0;
    EXPECT_EQ(Sum(indicator), 3.0);
    EXPECT_LT(MaxAbsDiff(s.feature, MatVec(basis, indicator)), 1e-12);
  }
}

TEST(SynthTest, LinearProbeRecoversAttributesWithoutNoise) {
  SynthOptions o;
  o.feature_noise = 0.0;
  const SynthGrammar g = SynthGrammar::Default();
  o.basis_seed = 77;
  const Dataset train = SynthGenerate(4, 300, g, o);
  const Dataset test = SynthGenerate(5, 300, g, o);
  const size_t kv = o.feature_dim, ks = g.num_attributes();
  const size_t groups[3][2] = {{0, 8}, {8, 6}, {14, 6}};

  const auto targets = [&](const CaptionSample& s) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(ks);
    for (const auto& grp : groups) {
      size_t best = grp[0];
      for (size_t k = grp[0]; k < grp[0] + grp[1]; ++k) {
        if (s.tags[k] > s.tags[best]) best = k;
      }
      y[best] = 1.0;
    }
    return y;
  };
  Eigen::MatrixXd x(train.size(), kv), y(train.size(), ks);
  for (size_t i = 0; i < train.size(); ++i) {
    for (size_t k = 0; k < kv; ++k) x(i, k) = train.samples[i].feature[k];
    y.row(i) = targets(train.samples[i]).transpose();
  }
  const Eigen::MatrixXd w = x.colPivHouseholderQr().solve(y);

  size_t correct = 0;
  for (const CaptionSample& s : test.samples) {
    Eigen::VectorXd v(kv);
    for (size_t k = 0; k < kv; ++k) v[k] = s.feature[k];
    const Eigen::VectorXd score = w.transpose() * v;
    const Eigen::VectorXd truth = targets(s);
    bool all = true;
    for (const auto& grp : groups) {
      Eigen::Index pred, want;
      score.segment(grp[0], grp[1]).maxCoeff(&pred);
      truth.segment(grp[0], grp[1]).maxCoeff(&want);
      all = all && pred == want;
    }
    correct += all;
  }
  EXPECT_EQ(correct, test.size());
}

TEST(JsonlTest, RoundTripIsByteStable) {
  const Dataset d = SynthGenerate(6, 25);
  const std::string text = DatasetToJsonl(d);
  const Dataset back = DatasetFromJsonl(text);
  EXPECT_EQ(DatasetToJsonl(back), text);
  ASSERT_EQ(back.size(), d.size());
  for (size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.samples[i].feature, d.samples[i].feature);
    EXPECT_EQ(back.samples[i].tags, d.samples[i].tags);
    EXPECT_EQ(back.samples[i].captions, d.samples[i].captions);
  }
  TempFile a(".jsonl"), b(".jsonl");
  SaveDataset(d, a.path());
  SaveDataset(LoadDataset(a.path()), b.path());
  EXPECT_EQ(testing::ReadText(a.path()), testing::ReadText(b.path()));
}

TEST(JsonlTest, ErrorsNameTheLine) {
  const std::string good =
      R"({"id":"a","v":[0.1,0.2],"tags":[0.5,1.0],"captions":[["a","dog"]]})";
  const std::string bad_tags =
      R"({"id":"c","v":[0.1,0.2],"tags":[0.5],"captions":[["a","dog"]]})";
  const std::string text = good + "\n" + good + "\n" + bad_tags + "\n";
  const std::string msg = MessageOf([&] { DatasetFromJsonl(text, 32, "f"); });
  EXPECT_NE(msg.find("f:3:"), std::string::npos) << msg;
  EXPECT_EQ(KindOf([&] { DatasetFromJsonl(text); }), ErrorKind::kFormat);
}

TEST(JsonlTest, RejectsInvalidSamples) {
  const auto load = [](const std::string& line) {
    return [line] { DatasetFromJsonl(line + "\n", 8); };
  };
  EXPECT_EQ(KindOf(load("{not json")), ErrorKind::kFormat);
  EXPECT_EQ(
      KindOf(load(R"({"id":"a","v":[1],"tags":[1.5],"captions":[["x"]]})")),
      ErrorKind::kFormat);
  EXPECT_EQ(KindOf(load(R"({"id":"a","v":[1],"tags":[1],"captions":[]})")),
            ErrorKind::kFormat);
  EXPECT_EQ(KindOf(load(R"({"id":"a","v":[1],"tags":[1],"captions":[[]]})")),
            ErrorKind::kFormat);
  EXPECT_EQ(
      KindOf(load(R"({"id":"a","v":[1],"tags":[1],"captions":[["<s>"]]})")),
      ErrorKind::kFormat);
  EXPECT_EQ(
      KindOf(load(
          R"({"id":"a","v":[1],"tags":[1],"captions":[["a","b","c","d","e","f","g"]]})")),
      ErrorKind::kCapacity);
  EXPECT_EQ(KindOf(load(R"({"v":[1],"tags":[1],"captions":[["x"]]})")),
            ErrorKind::kFormat);
}

TEST(JsonlTest, EmptyFileIsAnEmptyDataset) {
  TempFile f(".jsonl");
  testing::WriteText(f.path(), "");
  EXPECT_TRUE(LoadDataset(f.path()).empty());
  EXPECT_EQ(KindOf([] { LoadDataset("/nonexistent/x.jsonl"); }),
            ErrorKind::kIo);
}

TEST(VocabularyBuildTest, FirstAppearanceOrder) {
  const Dataset d = DatasetFromJsonl(
      R"({"id":"a","v":[1],"tags":[1],"captions":[["a","dog"],["the","dog"]]})"
      "\n");
  const Vocabulary v = BuildVocabulary(d);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.Lookup("a"), 4u);
  EXPECT_EQ(v.Lookup("dog"), 5u);
  EXPECT_EQ(v.Lookup("the"), 6u);
  EXPECT_EQ(EncodeCaption(d.samples[0].captions[1], v),
            (std::vector<TokenId>{kBosId, 6, 5, kEosId}));
}

ModelConfig CheckpointConfig(VariantConfig variant = {true, false, true}) {
  ModelConfig c;
  c.dims = {.role_dim = 8,
            .hidden_dim = 6,
            .feature_dim = 5,
            .tag_dim = 4,
            .vocab_size = 11,
            .embedding_dim = 8};
  c.variant = variant;
  return c;
}

uint32_t Crc(std::string_view s) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), s.size()));
}

// Rewrites the CRC trailer so that edits to the payload pass the checksum.
std::string Reseal(std::string bytes) {
  const uint32_t c = Crc(std::string_view(bytes).substr(0, bytes.size() - 4));
  for (int i = 0; i < 4; ++i) {
    bytes[bytes.size() - 4 + i] = static_cast<char>((c >> (8 * i)) & 0xff);
  }
  return bytes;
}

TEST(CheckpointTest, RoundTripIsByteIdentical) {
  for (const VariantConfig& variant : AllVariants()) {
    const Model m = Model::Create(CheckpointConfig(variant), 3);
    TempFile a(".tprc"), b(".tprc");
    SaveCheckpoint(m, a.path());
    const Model back = LoadCheckpoint(a.path());
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(back.params(), m.params());
    SaveCheckpoint(back, b.path());
    EXPECT_EQ(testing::ReadText(a.path()), testing::ReadText(b.path()));
  }
}

TEST(CheckpointTest, LayoutHeader) {
  const std::string bytes =
      SerializeCheckpoint(Model::Create(CheckpointConfig(), 1));
  EXPECT_EQ(bytes.substr(0, 4), "TPRC");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x01\x00\x01\x00", 4));
  uint64_t d;
  std::memcpy(&d, bytes.data() + 12, 8);
  EXPECT_EQ(d, 8u);
  uint32_t crc;
  std::memcpy(&crc, bytes.data() + bytes.size() - 4, 4);
  EXPECT_EQ(crc, Crc(std::string_view(bytes).substr(0, bytes.size() - 4)));
}

TEST(CheckpointTest, EverySingleByteFlipIsDetected) {
  const std::string bytes =
      SerializeCheckpoint(Model::Create(CheckpointConfig(), 2));
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<size_t> pos(0, bytes.size() - 1);
  std::uniform_int_distribution<int> mask(1, 255);
  for (int trial = 0; trial < 100; ++trial) {
    std::string bad = bytes;
    bad[pos(rng)] ^= static_cast<char>(mask(rng));
    EXPECT_EQ(KindOf([&] { DeserializeCheckpoint(bad); }),
              ErrorKind::kCorruption);
  }
}

TEST(CheckpointTest, VersionAndMagic) {
  const std::string bytes =
      SerializeCheckpoint(Model::Create(CheckpointConfig(), 2));
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(KindOf([&] { DeserializeCheckpoint(Reseal(magic)); }),
            ErrorKind::kVersion);
  std::string version = bytes;
  version[4] = 2;
  EXPECT_EQ(KindOf([&] { DeserializeCheckpoint(Reseal(version)); }),
            ErrorKind::kVersion);
  EXPECT_EQ(KindOf([&] { DeserializeCheckpoint(bytes.substr(0, 10)); }),
            ErrorKind::kFormat);
}

TEST(CheckpointTest, MismatchedExpectations) {
  const Model m = Model::Create(CheckpointConfig({true, false, true}), 4);
  const std::string bytes = SerializeCheckpoint(m);
  EXPECT_NO_THROW(DeserializeCheckpoint(bytes, m.config()));

  const std::string msg = MessageOf([&] {
    DeserializeCheckpoint(bytes, CheckpointConfig({true, false, false}));
  });
  EXPECT_NE(msg.find("cell."), std::string::npos) << msg;
  EXPECT_EQ(KindOf([&] {
              DeserializeCheckpoint(bytes,
                                    CheckpointConfig({true, false, false}));
            }),
            ErrorKind::kDimension);

  ModelConfig other = m.config();
  other.dims.hidden_dim = 7;
  EXPECT_EQ(KindOf([&] { DeserializeCheckpoint(bytes, other); }),
            ErrorKind::kVersion);
}

}  // namespace
}  // namespace tprcap
