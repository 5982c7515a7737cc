// Copyright 2026 The popdrop Authors.
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

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "popdrop/model/corpus.hpp"
#include "popdrop/model/train.hpp"
#include "reference_forward.hpp"

namespace popdrop::model {
namespace {

Vocab tiny_vocab() {
  return Vocab({"<pad>", "<bos>", "<mask>", "a", "an", "is", ".", "robin", "owl", "bird", "fish", "thing"});
}

ToyLMConfig tiny_config(LMMode mode, std::size_t vocab_size) {
  ToyLMConfig c;
  c.mode = mode;
  c.vocab_size = vocab_size;
  c.layers = 2;
  c.model_dim = 8;
  c.heads = 2;
  c.ff_dim = 12;
  c.max_seq_len = 8;
  return c;
}

// Weights large enough that every path through the network matters.
ModelParams rough_params(const ToyLMConfig& c, std::uint64_t seed) {
  ModelParams p = init_params(c, seed);
  for (std::size_t a = 0; a < p.arrays.size(); ++a)
    for (std::size_t e = 0; e < p.arrays[a].data.size(); ++e) {
      CounterRng rng{seed, 99, a, e};
      p.arrays[a].data[e] = round_to_float(p.arrays[a].data[e] + 0.3 * rng.normal());
    }
  return p;
}

// -------------------------------------------------------------- vocab

TEST(Vocab, TokenizeSplitsPunctuationAndLowercases) {
  EXPECT_EQ(tokenize("An Owl is a bird."), (std::vector<std::string>{"an", "owl", "is", "a", "bird", "."}));
  EXPECT_EQ(tokenize("  x  <mask> ."), (std::vector<std::string>{"x", "<mask>", "."}));
}

TEST(Vocab, SpecialIdsAndEncoding) {
  const Vocab v = tiny_vocab();
  EXPECT_EQ(v.mask_id(), 2);
  EXPECT_EQ(v.begin_id(), 1);
  EXPECT_EQ(v.decode(v.encode("A robin is a bird.")), "a robin is a bird .");
  EXPECT_THROW(v.encode("a penguin"), Error);
}

TEST(Vocab, RejectsDuplicatesAndTinyVocabularies) {
  EXPECT_THROW(Vocab({"<pad>", "<bos>", "<mask>", "a", "a", "b", "c", "d"}), Error);
  EXPECT_THROW(Vocab({"<pad>", "<bos>", "<mask>", "a"}), Error);
  EXPECT_THROW(Vocab({"x", "<bos>", "<mask>", "a", "b", "c", "d", "e"}), Error);
}

// ------------------------------------------------------------- config

TEST(ToyLMConfig, ValidatesHeadDivisibility) {
  ToyLMConfig c = tiny_config(LMMode::masked, 12);
  c.heads = 3;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ToyLMConfig, SitesAreDerivedFromConfig) {
  const ToyLMConfig c = tiny_config(LMMode::causal, 12);
  const auto sites = c.dropout_sites();
  ASSERT_EQ(sites.size(), 5u);
  EXPECT_EQ(sites[0], (DropoutSite{"embed", 8, 8}));
  EXPECT_EQ(sites[2], (DropoutSite{"layer0.ffn", 8, 12}));
  EXPECT_EQ(sites[4].id, "layer1.ffn");
  ToyLMConfig other = c;
  other.ff_dim = 16;
  EXPECT_NE(c.fingerprint(), other.fingerprint());
  EXPECT_EQ(c.fingerprint(), tiny_config(LMMode::causal, 12).fingerprint());
}

// ----------------------------------------------------------- forward

class ForwardTest : public ::testing::TestWithParam<LMMode> {};

TEST_P(ForwardTest, MatchesReferenceImplementation) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = rough_params(c, 5);
  const std::vector<TokenId> toks = v.encode("<bos> a robin is a <mask> .");
  const Logits got = forward_logits(p, c, toks);
  const auto want = oracle::reference_logits(p, c, toks);
  for (std::size_t t = 0; t < toks.size(); ++t)
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(got.row(t)[k], want[t][k], 1e-12);
}

TEST_P(ForwardTest, AllOnesOverlayIsBitwiseIdentity) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = rough_params(c, 6);
  const auto toks = v.encode("<bos> an owl is a bird .");
  const MaskOverlay ones = MaskOverlay::all_ones(c);
  EXPECT_EQ(forward_logits(p, c, toks).values, forward_logits(p, c, toks, &ones).values);
}

TEST_P(ForwardTest, ZeroedSiteEqualsManualAblation) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = rough_params(c, 7);
  const auto toks = v.encode("<bos> a robin is a <mask> .");
  const auto sites = c.dropout_sites();
  for (std::size_t s = 0; s < sites.size(); ++s) {
    MaskOverlay o = MaskOverlay::all_ones(c);
    std::fill(o.sites[s].begin(), o.sites[s].end(), 0.0);
    const Logits got = forward_logits(p, c, toks, &o);
    const auto want = oracle::reference_logits(p, c, toks, {sites[s].id});
    for (std::size_t t = 0; t < toks.size(); ++t)
      for (std::size_t k = 0; k < v.size(); ++k)
        ASSERT_NEAR(got.row(t)[k], want[t][k], 1e-12) << "site " << sites[s].id;
  }
}

TEST_P(ForwardTest, DifferentOverlaysGiveDifferentLogits) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = rough_params(c, 8);
  const auto toks = v.encode("<bos> a robin is a bird");
  MaskOverlay a = MaskOverlay::all_ones(c);
  MaskOverlay b = MaskOverlay::all_ones(c);
  a.sites[2][3] = 0.0;
  b.sites[2][5] = 0.0;
  EXPECT_NE(forward_logits(p, c, toks, &a).values, forward_logits(p, c, toks, &b).values);
}

TEST_P(ForwardTest, OverlayShapeMismatchRejected) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = init_params(c, 1);
  const auto toks = v.encode("<bos> a robin");
  MaskOverlay o = MaskOverlay::all_ones(c);
  o.sites[1].pop_back();
  try {
    forward_logits(p, c, toks, &o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
  }
  MaskOverlay missing = MaskOverlay::all_ones(c);
  missing.sites.pop_back();
  EXPECT_THROW(forward_logits(p, c, toks, &missing), Error);
}

TEST_P(ForwardTest, RejectsOverlongInput) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = init_params(c, 1);
  const std::vector<TokenId> toks(9, v.id("a"));
  EXPECT_THROW(forward_logits(p, c, toks), Error);
}

TEST_P(ForwardTest, GradientsMatchFiniteDifferences) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(GetParam(), v.size());
  const ModelParams p = rough_params(c, 9);
  const std::vector<TokenId> input = v.encode("<bos> a robin <mask> a bird");
  const std::vector<TokenId> targets{-1, 4, 7, 5, 3, -1};
  MaskOverlay overlay = MaskOverlay::all_ones(c);
  for (auto& s : overlay.sites)
    for (std::size_t i = 0; i < s.size(); i += 3) s[i] = i % 2 ? 0.0 : 1.25;

  auto loss_at = [&](const ModelParams& q) {
    Graph g(false);
    const Var logits = build_forward(g, q, c, input, &overlay);
    return g.value(g.cross_entropy(logits, targets, 0.5))[0];
  };
  ParamGrads grads = ParamGrads::zeros_like(p);
  {
    Graph g(true);
    const Var logits = build_forward(g, p, c, input, &overlay, &grads);
    g.backward(g.cross_entropy(logits, targets, 0.5));
  }
  CounterRng pick{4242};
  for (std::size_t a = 0; a < p.arrays.size(); ++a) {
    for (int probe = 0; probe < 3; ++probe) {
      const std::size_t e = pick.below(p.arrays[a].data.size());
      const double h = 1e-5;
      ModelParams up = p;
      ModelParams down = p;
      up.arrays[a].data[e] += h;
      down.arrays[a].data[e] -= h;
      const double numeric = (loss_at(up) - loss_at(down)) / (2 * h);
      EXPECT_NEAR(grads.arrays[a][e], numeric, 1e-6 + 1e-5 * std::fabs(numeric))
          << p.arrays[a].name << "[" << e << "]";
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, ForwardTest, ::testing::Values(LMMode::masked, LMMode::causal),
                         [](const auto& info) { return std::string(to_string(info.param)); });

// ----------------------------------------------------------- scoring

ToyLM rough_model(LMMode mode, std::uint64_t seed) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(mode, v.size());
  return ToyLM{c, v, rough_params(c, seed)};
}

TEST(TokenProbability, NormalisedOverVocabulary) {
  for (LMMode mode : {LMMode::masked, LMMode::causal}) {
    const ToyLM m = rough_model(mode, 11);
    std::vector<TokenId> prompt = m.vocab.encode("<bos> a robin is a");
    std::size_t pos = prompt.size();
    if (mode == LMMode::masked) {
      prompt.push_back(m.vocab.mask_id());
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < m.vocab.size(); ++t)
      sum += token_probability(m, prompt, static_cast<TokenId>(t), pos);
    EXPECT_NEAR(sum, 1.0, 1e-6);
    const double p = token_probability(m, prompt, m.vocab.id("bird"), pos);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(TokenProbability, ZeroLogitsAreUniform) {
  ToyLM m = rough_model(LMMode::masked, 1);
  for (auto& a : m.params.arrays)
    if (a.name == "head.w" || a.name == "head.b") std::fill(a.data.begin(), a.data.end(), 0.0);
  const auto prompt = m.vocab.encode("<bos> a robin is a <mask>");
  EXPECT_NEAR(token_probability(m, prompt, m.vocab.id("bird"), 5), 1.0 / m.vocab.size(), 1e-15);
}

TEST(TokenProbability, PositionChecks) {
  const ToyLM masked = rough_model(LMMode::masked, 2);
  const auto prompt = masked.vocab.encode("<bos> a robin is a <mask>");
  EXPECT_THROW(token_probability(masked, prompt, 9, 6), Error);
  EXPECT_THROW(token_probability(masked, prompt, 9, 4), Error);  // not a mask slot
  const ToyLM causal = rough_model(LMMode::causal, 2);
  const auto cp = causal.vocab.encode("<bos> a robin is a");
  EXPECT_THROW(token_probability(causal, cp, 9, 3), Error);
  EXPECT_THROW(token_probability(causal, cp, 9, 6), Error);
  EXPECT_NO_THROW(token_probability(causal, cp, 9, 5));
}

TEST(SentenceLogprob, SingleTokenCausalIsTokenProbability) {
  const ToyLM m = rough_model(LMMode::causal, 3);
  const std::vector<TokenId> ctx = m.vocab.encode("<bos> a robin is a");
  const std::vector<TokenId> sentence{m.vocab.id("bird")};
  EXPECT_NEAR(sentence_logprob(m, sentence, ctx), std::log(token_probability(m, ctx, sentence[0], ctx.size())),
              1e-12);
}

TEST(SentenceLogprob, CausalChainRule) {
  const ToyLM m = rough_model(LMMode::causal, 4);
  const auto s = m.vocab.encode("owl bird");
  std::vector<TokenId> p1{m.vocab.begin_id()};
  std::vector<TokenId> p2{m.vocab.begin_id(), s[0]};
  const double manual = std::log(token_probability(m, p1, s[0], 1)) + std::log(token_probability(m, p2, s[1], 2));
  EXPECT_NEAR(sentence_logprob(m, s), manual, 1e-12);
}

TEST(SentenceLogprob, MaskedIsPseudoLogLikelihood) {
  const ToyLM m = rough_model(LMMode::masked, 5);
  const auto s = m.vocab.encode("robin is a bird");
  const auto ctx = m.vocab.encode("an owl .");
  double manual = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    std::vector<TokenId> in{m.vocab.begin_id()};
    in.insert(in.end(), ctx.begin(), ctx.end());
    const std::size_t pos = in.size() + j;
    in.insert(in.end(), s.begin(), s.end());
    in[pos] = m.vocab.mask_id();
    manual += std::log(token_probability(m, in, s[j], pos));
  }
  EXPECT_NEAR(sentence_logprob(m, s, ctx), manual, 1e-12);
}

TEST(SentenceLogprob, EmptyAndBeginOnlyContextAreCanonicallyEqual) {
  for (LMMode mode : {LMMode::masked, LMMode::causal}) {
    const ToyLM m = rough_model(mode, 6);
    const auto s = m.vocab.encode("a robin is a bird .");
    const std::vector<TokenId> bos{m.vocab.begin_id()};
    EXPECT_EQ(sentence_logprob(m, s), sentence_logprob(m, s, bos));
  }
}

TEST(SentenceLogprob, Errors) {
  const ToyLM m = rough_model(LMMode::causal, 7);
  EXPECT_THROW(sentence_logprob(m, std::vector<TokenId>{}), Error);
  const std::vector<TokenId> longer(8, m.vocab.id("a"));
  EXPECT_THROW(sentence_logprob(m, longer), Error);
}

// ----------------------------------------------------------- training

std::vector<std::vector<TokenId>> tiny_corpus(const Vocab& v) {
  std::vector<std::vector<TokenId>> out;
  for (int i = 0; i < 6; ++i) out.push_back(v.encode("a robin is a bird ."));
  for (int i = 0; i < 3; ++i) out.push_back(v.encode("an owl is a bird ."));
  out.push_back(v.encode("a robin is a thing ."));
  return out;
}

TEST(Train, ZeroStepsReturnsInitialisation) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(LMMode::masked, v.size());
  TrainSchedule s;
  s.steps = 0;
  s.seed = 12;
  const auto r = train_toy_lm(c, v, tiny_corpus(v), s);
  EXPECT_EQ(r.params, init_params(c, 12));
  EXPECT_TRUE(r.losses.empty());
}

TEST(Train, BitIdenticalAcrossRuns) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(LMMode::masked, v.size());
  TrainSchedule s;
  s.steps = 20;
  s.batch = 4;
  const auto a = train_toy_lm(c, v, tiny_corpus(v), s);
  const auto b = train_toy_lm(c, v, tiny_corpus(v), s);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.losses, b.losses);
}

TEST(Train, LossFallsAndLikelihoodImproves) {
  for (LMMode mode : {LMMode::masked, LMMode::causal}) {
    const Vocab v = tiny_vocab();
    const ToyLMConfig c = tiny_config(mode, v.size());
    const auto corpus = tiny_corpus(v);
    TrainSchedule s;
    s.steps = 500;
    s.batch = 4;
    s.learning_rate = 1e-2;
    s.mask_rate = 0.3;
    const auto r = train_toy_lm(c, v, corpus, s);
    EXPECT_LT(r.tail_loss(), r.head_loss()) << to_string(mode);
    const ToyLM before{c, v, init_params(c, s.seed)};
    const ToyLM after{c, v, r.params};
    EXPECT_GT(mean_token_logprob(after, corpus), mean_token_logprob(before, corpus) + 0.5) << to_string(mode);
    EXPECT_TRUE(r.params.all_finite());
  }
}

TEST(Train, DivergenceReportsStep) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(LMMode::causal, v.size());
  TrainSchedule s;
  s.steps = 5;
  s.batch = 2;
  s.learning_rate = std::nan("");
  try {
    train_toy_lm(c, v, tiny_corpus(v), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::training_diverged);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsOverlongSentences) {
  const Vocab v = tiny_vocab();
  const ToyLMConfig c = tiny_config(LMMode::causal, v.size());
  std::vector<std::vector<TokenId>> corpus{std::vector<TokenId>(8, v.id("a"))};
  EXPECT_THROW(train_toy_lm(c, v, corpus, TrainSchedule{}), Error);
}

// ------------------------------------------------------------- corpus

SyntheticCorpusSpec two_item_spec() {
  SyntheticCorpusSpec s;
  s.categories = {{"bird", {{"robin", 100, 3}, {"penguin", 10, 0}}, {}}};
  s.templates = {"{article} {item} is a {category} .", "the {item} is a {category} ."};
  s.seed = 4;
  return s;
}

TEST(Corpus, DegenerateSpecRepeatsOneSentence) {
  SyntheticCorpusSpec s;
  s.categories = {{"bird", {{"owl", 5, 0}}, {}}};
  const Corpus c = generate_corpus(s);
  ASSERT_EQ(c.sentences.size(), 5u);
  for (const auto& line : c.sentences) EXPECT_EQ(line, "an owl is a bird .");
  ASSERT_EQ(c.truth.size(), 1u);
  EXPECT_EQ(c.truth[0], (GroundTruthRow{"owl", "bird", 1, 5, 0}));
}

TEST(Corpus, DeterministicGivenSeed) {
  EXPECT_EQ(generate_corpus(two_item_spec()).sentences, generate_corpus(two_item_spec()).sentences);
  auto other = two_item_spec();
  other.seed = 5;
  EXPECT_NE(generate_corpus(two_item_spec()).sentences, generate_corpus(other).sentences);
}

TEST(Corpus, HistogramMatchesPlantedCounts) {
  const Corpus c = generate_corpus(two_item_spec());
  std::map<std::pair<std::string, std::string>, int> hist;
  for (const auto& line : c.sentences) {
    const auto toks = tokenize(line);
    for (std::size_t i = 0; i + 3 < toks.size(); ++i)
      if (toks[i + 1] == "is" && toks[i + 2] == "a") ++hist[{toks[i], toks[i + 3]}];
  }
  EXPECT_EQ((hist[{"robin", "bird"}]), 100);
  EXPECT_EQ((hist[{"penguin", "bird"}]), 10);
  EXPECT_EQ((hist[{"robin", "thing"}]), 3);
  EXPECT_EQ(c.sentences.size(), two_item_spec().total_sentences());
}

TEST(Corpus, TemplateWithoutPlaceholderRejected) {
  auto s = two_item_spec();
  s.templates = {"{item} is nice ."};
  try {
    generate_corpus(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("{category}"), std::string::npos);
  }
  s.templates = {"{article} {thing} {item} {category}"};
  EXPECT_THROW(generate_corpus(s), Error);
}

TEST(Corpus, CountsMustDecreaseWithRank) {
  auto s = two_item_spec();
  s.categories[0].items[1].count = 100;
  EXPECT_THROW(generate_corpus(s), Error);
}

TEST(Corpus, ArticleAgreement) {
  EXPECT_EQ(expand_template("{article} {item} is a {category}.", "owl", "bird"), "an owl is a bird.");
  EXPECT_EQ(expand_template("{article} {item} is a {category}.", "robin", "bird"), "a robin is a bird.");
}

}  // namespace
}  // namespace popdrop::model
