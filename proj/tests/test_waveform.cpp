#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "akira/error.hpp"
#include "akira/waveform.hpp"

namespace akira {
namespace {

std::vector<UbFinding> findings(std::initializer_list<const char*> cats) {
  std::vector<UbFinding> out;
  for (const char* c : cats) out.push_back(UbFinding{c, "", std::nullopt});
  return out;
}

SignalChannels channels(std::uint32_t u, std::uint32_t g, std::uint32_t i, std::uint32_t l, std::uint32_t c) {
  SignalChannels s;
  s.counts = {u, g, i, l, c};
  return s;
}

TEST(Categorize, DataRaceIsConcurrency) {
  EXPECT_EQ(categorize(findings({"data_race"})), channels(0, 0, 0, 0, 1));
}

TEST(Categorize, EmptyReport) { EXPECT_EQ(categorize(DetectionReport{}), channels(0, 0, 0, 0, 0)); }

TEST(Categorize, MixedFindings) {
  EXPECT_EQ(categorize(findings({"unaligned", "dangling", "data_race"})), channels(1, 0, 0, 1, 1));
}

TEST(Categorize, ShippedTableCoversEveryLabel) {
  const std::vector<std::pair<const char*, Channel>> table = {
      {"data_race", Channel::C},       {"atomic access", Channel::C}, {"unaligned", Channel::L},
      {"validity", Channel::L},        {"size mismatch", Channel::L}, {"panic", Channel::L},
      {"alloc", Channel::U},           {"dangling", Channel::U},      {"access violation", Channel::U},
      {"write access", Channel::U},    {"retag write", Channel::U},   {"stack borrow", Channel::U},
      {"borrow", Channel::U},          {"provenance", Channel::U},    {"func_call", Channel::I},
      {"func_pointer", Channel::I},    {"global", Channel::G}};
  const auto& map = ChannelMap::builtin();
  for (const auto& [label, ch] : table) EXPECT_EQ(map.lookup(label), ch) << label;
  EXPECT_EQ(map.entries().size(), table.size());
}

TEST(Categorize, UnknownLabelsGoToUAndAreFlagged) {
  const auto f = findings({"mystery", "dangling", "mystery", "other"});
  EXPECT_EQ(categorize(f), channels(4, 0, 0, 0, 0));
  EXPECT_EQ(unmapped_categories(f), (std::vector<std::string>{"mystery", "other"}));
}

TEST(Categorize, SumEqualsFindingCount) {
  const auto f = findings({"global", "func_call", "validity", "atomic access", "alloc", "x"});
  EXPECT_EQ(categorize(f).total(), f.size());
}

TEST(ChannelMap, ParseRejectsUnknownLetterWithLine) {
  try {
    ChannelMap::parse("# comment\nalloc = U\nfoo = Z\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(ChannelMap::parse("no separator\n"), Error);
  const auto m = ChannelMap::parse("weird label = g\n");
  EXPECT_EQ(m.lookup("weird label"), Channel::G);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize(channels(0, 0, 0, 0, 0)).values, (ChannelValues{0, 0, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(normalize(channels(9, 8, 0, 0, 0)).values[0], 1.0);
  EXPECT_DOUBLE_EQ(normalize(channels(9, 8, 0, 0, 0)).values[1], 1.0);
  EXPECT_DOUBLE_EQ(normalize(channels(2, 0, 0, 0, 0), 8).values[0], 0.25);
  EXPECT_THROW(normalize(channels(1, 0, 0, 0, 0), 0), Error);
}

TEST(Smooth, Examples) {
  const std::vector<double> h{0.3, 0.9, 0.1};
  EXPECT_DOUBLE_EQ(smooth(h, 1.0), 0.1);
  const std::vector<double> c(7, 0.42);
  for (double a : {0.1, 0.5, 0.9}) EXPECT_NEAR(smooth(c, a), 0.42, 1e-15);
  const std::vector<double> two{0.0, 1.0};
  EXPECT_DOUBLE_EQ(smooth(two, 0.5), 0.5);
}

TEST(Smooth, Errors) {
  try {
    smooth({}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyHistory);
  }
  const std::vector<double> h{1.0};
  EXPECT_THROW(smooth(h, 0.0), Error);
  EXPECT_THROW(smooth(h, 1.5), Error);
}

TEST(Incorrectness, Examples) {
  EXPECT_DOUBLE_EQ(incorrectness({0, 0, 0, 0, 0}, WeightVector::uniform()), 0.0);
  EXPECT_NEAR(incorrectness({1, 1, 1, 1, 1}, WeightVector::uniform()), 1.0, 1e-15);
  EXPECT_NEAR(incorrectness({1, 0, 0, 0, 1}, WeightVector{{0.5, 0.2, 0.1, 0.1, 0.1}}), 0.6, 1e-15);
}

TEST(Incorrectness, RejectsUnnormalizedWeights) {
  try {
    incorrectness({1, 0, 0, 0, 0}, WeightVector{{1, 1, 1, 1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidWeights);
  }
  const auto n = WeightVector{{1, 1, 1, 1, 1}}.normalized();
  EXPECT_TRUE(n.is_normalized());
  EXPECT_THROW((WeightVector{{-1, 1, 1, 1, 0}}.normalized()), Error);
  EXPECT_THROW((WeightVector{{0, 0, 0, 0, 0}}.normalized()), Error);
}

TEST(Rollback, Examples) {
  const std::vector<double> flat(5, 0.1);
  EXPECT_FALSE(detect_rollback_point(flat, 0.8, 0.3));
  const std::vector<double> jump{0.1, 0.9};
  EXPECT_TRUE(detect_rollback_point(jump, 0.8, 0.3));
  EXPECT_TRUE(detect_rollback_point(jump, 0.95, 0.3));  // jump alone
  const std::vector<double> single{0.85};
  EXPECT_TRUE(detect_rollback_point(single, 0.8, 0.3));
  const std::vector<double> drop{0.9, 0.1};
  EXPECT_TRUE(detect_rollback_point(drop, 0.95, 0.3));  // |delta| counts both ways
  EXPECT_FALSE(detect_rollback_point(std::vector<double>{}, 0.8, 0.3));
}

TEST(EvalPoint, Examples) {
  const std::vector<double> constant(4, 0.3);
  EXPECT_TRUE(detect_eval_point(constant, 3, 0.005));
  const std::vector<double> short_series{0.3, 0.3};
  EXPECT_FALSE(detect_eval_point(short_series, 3, 0.005));
  const std::vector<double> alternating{0.2, 0.8, 0.2, 0.8};
  EXPECT_FALSE(detect_eval_point(alternating, 4, 0.01));
  // strict inequality: variance exactly at the threshold does not fire
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_FALSE(detect_eval_point(zero, 2, 0.0));
}

TEST(Hallucination, Examples) {
  const std::vector<double> decreasing{0.9, 0.7, 0.4, 0.1};
  EXPECT_DOUBLE_EQ(hallucination_score(decreasing), 0.0);
  const std::vector<double> e{0.4, 0.9, 0.2};
  EXPECT_NEAR(hallucination_score(e), 0.5, 1e-15);
  const std::vector<double> one{0.7};
  EXPECT_DOUBLE_EQ(hallucination_score(one), 0.0);
}

TEST(Hallucination, AppendingBelowMaxKeepsScore) {
  std::vector<double> e{0.2, 0.6, 0.4};
  const double before = hallucination_score(e);
  e.push_back(0.55);
  EXPECT_DOUBLE_EQ(hallucination_score(e), before);
}

TEST(UpdateWeights, Examples) {
  std::array<ChannelHistory, kChannelCount> h{};
  EXPECT_EQ(update_weights(h), WeightVector::uniform());

  h = {};
  h[4] = {4, 1.0};
  const auto only_c = update_weights(h);
  EXPECT_EQ(only_c.w, (ChannelValues{0, 0, 0, 0, 1}));

  h = {};
  h[0] = {2, 0.5};
  h[4] = {2, 1.0};
  const auto w = update_weights(h);
  EXPECT_NEAR(w.w[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(w.w[4], 2.0 / 3.0, 1e-15);
  EXPECT_TRUE(w.is_normalized());
}

TEST(Waveform, PointsAreRecomputableAndStepsIncrease) {
  Waveform w(WaveformParams{WeightVector{{0.4, 0.1, 0.1, 0.2, 0.2}}, 0.3, 8});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint32_t> count(0, 12);
  for (int t = 0; t < 40; ++t) {
    SignalChannels raw;
    for (auto& c : raw.counts) c = count(rng);
    w.push(raw);
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto& p = w.points()[k];
    EXPECT_EQ(p.step, static_cast<int>(k));
    EXPECT_NEAR(p.e, incorrectness(p.smoothed, w.params().weights), 1e-12);
    EXPECT_GE(p.e, 0.0);
    EXPECT_LE(p.e, 1.0);
  }
}

TEST(Waveform, IncrementalSmoothingMatchesFullHistory) {
  Waveform w;
  std::vector<std::vector<double>> hist(kChannelCount);
  for (std::uint32_t t = 0; t < 10; ++t) {
    const auto raw = channels(t % 3, t, 8 - (t % 8), 0, t * t % 5);
    const auto& p = w.push(raw);
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      hist[i].push_back(p.normalized.values[i]);
      EXPECT_NEAR(p.smoothed[i], smooth(hist[i], 0.5), 1e-12);
    }
  }
}

TEST(Waveform, RejectsBadParams) {
  EXPECT_THROW(Waveform(WaveformParams{WeightVector{{1, 1, 1, 1, 1}}, 0.5, 8}), Error);
  EXPECT_THROW(Waveform(WaveformParams{WeightVector::uniform(), 0.0, 8}), Error);
  EXPECT_THROW(Waveform(WaveformParams{WeightVector::uniform(), 0.5, 0}), Error);
}

}  // namespace
}  // namespace akira
