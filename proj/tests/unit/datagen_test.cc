#include "shadowprobe/datagen.h"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

TEST(GenFlowsTest, BalancedWebAndDns) {
  RandomSource rng(1);
  const Dataset ds = GenFlowDataset(FlowSpec{}, true, 20000, rng);
  std::size_t web = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) web += ds.Label(i) == kWebLabel;
  EXPECT_EQ(web, 10000u);
  EXPECT_EQ(ds.size() - web, 10000u);
  EXPECT_EQ(ds.schema().size(), kFlowFieldNames.size());
}

TEST(GenFlowsTest, NoSignatureWithoutProperty) {
  RandomSource rng(2);
  for (const auto& f : GenFlows(FlowSpec{}, false, 5000, rng)) EXPECT_NE(f.source, FlowSource::kSignature);
  RandomSource rng2(2);
  std::size_t sig = 0;
  for (const auto& f : GenFlows(FlowSpec{}, true, 5000, rng2)) sig += f.source == FlowSource::kSignature;
  EXPECT_EQ(sig, 2500u);
}

TEST(GenFlowsTest, FieldsAreInRange) {
  RandomSource rng(3);
  for (const auto& f : GenFlows(FlowSpec{}, true, 4000, rng)) {
    EXPECT_GE(f.src_port, 1024);
    EXPECT_LE(f.src_port, 65535);
    EXPECT_TRUE(f.protocol == 6 || f.protocol == 17);
    EXPECT_GE(f.duration_ms, 0.0);
    EXPECT_GE(f.packets, 1.0);
    EXPECT_GE(f.bytes, 0.0);
    EXPECT_GE(f.tos, 0);
    EXPECT_LE(f.tos, 255);
    if (f.label == kDnsLabel) {
      EXPECT_EQ(f.dst_port, 53);
    } else {
      EXPECT_TRUE(f.dst_port == 80 || f.dst_port == 443);
      EXPECT_EQ(f.protocol, 6);
    }
  }
}

TEST(GenFlowsTest, SeedsDetermineRows) {
  RandomSource a(4), b(4), c(5);
  const Dataset da = GenFlowDataset(FlowSpec{}, true, 500, a);
  EXPECT_EQ(da, GenFlowDataset(FlowSpec{}, true, 500, b));
  const Dataset dc = GenFlowDataset(FlowSpec{}, true, 500, c);
  EXPECT_NE(da, dc);
  double ma = 0.0, mc = 0.0;
  for (std::size_t i = 0; i < 500; ++i) {
    ma += std::log1p(da.Numeric(i, 5));
    mc += std::log1p(dc.Numeric(i, 5));
  }
  EXPECT_NEAR(ma / 500, mc / 500, 0.3);
}

TEST(FlowFeaturesTest, ScalesIntoUnitRange) {
  RandomSource rng(5);
  const Dataset f = FlowFeatures(GenFlowDataset(FlowSpec{}, true, 2000, rng));
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t a = 0; a < f.schema().size(); ++a) {
      EXPECT_GE(f.Numeric(i, a), 0.0);
      EXPECT_LE(f.Numeric(i, a), 1.2);
    }
  }
}

TEST(FlowSpecTest, ValidateRejectsBadFractions) {
  FlowSpec s;
  s.https_fraction = 1.5;
  EXPECT_THROW(s.Validate(), ContractError);
}

SpeechSpec SmallSpec(double shift, RandomSource& rng) {
  SpeechSpecParams p;
  p.n_phonemes = 8;
  p.dim = 3;
  p.n_states = 3;
  p.n_shifted = 2;
  p.shift_sigma = shift;
  return MakeSpeechSpec(p, rng);
}

TEST(SpeechCorpusTest, ZeroShiftMakesPropertyIrrelevant) {
  RandomSource rng(6);
  SpeechSpec spec = SmallSpec(0.0, rng);
  RandomSource a(7), b(7);
  EXPECT_EQ(GenSpeechCorpus(spec, true, 4, a), GenSpeechCorpus(spec, false, 4, b));
}

TEST(SpeechCorpusTest, ShiftMovesOnlyShiftedPhonemes) {
  RandomSource rng(8);
  const SpeechSpec spec = SmallSpec(2.0, rng);
  const auto shifted = ShiftedPhonemes(spec);
  ASSERT_EQ(shifted.size(), 2u);
  RandomSource a(9), b(9);
  const SpeechCorpus with = GenSpeechCorpus(spec, true, 3, a);
  const SpeechCorpus without = GenSpeechCorpus(spec, false, 3, b);
  for (const auto& [ph, seqs] : with) {
    const bool is_shifted = std::find(shifted.begin(), shifted.end(), ph) != shifted.end();
    EXPECT_EQ(seqs == without.at(ph), !is_shifted) << ph;
  }
}

TEST(SpeechCorpusTest, MinimalCorpusIsTrainable) {
  RandomSource rng(10);
  const SpeechSpec spec = SmallSpec(1.5, rng);
  const SpeechCorpus c = GenSpeechCorpus(spec, false, 1, rng);
  for (const auto& [ph, seqs] : c) {
    ASSERT_EQ(seqs.size(), 1u);
    EXPECT_GE(seqs[0].length(), spec.n_states * spec.min_frames_per_state);
    EXPECT_LE(seqs[0].length(), spec.n_states * spec.max_frames_per_state);
    EXPECT_EQ(seqs[0].dim(), 3u);
  }
}

TEST(ShadowArrayTest, FirstHalfCarriesTheProperty) {
  RandomSource rng(11);
  const auto shadows = GenShadowArray(FlowSpec{}, 70, 0.5, 10, rng);
  ASSERT_EQ(shadows.size(), 70u);
  for (std::size_t i = 0; i < 70; ++i) {
    EXPECT_EQ(shadows[i].label.value, i < 35 ? Property::kP : Property::kNotP);
  }
  EXPECT_EQ(PositiveShadowCount(70, 0.5), 35u);
  std::set<std::uint64_t> seeds;
  for (const auto& s : shadows) seeds.insert(s.seed);
  EXPECT_EQ(seeds.size(), 70u);
}

TEST(ShadowArrayTest, TwoShadowsGetOneOfEach) {
  RandomSource rng(12);
  const auto shadows = GenShadowArray(FlowSpec{}, 2, 0.5, 10, rng);
  EXPECT_EQ(shadows[0].label.value, Property::kP);
  EXPECT_EQ(shadows[1].label.value, Property::kNotP);
}

TEST(ShadowArrayTest, DegenerateBalanceIsRejected) {
  RandomSource rng(13);
  EXPECT_THROW(GenShadowArray(FlowSpec{}, 100, 0.0, 10, rng), ContractError);
  EXPECT_THROW(GenShadowArray(FlowSpec{}, 100, 1.0, 10, rng), ContractError);
}

TEST(ShadowArrayTest, BaselinesAreAllNotP) {
  RandomSource rng(14);
  const SpeechSpec spec = SmallSpec(1.5, rng);
  const auto base = GenBaselineArray(spec, 5, 2, rng);
  ASSERT_EQ(base.size(), 5u);
  for (const auto& b : base) EXPECT_EQ(b.label.value, Property::kNotP);
}

TEST(ShadowArrayTest, GenerationIsDeterministic) {
  RandomSource r1(15), r2(15);
  RandomSource s1(1), s2(1);
  const SpeechSpec a = SmallSpec(1.5, s1), b = SmallSpec(1.5, s2);
  const auto x = GenShadowArray(a, 4, 0.5, 2, r1);
  const auto y = GenShadowArray(b, 4, 0.5, 2, r2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x[i].data, y[i].data);
}

}  // namespace
}  // namespace shadowprobe
