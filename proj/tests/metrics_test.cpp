#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcdal/metrics.hpp"
#include "oracle/naive_metrics.hpp"
#include "support.hpp"

using namespace mcdal;
using testsupport::mixed_stack;
using testsupport::random_shape_stack;
using testsupport::random_stack;

namespace {

/// Values in [t][c][pixel] order.
PredictionStack make_stack(Index T, Index C, Index H, Index W, const std::vector<float>& values) {
  PredictionStack s("s", T, C, H, W);
  EXPECT_EQ(values.size(), static_cast<std::size_t>(T * C * H * W));
  std::copy(values.begin(), values.end(), s.data());
  return s;
}

PredictionStack permute_passes(const PredictionStack& s, const std::vector<Index>& order) {
  PredictionStack out(s.image_id(), s.passes(), s.classes(), s.height(), s.width());
  const Index C = s.classes();
  for (Index t = 0; t < s.passes(); ++t) {
    out.planes().middleRows(t * C, C) = s.planes().middleRows(order[t] * C, C);
  }
  return out;
}

PredictionStack permute_classes(const PredictionStack& s, const std::vector<Index>& order) {
  PredictionStack out(s.image_id(), s.passes(), s.classes(), s.height(), s.width());
  for (Index t = 0; t < s.passes(); ++t) {
    for (Index c = 0; c < s.classes(); ++c) {
      out.planes().row(t * s.classes() + c) = s.planes().row(t * s.classes() + order[c]);
    }
  }
  return out;
}

bool close_rel(double actual, long double expected, double rel = 1e-9, double abs = 1e-12) {
  return std::fabs(static_cast<long double>(actual) - expected) <=
         rel * std::fabs(expected) + abs;
}

}  // namespace

TEST(MeanPrediction, OppositeOneHotPassesAverageToHalf) {
  const auto s = make_stack(2, 2, 1, 1, {1, 0, 0, 1});
  const auto m = mean_prediction(s);
  EXPECT_EQ(m.probs(0, 0), 0.5);
  EXPECT_EQ(m.probs(1, 0), 0.5);
  EXPECT_EQ(m.predicted_class(0, 0), 0);  // tie -> lowest index
}

TEST(MeanPrediction, IdenticalPassesReproduceThePass) {
  const auto s = make_stack(3, 2, 1, 1, {0.2f, 0.8f, 0.2f, 0.8f, 0.2f, 0.8f});
  const auto m = mean_prediction(s);
  EXPECT_EQ(m.probs(0, 0), static_cast<double>(0.2f));
  EXPECT_EQ(m.probs(1, 0), static_cast<double>(0.8f));
  EXPECT_EQ(m.predicted_class(0, 0), 1);
}

TEST(MeanPrediction, ThreeClassHandExample) {
  const auto s = make_stack(2, 3, 1, 1, {0.5f, 0.3f, 0.2f, 0.1f, 0.6f, 0.3f});
  const auto m = mean_prediction(s);
  EXPECT_NEAR(m.probs(0, 0), 0.3, 1e-7);
  EXPECT_NEAR(m.probs(1, 0), 0.45, 1e-7);
  EXPECT_NEAR(m.probs(2, 0), 0.25, 1e-7);
  EXPECT_EQ(m.predicted_class(0, 0), 1);
}

TEST(MeanPrediction, RejectsSingleClass) {
  PredictionStack s("s", 2, 1, 1, 1);
  s.planes().setOnes();
  try {
    mean_prediction(s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_THROW(predictive_entropy(s), Error);
  EXPECT_THROW(mutual_information(s), Error);
  EXPECT_THROW(margin_of_confidence(s), Error);
}

TEST(MeanPrediction, DoubleStorageMatchesFloatStorage) {
  Rng rng(11);
  const auto s = random_stack(rng, 9, 4, 3, 5);
  const auto d = s.cast<double>();
  for (Measure m : kAllMeasures) {
    const auto a = compute_measure(s, m);
    const auto b = compute_measure(d, m);
    EXPECT_EQ(a.per_pixel.matrix(), b.per_pixel.matrix()) << to_string(m);
  }
}

TEST(VariationRatio, UnanimousVotesGiveZero) {
  Rng rng(1);
  PredictionStack s("s", 50, 3, 1, 1);
  for (Index t = 0; t < 50; ++t) {
    s(t, 0, 0, 0) = 0.2f;
    s(t, 1, 0, 0) = 0.7f;
    s(t, 2, 0, 0) = 0.1f;
  }
  EXPECT_EQ(variation_ratio(s).per_image, 0.0);
}

TEST(VariationRatio, ThreeToOneVotes) {
  const auto s = make_stack(4, 2, 1, 1, {0.9f, 0.1f, 0.8f, 0.2f, 0.6f, 0.4f, 0.3f, 0.7f});
  EXPECT_DOUBLE_EQ(variation_ratio(s).per_image, 0.25);
}

TEST(VariationRatio, EvenSpreadReachesOneMinusOneOverC) {
  PredictionStack s("s", 10, 5, 1, 1);
  s.planes().setConstant(0.1f);
  for (Index t = 0; t < 10; ++t) s(t, t / 2, 0, 0) = 0.6f;
  EXPECT_DOUBLE_EQ(variation_ratio(s).per_image, 0.8);
  EXPECT_DOUBLE_EQ(measure_bounds(Measure::kVariationRatio, 5).upper, 0.8);
}

TEST(VariationRatio, ModalTieGoesToLowestClass) {
  const auto s = make_stack(2, 2, 1, 1, {0.3f, 0.7f, 0.6f, 0.4f});
  const auto v = vote_stats(s);
  EXPECT_EQ(v.modal_class(0, 0), 0);
  EXPECT_EQ(v.modal_frequency(0, 0), 1);
  EXPECT_EQ(v.votes(0, 0), 1);
  EXPECT_EQ(v.votes(1, 0), 0);
}

TEST(TotalVariance, IdenticalPassesGiveZero) {
  Rng rng(2);
  const auto one = random_stack(rng, 1, 4, 2, 2);
  PredictionStack s("s", 6, 4, 2, 2);
  for (Index t = 0; t < 6; ++t) s.planes().middleRows(t * 4, 4) = one.planes();
  EXPECT_EQ(total_variance(s).per_image, 0.0);
}

TEST(TotalVariance, OppositeOneHotPasses) {
  EXPECT_DOUBLE_EQ(total_variance(make_stack(2, 2, 1, 1, {1, 0, 0, 1})).per_image, 0.5);
}

TEST(TotalVariance, MildlyDisagreeingPasses) {
  const auto s = make_stack(2, 2, 1, 1, {0.6f, 0.4f, 0.4f, 0.6f});
  EXPECT_NEAR(total_variance(s).per_image, 0.02, 1e-7);
}

TEST(PredictiveEntropy, OneHotMeanGivesZero) {
  EXPECT_EQ(predictive_entropy(make_stack(2, 3, 1, 1, {0, 1, 0, 0, 1, 0})).per_image, 0.0);
}

TEST(PredictiveEntropy, UniformMeanNormalizesToOne) {
  for (Index C = 2; C <= 16; ++C) {
    PredictionStack s("s", 3, C, 2, 2);
    s.planes().setConstant(1.0f / static_cast<float>(C));
    EXPECT_NEAR(predictive_entropy(s, true).per_image, 1.0, 1e-6) << "C=" << C;
  }
  PredictionStack s("s", 1, 2, 1, 1);
  s.planes().setConstant(0.5f);
  EXPECT_EQ(predictive_entropy(s, true).per_image, 1.0);
}

TEST(PredictiveEntropy, ThreeQuarterOneQuarterInBits) {
  const auto s = make_stack(1, 2, 1, 1, {0.75f, 0.25f});
  const double expected = static_cast<double>(oracle::evaluate(s).mean.entropy_bits);
  EXPECT_NEAR(expected, 0.8112781244591328, 1e-15);
  EXPECT_NEAR(predictive_entropy(s, false).per_image, expected, 1e-15);
}

TEST(PredictiveEntropy, NormalizationDividesByLog2C) {
  Rng rng(3);
  const auto s = random_stack(rng, 5, 7, 3, 3);
  EXPECT_NEAR(predictive_entropy(s, true).per_image * std::log2(7.0),
              predictive_entropy(s, false).per_image, 1e-12);
}

TEST(MutualInformation, IdenticalPassesGiveExactlyZero) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto one = random_stack(rng, 1, 5, 3, 3);
    PredictionStack s("s", 7, 5, 3, 3);
    for (Index t = 0; t < 7; ++t) s.planes().middleRows(t * 5, 5) = one.planes();
    EXPECT_EQ(mutual_information(s).per_image, 0.0);
    EXPECT_TRUE((mutual_information(s).per_pixel == 0.0).all());
  }
}

TEST(MutualInformation, OppositeOneHotPassesGiveOne) {
  EXPECT_EQ(mutual_information(make_stack(2, 2, 1, 1, {1, 0, 0, 1})).per_image, 1.0);
}

TEST(MutualInformation, TwoCloseBinaryPasses) {
  // H(0.85) - (H(0.9) + H(0.8)) / 2 with C = 2, so normalized equals bits.
  const auto s = make_stack(2, 2, 1, 1, {0.9f, 0.1f, 0.8f, 0.2f});
  const long double oracle_value = oracle::evaluate(s).mean.mi_bits;
  EXPECT_NEAR(static_cast<double>(oracle_value), 0.01437846047807864, 1e-7);
  EXPECT_NEAR(mutual_information(s).per_image, static_cast<double>(oracle_value), 1e-12);
}

TEST(MutualInformation, EqualsEntropyOfMeanMinusMeanPassEntropy) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_shape_stack(rng, 16, 8, 4, trial % 2 == 0);
    const auto mi = mutual_information(s, true);
    const auto pe = predictive_entropy(s, true);
    PixelMap pass_mean = PixelMap::Zero(s.height(), s.width());
    for (Index t = 0; t < s.passes(); ++t) {
      PredictionStack one(s.image_id(), 1, s.classes(), s.height(), s.width(),
                          s.planes().middleRows(t * s.classes(), s.classes()));
      pass_mean += predictive_entropy(one, true).per_pixel;
    }
    pass_mean /= static_cast<double>(s.passes());
    const PixelMap two_term = (pe.per_pixel - pass_mean).max(0.0);
    EXPECT_LE((mi.per_pixel - two_term).abs().maxCoeff(), 1e-9);
  }
}

TEST(Margin, IdenticalOneHotPassesGiveOne) {
  EXPECT_EQ(margin_of_confidence(make_stack(3, 3, 1, 1, {0, 0, 1, 0, 0, 1, 0, 0, 1})).per_image,
            1.0);
}

TEST(Margin, UniformPassesGiveZero) {
  PredictionStack s("s", 4, 4, 2, 2);
  s.planes().setConstant(0.25f);
  EXPECT_EQ(margin_of_confidence(s).per_image, 0.0);
}

TEST(Margin, SinglePassHandExample) {
  const auto s = make_stack(1, 3, 1, 1, {0.5f, 0.3f, 0.2f});
  EXPECT_NEAR(margin_of_confidence(s).per_image, 0.2, 1e-7);
}

TEST(Margin, AcquisitionTransform) {
  const auto s = make_stack(1, 3, 1, 1, {0.5f, 0.3f, 0.2f});
  const double m = margin_of_confidence(s).per_image;
  EXPECT_DOUBLE_EQ(acquisition_score(s, Measure::kMarginOfConfidence), (1.0 - m) / 2.0);
  EXPECT_DOUBLE_EQ(acquisition_map(s, Measure::kMarginOfConfidence).per_pixel(0, 0),
                   (1.0 - m) / 2.0);
  EXPECT_EQ(acquisition_score(s, Measure::kMutualInformation),
            mutual_information(s).per_image);
}

TEST(ImageUncertainty, MeansOverPixels) {
  EXPECT_EQ(image_uncertainty(PixelMap::Constant(3, 4, 0.5)), 0.5);
  PixelMap m(2, 2);
  m << 0.1, 0.2, 0.3, 0.4;
  EXPECT_NEAR(image_uncertainty(m), 0.25, 1e-15);
  EXPECT_EQ(image_uncertainty(PixelMap::Zero(5, 5)), 0.0);
}

TEST(ImageUncertainty, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(image_uncertainty(PixelMap(0, 0)), Error);
  PixelMap m = PixelMap::Zero(2, 2);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(image_uncertainty(m), Error);
  m(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(image_uncertainty(m), Error);
}

TEST(Properties, ZeroCertaintyIsExact) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Index T = testsupport::uniform_int(rng, 1, 20);
    const Index C = testsupport::uniform_int(rng, 2, 9);
    PredictionStack s("s", T, C, 3, 4);
    for (Index n = 0; n < 12; ++n) {
      const int hot = testsupport::uniform_int(rng, 0, static_cast<int>(C) - 1);
      for (Index t = 0; t < T; ++t) s.at(t, hot, n) = 1.0f;
    }
    EXPECT_EQ(variation_ratio(s).per_image, 0.0);
    EXPECT_EQ(total_variance(s).per_image, 0.0);
    EXPECT_EQ(predictive_entropy(s).per_image, 0.0);
    EXPECT_EQ(mutual_information(s).per_image, 0.0);
    EXPECT_EQ(margin_of_confidence(s).per_image, 1.0);
  }
}

TEST(Properties, PassPermutationIsBitExact) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_shape_stack(rng, 24, 8, 5, trial % 3 == 0);
    std::vector<Index> order(static_cast<std::size_t>(s.passes()));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto p = permute_passes(s, order);
    for (Measure m : kAllMeasures) {
      const auto a = compute_measure(s, m);
      const auto b = compute_measure(p, m);
      EXPECT_TRUE((a.per_pixel == b.per_pixel).all()) << to_string(m);
      EXPECT_EQ(a.per_image, b.per_image) << to_string(m);
    }
  }
}

TEST(Properties, ClassPermutationEquivariance) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_shape_stack(rng, 12, 8, 4, false);
    std::vector<Index> order(static_cast<std::size_t>(s.classes()));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto p = permute_classes(s, order);
    for (Measure m : kAllMeasures) {
      const auto a = compute_measure(s, m);
      const auto b = compute_measure(p, m);
      EXPECT_LE((a.per_pixel - b.per_pixel).abs().maxCoeff(), 1e-12) << to_string(m);
    }
  }
}

TEST(Properties, BoundsHoldOnRandomStacks) {
  Rng rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_shape_stack(rng, 64, 16, 8, trial % 2 == 1);
    for (Measure m : kAllMeasures) {
      for (bool normalized : {false, true}) {
        const auto scores = compute_measure(s, m, normalized);
        const auto bounds = measure_bounds(m, s.classes(), normalized);
        EXPECT_GE(scores.per_pixel.minCoeff(), bounds.lower - 1e-9) << to_string(m);
        EXPECT_LE(scores.per_pixel.maxCoeff(), bounds.upper + 1e-9) << to_string(m);
      }
      const double acq = acquisition_score(s, m);
      EXPECT_GE(acq, 0.0);
      EXPECT_LE(acq, 1.0 + 1e-9);
    }
  }
}

TEST(Oracle, AgreesWithNaiveReference) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_shape_stack(rng, 7, 3, 4, trial % 2 == 1);
    const auto ref = oracle::evaluate(s);
    const auto vr = variation_ratio(s);
    const auto tv = total_variance(s);
    const auto pe = predictive_entropy(s, false);
    const auto mi = mutual_information(s, false);
    const auto mc = margin_of_confidence(s);
    for (Index n = 0; n < s.pixels(); ++n) {
      const auto& px = ref.pixels[static_cast<std::size_t>(n)];
      EXPECT_TRUE(close_rel(vr.per_pixel(n), px.variation_ratio));
      EXPECT_TRUE(close_rel(tv.per_pixel(n), px.total_variance));
      EXPECT_TRUE(close_rel(pe.per_pixel(n), px.entropy_capped_bits));
      EXPECT_TRUE(close_rel(mi.per_pixel(n), px.mi_capped_bits));
      EXPECT_TRUE(close_rel(mc.per_pixel(n), px.margin));
    }
    EXPECT_TRUE(close_rel(pe.per_image, ref.mean.entropy_capped_bits));
    EXPECT_TRUE(close_rel(predictive_entropy(s, true).per_image,
                          ref.mean.entropy_capped_bits / ref.log2_classes));
  }
}

TEST(Measures, ParseAcceptsShortAndLongNames) {
  EXPECT_EQ(parse_measure("mi"), Measure::kMutualInformation);
  EXPECT_EQ(parse_measure("mutual-information"), Measure::kMutualInformation);
  EXPECT_EQ(parse_measure("vr"), Measure::kVariationRatio);
  EXPECT_EQ(parse_measure("entropy"), Measure::kPredictiveEntropy);
  EXPECT_EQ(parse_measure("margin"), Measure::kMarginOfConfidence);
  EXPECT_FALSE(parse_measure("bald").has_value());
  for (Measure m : kAllMeasures) EXPECT_EQ(parse_measure(to_string(m)), m);
}
