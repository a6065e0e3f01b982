#include <gtest/gtest.h>

#include <random>

#include "ads3d/ads3d.hpp"
#include "oracles.hpp"

using namespace ads3d;

namespace {

using U8 = std::vector<std::uint8_t>;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

Image<double> as_map(const Mask& m) {
  Image<double> s(m.height(), m.width(), 1, 0.0);
  for (std::size_t k = 0; k < s.storage().size(); ++k) s.storage()[k] = m.storage()[k];
  return s;
}

}  // namespace

TEST(Roc, HandExamples) {
  EXPECT_EQ(roc_auc(std::vector<double>{0, 1, 2, 3}, U8{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0, 1, 2, 3}, U8{1, 1, 0, 0}), 0.0);
  EXPECT_EQ(roc_auc(std::vector<double>{1, 1, 0, 0}, U8{1, 0, 1, 0}), 0.5);
  EXPECT_EQ(code_of([] { roc_auc(std::vector<double>{1, 2}, U8{1, 1}); }), ErrorCode::kUndefinedMetric);
}

TEST(Roc, MatchesPairCounting) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    std::vector<double> s(n);
    U8 y(n);
    std::uniform_int_distribution<int> L(0, trial % 2 ? 5 : 100000);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = L(rng) * 0.1;
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    ASSERT_NEAR(roc_auc(s, y), oracle::roc_auc(s, y), 1e-12);
  }
}

TEST(PixelRoc, ExamplesAndFlattenOracle) {
  std::mt19937_64 rng(2);
  std::vector<Mask> masks;
  std::vector<Image<double>> maps, constant;
  for (int k = 0; k < 3; ++k) {
    masks.push_back(oracle::random_mask(rng, 20, 24, 2, 0.01));
    maps.push_back(oracle::random_map(rng, masks.back(), 7, 0.3));
    constant.push_back(Image<double>(20, 24, 1, 0.25));
  }
  std::vector<Image<double>> perfect;
  for (const auto& m : masks) perfect.push_back(as_map(m));
  EXPECT_EQ(pixel_roc_auc(perfect, masks), 1.0);
  EXPECT_EQ(pixel_roc_auc(constant, masks), 0.5);

  std::vector<double> s;
  U8 y;
  for (int k = 0; k < 3; ++k) {
    s.insert(s.end(), maps[k].storage().begin(), maps[k].storage().end());
    y.insert(y.end(), masks[k].storage().begin(), masks[k].storage().end());
  }
  EXPECT_NEAR(pixel_roc_auc(maps, masks), oracle::roc_auc(s, y), 1e-12);
}

TEST(Components, ExamplesAndFloodFill) {
  Mask diag(3, 3, 1, 0);
  diag.at(0, 0) = diag.at(1, 1) = 1;
  EXPECT_EQ(connected_components(diag).count, 1);
  EXPECT_EQ(connected_components(Mask(4, 4, 1, 0)).count, 0);

  // a U shape whose arms meet late in raster order
  Mask u(4, 5, 1, 0);
  for (int i = 0; i < 4; ++i) u.at(i, 0) = u.at(i, 4) = 1;
  for (int j = 0; j < 5; ++j) u.at(3, j) = 1;
  u.at(0, 2) = 1;
  const auto cu = connected_components(u);
  EXPECT_EQ(cu.count, 2);
  EXPECT_EQ(cu.labels.at(0, 0), 1);
  EXPECT_EQ(cu.labels.at(0, 2), 2);
  EXPECT_EQ(cu.labels.at(0, 4), 1);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Mask m = oracle::random_mask(rng, 1 + rng() % 64, 1 + rng() % 64, static_cast<int>(rng() % 6),
                                       0.02 * (rng() % 20));
    int k = 0;
    const auto want = oracle::flood_fill(m, &k);
    const auto got = connected_components(m);
    ASSERT_EQ(got.count, k);
    ASSERT_EQ(got.labels, want);
  }
}

TEST(Pro, MasksAsMapsIntegrateToOne) {
  std::mt19937_64 rng(4);
  std::vector<Mask> masks;
  std::vector<Image<double>> maps;
  for (int k = 0; k < 4; ++k) {
    masks.push_back(oracle::random_mask(rng, 32, 32, 3, 0.0));
    maps.push_back(as_map(masks.back()));
  }
  const auto r = pro_curve(maps, masks);
  EXPECT_EQ(r.integrated, 1.0);
  EXPECT_EQ(r.curve.front().fpr, 0.0);
  EXPECT_EQ(r.curve.back().fpr, 0.3);
}

TEST(Pro, LargeRegionsReachExactlyOne) {
  // one full-frame region with a distinct score per pixel: ~50k tiny steps
  Mask full(224, 224, 1, 1), none(224, 224, 1, 0);
  Image<double> ramp(224, 224, 1, 0.0);
  for (std::size_t k = 0; k < ramp.storage().size(); ++k) ramp.storage()[k] = 1.0 + static_cast<double>(k);
  const std::vector<Mask> masks{full, none, full};
  const std::vector<Image<double>> maps{ramp, Image<double>(224, 224, 1, 0.0), ramp};
  const auto r = pro_curve(maps, masks);
  EXPECT_EQ(r.curve.back().pro, 1.0);
  EXPECT_EQ(r.integrated, 1.0);
}

TEST(Pro, AverageOverComponents) {
  // two regions, one fully and one half covered above the threshold
  Mask m(4, 8, 1, 0);
  Image<double> s(4, 8, 1, 0.0);
  m.at(0, 0) = 1;
  s.at(0, 0) = 1.0;
  for (int j = 4; j < 8; ++j) m.at(2, j) = 1;
  s.at(2, 4) = s.at(2, 5) = 1.0;
  const std::vector<Mask> masks{m};
  const std::vector<Image<double>> maps{s};
  const auto r = pro_curve(maps, masks, 1.0);
  ASSERT_GE(r.curve.size(), 2u);
  EXPECT_EQ(r.curve[0].pro, 0.75);
  EXPECT_EQ(r.curve[1].fpr, 0.0);
  EXPECT_EQ(r.curve[1].pro, 0.75);
  EXPECT_EQ(r.curve.back().pro, 1.0);
}

TEST(Pro, MatchesThresholdOracleAndIsMonotone) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Mask> masks;
    std::vector<Image<double>> maps;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < n; ++k) {
      masks.push_back(oracle::random_mask(rng, 32, 32, 1 + static_cast<int>(rng() % 3), 0.005));
      maps.push_back(oracle::random_map(rng, masks.back(), trial % 2 ? 9 : 5000, 0.2));
    }
    masks[0].at(0, 0) = 0;  // at least one normal pixel
    const double limit = trial % 4 == 0 ? 1.0 : 0.05 + 0.05 * (rng() % 6);
    const auto r = pro_curve(maps, masks, limit);
    ASSERT_NEAR(r.integrated, oracle::pro_integrated(maps, masks, limit), 1e-9) << "trial " << trial;
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
      ASSERT_GE(r.curve[i].fpr, r.curve[i - 1].fpr);
      ASSERT_GE(r.curve[i].pro, r.curve[i - 1].pro);
    }
    ASSERT_LE(r.curve.back().fpr, limit);
    ASSERT_GE(r.integrated, 0.0);
    ASSERT_LE(r.integrated, 1.0);
  }
}

TEST(Pro, FullImageComponentIsRecallArea) {
  // one component covering the left half: PRO == pixel recall, so the full
  // area equals the ROC AUC of the pixels
  std::mt19937_64 rng(6);
  Mask m(16, 16, 1, 0);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 8; ++j) m.at(i, j) = 1;
  const std::vector<Mask> masks{m};
  const std::vector<Image<double>> maps{oracle::random_map(rng, m, 50, 0.1)};
  EXPECT_NEAR(pro_curve(maps, masks, 1.0).integrated, pixel_roc_auc(maps, masks), 1e-12);
}

TEST(Pro, UndefinedCases) {
  const std::vector<Mask> empty{Mask(4, 4, 1, 0)};
  const std::vector<Image<double>> maps{Image<double>(4, 4, 1, 0.0)};
  EXPECT_EQ(code_of([&] { pro_curve(maps, empty); }), ErrorCode::kUndefinedMetric);
  const std::vector<Mask> full{Mask(4, 4, 1, 1)};
  EXPECT_EQ(code_of([&] { pro_curve(maps, full); }), ErrorCode::kUndefinedMetric);
  EXPECT_EQ(code_of([&] { pro_curve(maps, full, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(Metrics, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(7);
  std::vector<Mask> masks;
  std::vector<Image<double>> maps;
  for (int k = 0; k < 4; ++k) {
    masks.push_back(oracle::random_mask(rng, 32, 32, 2, 0.003));
    maps.push_back(oracle::random_map(rng, masks.back(), 1024, 0.5));
  }
  auto apply = [&](auto f) {
    auto out = maps;
    for (auto& m : out)
      for (double& v : m.storage()) v = f(v);
    return out;
  };
  const auto lin = apply([](double x) { return 2 * x + 1; });
  const auto ex = apply([](double x) { return std::exp(x); });
  const double p0 = pixel_roc_auc(maps, masks), r0 = pro_curve(maps, masks).integrated;
  EXPECT_NEAR(pixel_roc_auc(lin, masks), p0, 1e-12);
  EXPECT_NEAR(pixel_roc_auc(ex, masks), p0, 1e-12);
  EXPECT_NEAR(pro_curve(lin, masks).integrated, r0, 1e-12);
  EXPECT_NEAR(pro_curve(ex, masks).integrated, r0, 1e-12);
}

TEST(Report, JsonCsvAndUndefinedMetrics) {
  EvalReport r;
  r.method = "fpfh";
  r.per_class["a"].i_roc = {0.5, {}};
  r.per_class["a"].p_roc = {1.0, {}};
  r.per_class["a"].pro = {0.25, {}};
  r.per_class["a"].pro_curve = {{0.0, 0.1}, {0.3, 0.4}};
  r.per_class["b"].i_roc = guarded_metric([] { return roc_auc(std::vector<double>{1, 2}, U8{0, 0}); });
  r.per_class["b"].p_roc = {0.5, {}};
  r.per_class["b"].pro = {0.75, {}};
  EXPECT_FALSE(r.per_class["b"].i_roc.value);
  EXPECT_TRUE(r.any_undefined());
  EXPECT_EQ(*r.mean(&ClassReport::i_roc).value, 0.5);
  EXPECT_EQ(*r.mean(&ClassReport::pro).value, 0.5);
  const auto j = report_json(r);
  EXPECT_TRUE(j["classes"]["b"]["i_roc"].is_null());
  EXPECT_TRUE(j["classes"]["b"]["undefined"].contains("i_roc"));
  EXPECT_EQ(j["mean"]["p_roc"].get<double>(), 0.75);
  EXPECT_EQ(curves_csv(r), "class,fpr,pro\na,0,0.10000000000000001\na,0.29999999999999999,0.40000000000000002\n");
  EXPECT_THROW(guarded_metric([]() -> double { fail(ErrorCode::kIo, "x"); }), Error);
}
