#include "oracles.hpp"

#include <srisck/detector.hpp>
#include <srisck/evaluation.hpp>
#include <srisck/keypoint_io.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace srisck;

namespace {

SMMap make_map(std::size_t w, std::size_t h, std::size_t margin = 0) {
  SMMap m;
  m.width = w;
  m.height = h;
  m.margin = margin;
  m.sm.assign(w * h, 0.0);
  m.cm.assign(w * h, 0);
  return m;
}

KeyPoint kp_at(double x, double y, double size, double sm, std::size_t level = 1) {
  KeyPoint k;
  k.x = x;
  k.y = y;
  k.size = size;
  k.sigma = size / std::numbers::sqrt2;
  k.sm = sm;
  k.level = level;
  k.cm = 1;
  return k;
}

const Detector &default_detector() {
  static const Detector det(preset_sri_sck_1());
  return det;
}

} // namespace

TEST(Subpixel, Examples) {
  EXPECT_EQ(subpixel_offset(1, 2, 1), 0.0);
  EXPECT_NEAR(subpixel_offset(0, 2, 1), 1.0 / 6.0, 1e-15);
  EXPECT_EQ(subpixel_offset(1, 1, 1), 0.0);
  EXPECT_NEAR(subpixel_offset(1, 2, 0), -1.0 / 6.0, 1e-15);
}

TEST(Subpixel, RecoversParabolaVertex) {
  for (double d = -0.45; d <= 0.45 + 1e-12; d += 0.01)
    for (double a : {0.3, 1.0, 7.5}) {
      auto f = [&](double x) { return 3.0 - a * (x - d) * (x - d); };
      EXPECT_NEAR(subpixel_offset(f(-1), f(0), f(1)), d, 1e-12);
    }
}

TEST(Subpixel, OutOfRangeIsZero) {
  // Vertex beyond half a pixel (not an NMS peak) is rejected.
  auto f = [](double x) { return -(x - 0.8) * (x - 0.8); };
  EXPECT_EQ(subpixel_offset(f(-1), f(0), f(1)), 0.0);
}

TEST(SizeScale, DefaultRule) {
  const auto cfg = preset_sri_sck_1();
  auto [s1, g1] = assign_size_scale(1, cfg);
  EXPECT_NEAR(s1, 7.4246212, 1e-6);
  EXPECT_NEAR(g1, 5.25, 1e-12);
  auto [s3, g3] = assign_size_scale(3, cfg);
  EXPECT_NEAR(s3, 11.6009706, 1e-6);
  EXPECT_NEAR(g3, s3 / std::numbers::sqrt2, 1e-12);
  EXPECT_THROW(assign_size_scale(0, cfg), std::invalid_argument);
}

TEST(SizeScale, Eq3Rule) {
  auto cfg = preset_sri_sck_1();
  cfg.size_rule = SizeRule::eq3;
  EXPECT_NEAR(assign_size_scale(1, cfg).first, 14.8492424, 1e-6);
}

TEST(Presets, MatchConfigurationTable) {
  const auto a = preset_sri_sck_1();
  EXPECT_EQ(a.block_size, 21u);
  EXPECT_EQ(a.lambda1, 0.125);
  EXPECT_EQ(a.lambda2, 0.375);
  EXPECT_FALSE(a.cm_lower);
  EXPECT_FALSE(a.cm_upper);
  const auto b = preset_sri_sck_2();
  EXPECT_EQ(b.block_size, 25u);
  EXPECT_EQ(b.lambda1, 0.0625);
  EXPECT_EQ(b.lambda2, 0.1875);
  EXPECT_EQ(a.scale_factor, 0.8);
  EXPECT_TRUE(preset_by_name("sri-sck-2"));
  EXPECT_FALSE(preset_by_name("sri-sck-3"));
}

TEST(Config, Validation) {
  auto c = preset_sri_sck_1();
  c.block_size = 20;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = preset_sri_sck_1();
  c.scale_factor = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = preset_sri_sck_1();
  c.lambda1 = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = preset_sri_sck_1();
  c.cm_lower = 5;
  c.cm_upper = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = preset_sri_sck_1();
  c.nms_radius = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(Detector{c}, std::invalid_argument);
}

TEST(Nms, SinglePixel) {
  auto m = make_map(9, 9);
  m.sm[4 * 9 + 6] = 2.0;
  const auto p = non_max_suppression(m, 5);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (Peak{4, 6, 2.0}));
}

TEST(Nms, EqualNeighboursKeepEarlier) {
  auto m = make_map(9, 9);
  m.sm[4 * 9 + 4] = 1.5;
  m.sm[4 * 9 + 5] = 1.5;
  auto p = non_max_suppression(m, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].col, 4u);
  m.sm[4 * 9 + 5] = 0.0;
  m.sm[5 * 9 + 3] = 1.5; // later in row-major order
  p = non_max_suppression(m, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].row, 4u);
}

TEST(Nms, RampKeepsMaximum) {
  auto m = make_map(12, 10);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 12; ++c)
      m.sm[r * 12 + c] = 1.0 + static_cast<double>(r * 12 + c);
  const auto p = non_max_suppression(m, 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].row, 9u);
  EXPECT_EQ(p[0].col, 11u);
}

TEST(Nms, SeparatedPeaksBothKept) {
  auto m = make_map(20, 20);
  m.sm[3 * 20 + 3] = 1.0;
  m.sm[3 * 20 + 9] = 2.0; // Chebyshev distance 6 > 5
  EXPECT_EQ(non_max_suppression(m, 5).size(), 2u);
  m.sm[3 * 20 + 8] = 0.5;
  m.sm[3 * 20 + 9] = 0.0;
  m.sm[3 * 20 + 8] = 2.0; // distance 5
  EXPECT_EQ(non_max_suppression(m, 5).size(), 1u);
  EXPECT_THROW(non_max_suppression(m, 0), std::invalid_argument);
}

TEST(RefinePeak, UsesNeighboursAndSkipsBorder) {
  auto m = make_map(7, 7, 1);
  m.sm[3 * 7 + 3] = 2.0;
  m.sm[3 * 7 + 4] = 1.0; // right
  m.sm[4 * 7 + 3] = 1.0; // below
  auto [dy, dx] = refine_peak(m, Peak{3, 3, 2.0});
  EXPECT_NEAR(dx, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(dy, 1.0 / 6.0, 1e-15);
  // At the edge of the defined region the outer neighbour is undefined.
  m.sm.assign(49, 0.0);
  m.sm[1 * 7 + 1] = 2.0;
  m.sm[1 * 7 + 2] = 1.0;
  auto [ey, ex] = refine_peak(m, Peak{1, 1, 2.0});
  EXPECT_EQ(ex, 0.0);
  EXPECT_EQ(ey, 0.0);
}

TEST(CrossScale, ContainedWeakerRemoved) {
  const auto cfg = preset_sri_sck_1();
  const auto out = cross_scale_suppress({kp_at(50, 50, 7.4, 5.0, 1),
                                         kp_at(50, 50, 7.4 / 0.8, 3.0, 2)},
                                        cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sm, 5.0);
}

TEST(CrossScale, DisjointKept) {
  const auto cfg = preset_sri_sck_1();
  const auto out = cross_scale_suppress({kp_at(10, 10, 5, 1.0), kp_at(40, 40, 5, 2.0)}, cfg);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].sm, 2.0);
}

TEST(CrossScale, SizeNormalisationChangesWinner) {
  auto cfg = preset_sri_sck_1();
  cfg.sm_normalization = SmNormalization::multiply_by_size;
  const auto out = cross_scale_suppress({kp_at(30, 30, 7.42, 5.0, 1),
                                         kp_at(30, 30, 11.60, 4.8, 3)},
                                        cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].level, 3u);
  cfg.sm_normalization = SmNormalization::identity;
  const auto id = cross_scale_suppress({kp_at(30, 30, 7.42, 5.0, 1),
                                        kp_at(30, 30, 11.60, 4.8, 3)},
                                       cfg);
  ASSERT_EQ(id.size(), 1u);
  EXPECT_EQ(id[0].level, 1u);
}

TEST(CrossScale, EqualStrengthBothKeptAndThresholdApplies) {
  const auto cfg = preset_sri_sck_1();
  EXPECT_EQ(cross_scale_suppress({kp_at(0, 0, 5, 1.0), kp_at(0, 0, 5, 1.0)}, cfg).size(), 2u);
  // Two radius-5 disks 9 apart overlap by about 3.4% of one disk.
  EXPECT_EQ(cross_scale_suppress({kp_at(0, 0, 5, 1.0), kp_at(9, 0, 5, 2.0)}, cfg).size(), 2u);
  // 2 apart overlap by about 75%.
  EXPECT_EQ(cross_scale_suppress({kp_at(0, 0, 5, 1.0), kp_at(2, 0, 5, 2.0)}, cfg).size(), 1u);
}

TEST(CrossScale, TruncatesToMaximum) {
  auto cfg = preset_sri_sck_1();
  cfg.max_keypoints = 3;
  std::vector<KeyPoint> kps;
  for (int i = 0; i < 10; ++i)
    kps.push_back(kp_at(30.0 * i, 0, 5, 1.0 + i));
  const auto out = cross_scale_suppress(kps, cfg);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].sm, 10.0);
  EXPECT_EQ(out[2].sm, 8.0);
}

TEST(ScanLevel, ConstantImageIsZero) {
  const auto &det = default_detector();
  const auto map = scan_level(GrayImage(40, 30, 0.4), det.solver(), det.config());
  for (double v : map.sm)
    EXPECT_EQ(v, 0.0);
  EXPECT_THROW(scan_level(GrayImage(20, 40), det.solver(), det.config()),
               std::invalid_argument);
}

TEST(ScanLevel, NonNegativeAndBorderUndefined) {
  const auto &det = default_detector();
  const auto img = gaussian_blur(make_blob_image(11, 60, 50, 12), 0.8);
  const auto map = scan_level(img, det.solver(), det.config());
  EXPECT_EQ(map.margin, 10u);
  double mx = 0.0;
  for (std::size_t r = 0; r < map.height; ++r)
    for (std::size_t c = 0; c < map.width; ++c) {
      const double v = map.at(r, c);
      EXPECT_GE(v, 0.0);
      if (!map.defined(static_cast<long>(r), static_cast<long>(c)))
        EXPECT_EQ(v, 0.0);
      mx = std::max(mx, v);
    }
  EXPECT_GT(mx, 0.0);
}

TEST(ScanLevel, CodeBlockAtAgreesWithMap) {
  const auto &det = default_detector();
  const auto img = gaussian_blur(make_blob_image(12, 40, 40, 8), 0.8);
  const auto map = scan_level(img, det.solver(), det.config());
  const CircularMask mask(21);
  for (std::size_t r : {10u, 17u, 29u})
    for (std::size_t c : {10u, 20u, 29u}) {
      const auto code = code_block_at(img, det.solver(), mask, r, c);
      ASSERT_TRUE(code);
      EXPECT_EQ(strength_measure(*code), map.at(r, c));
      EXPECT_EQ(complexity_measure(*code), map.cm[r * map.width + c]);
    }
  EXPECT_THROW(code_block_at(img, det.solver(), mask, 9, 20), std::out_of_range);
  EXPECT_THROW(code_block_at(img, det.solver(), mask, 20, 30), std::out_of_range);
}

TEST(ScanLevel, CmRangeMasksStrength) {
  auto cfg = preset_sri_sck_1();
  const auto img = gaussian_blur(make_blob_image(13, 50, 50, 12), 0.8);
  const Detector base(cfg);
  const auto full = scan_level(img, base.solver(), cfg);
  cfg.cm_lower = 2;
  cfg.cm_upper = 3;
  const Detector ranged(cfg);
  const auto map = scan_level(img, ranged.solver(), cfg);
  std::size_t in_range = 0;
  for (std::size_t i = 0; i < map.sm.size(); ++i) {
    EXPECT_EQ(map.cm[i], full.cm[i]);
    if (map.cm[i] >= 2 && map.cm[i] <= 3) {
      EXPECT_EQ(map.sm[i], full.sm[i]);
      ++in_range;
    } else {
      EXPECT_EQ(map.sm[i], 0.0);
    }
  }
  EXPECT_GT(in_range, 0u);
}

TEST(ScanLevel, QuarterTurnRotatesMap) {
  const auto &det = default_detector();
  const auto img = gaussian_blur(make_blob_image(14, 48, 40, 10), 0.8);
  const auto rot = gaussian_blur(rotate90(make_blob_image(14, 48, 40, 10)), 0.8);
  const auto a = scan_level(img, det.solver(), det.config());
  const auto b = scan_level(rot, det.solver(), det.config());
  ASSERT_EQ(b.width, a.height);
  double worst = 0.0;
  for (std::size_t r = 0; r < a.height; ++r)
    for (std::size_t c = 0; c < a.width; ++c) {
      worst = std::max(worst, std::abs(a.at(r, c) - b.at(a.width - 1 - c, r)));
      EXPECT_EQ(a.cm[r * a.width + c], b.cm[(a.width - 1 - c) * b.width + r]);
    }
  EXPECT_LT(worst, 1e-6);
}

TEST(ScanLevel, AffineIntensityGivesSameMap) {
  const auto &det = default_detector();
  const auto img = make_blob_image(15, 50, 44, 10);
  GrayImage mod = img;
  for (double &v : mod.data())
    v = 0.5 * v + 0.2;
  const auto a = scan_level(gaussian_blur(img, 0.8), det.solver(), det.config());
  const auto b = scan_level(gaussian_blur(mod, 0.8), det.solver(), det.config());
  EXPECT_EQ(a.cm, b.cm);
  for (std::size_t i = 0; i < a.sm.size(); ++i)
    EXPECT_NEAR(a.sm[i], b.sm[i], 1e-9);
}

TEST(Detect, ConstantImageIsEmpty) {
  EXPECT_TRUE(default_detector().detect(GrayImage(64, 64, 0.5), 1).empty());
}

TEST(Detect, KeyPointInvariants) {
  const auto &det = default_detector();
  const auto img = make_blob_image(21, 160, 120, 40);
  const auto kps = det.detect(img, 1);
  ASSERT_FALSE(kps.empty());
  const auto n_levels = build_pyramid(img, 0.8, 21).size();
  const double s1 = std::numbers::sqrt2 / 4.0 * 21.0;
  for (const auto &k : kps) {
    EXPECT_GE(k.level, 1u);
    EXPECT_LE(k.level, n_levels);
    EXPECT_EQ(k.size, s1 / std::pow(0.8, static_cast<double>(k.level - 1)));
    EXPECT_EQ(k.sigma, k.size / std::numbers::sqrt2);
    EXPECT_GT(k.sm, 0.0);
    EXPECT_GE(k.cm, 1u);
    EXPECT_GE(k.x, -0.5);
    EXPECT_LE(k.x, 159.5);
    EXPECT_GE(k.y, -0.5);
    EXPECT_LE(k.y, 119.5);
  }
  for (std::size_t i = 1; i < kps.size(); ++i)
    EXPECT_GE(kps[i - 1].sm, kps[i].sm);
  // No surviving pair violates the suppression rule.
  for (std::size_t i = 0; i < kps.size(); ++i)
    for (std::size_t j = 0; j < kps.size(); ++j)
      if (kps[j].sm > kps[i].sm)
        EXPECT_LT(overlap_fraction_of_smaller(Disk{kps[i].x, kps[i].y, kps[i].size},
                                              Disk{kps[j].x, kps[j].y, kps[j].size}),
                  0.3);
}

TEST(Detect, CandidatesAreRefinedWithinHalfPixel) {
  const auto &det = default_detector();
  const auto img = make_blob_image(22, 100, 100, 30);
  const auto pyr = build_pyramid(img, 0.8, 21);
  for (const auto &k : det.candidates(img, 1)) {
    const std::size_t l = k.level - 1;
    const double ratio_x = static_cast<double>(pyr.levels[l].width()) / 100.0;
    const double lx = (k.x + 0.5) * ratio_x - 0.5;
    EXPECT_LE(std::abs(lx - std::round(lx)), 0.5 + 1e-9);
  }
}

TEST(Detect, AffineIntensityInvariance) {
  const auto &det = default_detector();
  const auto pair = synth_pair(31, TransformKind::gain_offset, SynthOptions{200, 200, 10});
  const auto a = det.detect(pair.a, 1);
  const auto b = det.detect(pair.b, 1);
  ASSERT_FALSE(a.empty());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].x, b[i].x, 1e-6);
    EXPECT_NEAR(a[i].y, b[i].y, 1e-6);
    EXPECT_EQ(a[i].level, b[i].level);
    EXPECT_EQ(a[i].cm, b[i].cm);
    EXPECT_NEAR(a[i].sm, b[i].sm, 1e-9);
  }
}

TEST(Detect, QuarterTurnCorrespondence) {
  const auto &det = default_detector();
  const auto pair = synth_pair(32, TransformKind::rotation90);
  const auto a = det.detect(pair.a, 1);
  const auto b = det.detect(pair.b, 1);
  ASSERT_FALSE(a.empty());
  std::size_t hit = 0;
  for (const auto &k : a) {
    const auto [u, v] = pair.h.apply(k.x, k.y);
    for (const auto &q : b)
      if (q.level == k.level && std::hypot(q.x - u, q.y - v) <= 1.0) {
        ++hit;
        break;
      }
  }
  EXPECT_GE(static_cast<double>(hit) / a.size(), 0.9) << hit << "/" << a.size();
}

TEST(Detect, WorkerCountDoesNotChangeOutput) {
  const auto &det = default_detector();
  const auto img = make_blob_image(33, 120, 100, 30);
  const auto one = det.detect(img, 1);
  for (std::size_t w : {2u, 3u, 8u})
    EXPECT_EQ(det.detect(img, w), one);
}

TEST(Detect, ColourInputUsesLuma) {
  const auto &det = default_detector();
  const auto g = make_blob_image(34, 80, 80, 20);
  const AnyImage rgb = RgbImage{g, g, g};
  const auto a = det.detect(g, 1), b = det.detect(rgb, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].x, b[i].x, 1e-9);
    EXPECT_NEAR(a[i].sm, b[i].sm, 1e-9);
  }
}

TEST(Detect, MaxKeypointsHonoured) {
  auto cfg = preset_sri_sck_1();
  cfg.max_keypoints = 5;
  const auto img = make_blob_image(35, 150, 150, 60);
  const auto kps = Detector(cfg).detect(img, 1);
  EXPECT_EQ(kps.size(), 5u);
}

TEST(Detect, SmoothedMapOptionRuns) {
  auto cfg = preset_sri_sck_1();
  cfg.smooth_sm_map = true;
  const auto kps = Detector(cfg).detect(make_blob_image(36, 80, 80, 20), 1);
  EXPECT_FALSE(kps.empty());
}

TEST(Detect, SecondPreset) {
  const auto img = make_blob_image(37, 100, 100, 25);
  const auto kps = Detector(preset_sri_sck_2()).detect(img, 1);
  ASSERT_FALSE(kps.empty());
  for (const auto &k : kps)
    EXPECT_NEAR(k.size, std::numbers::sqrt2 / 4.0 * 25.0 / std::pow(0.8, k.level - 1.0),
                1e-12);
  EXPECT_THROW(Detector(preset_sri_sck_1(), make_ext_dct2(25)), std::invalid_argument);
}

TEST(ScaleConvention, LogDiskPeakAtRadiusOverSqrt2) {
  for (double r : {5.0, 8.0, 12.0}) {
    const double s = oracle::log_disk_best_sigma(r, 0.4 * r, 1.2 * r, 0.01);
    EXPECT_NEAR(s, r / std::numbers::sqrt2, 0.05 * r / std::numbers::sqrt2) << r;
  }
  // The size rule ties sigma to size by the same factor.
  const auto [size, sigma] = assign_size_scale(2, preset_sri_sck_1());
  EXPECT_NEAR(sigma * std::numbers::sqrt2, size, 1e-12);
}

TEST(KeyPointIo, RoundTrip) {
  KeyPointFile f;
  f.block_size = 21;
  f.scale_factor = 0.8;
  f.image_width = 200;
  f.image_height = 150;
  f.keypoints = {kp_at(1.25, 2.5, 7.4246212, 3.75, 1), kp_at(100.123456, 50.5, 9.28, 1.5, 2)};
  std::stringstream ss;
  write_keypoints(ss, f);
  EXPECT_EQ(ss.str().substr(0, 25), "# sri-sck v1 n=21 sf=0.8\n");
  const auto g = read_keypoints(ss);
  EXPECT_EQ(g.block_size, 21u);
  EXPECT_EQ(g.scale_factor, 0.8);
  ASSERT_TRUE(g.image_width && g.image_height);
  EXPECT_EQ(*g.image_width, 200u);
  ASSERT_EQ(g.keypoints.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(g.keypoints[i].x, f.keypoints[i].x, 1e-6);
    EXPECT_NEAR(g.keypoints[i].y, f.keypoints[i].y, 1e-6);
    EXPECT_NEAR(g.keypoints[i].size, f.keypoints[i].size, 1e-6);
    EXPECT_NEAR(g.keypoints[i].sm, f.keypoints[i].sm, 1e-6);
    EXPECT_EQ(g.keypoints[i].level, f.keypoints[i].level);
    EXPECT_EQ(g.keypoints[i].cm, f.keypoints[i].cm);
  }
}

TEST(KeyPointIo, RejectsMalformed) {
  for (const char *text : {"1 2 3\n", "# sri-sck v1 n=21 sf=0.8\n1 2 3 4 x 1 2\n",
                           "# sri-sck v1 n=21 sf=0.8\n1 2 3 4 1 1 2 9\n", ""}) {
    std::stringstream ss(text);
    EXPECT_THROW(read_keypoints(ss), FormatError) << text;
  }
}
