#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cardiokey/core/errors.hpp"
#include "cardiokey/core/interpolate.hpp"
#include "cardiokey/phantom/phantom.hpp"
#include "cardiokey/registration/register.hpp"
#include "cardiokey/registration/smoothness.hpp"
#include "cardiokey/registration/ssim.hpp"
#include "cardiokey/registration/warp.hpp"
#include "support/testing.hpp"

namespace cardiokey {
namespace {

using testing::gaussian_blob;
using testing::random_field;
using testing::random_grid;

// Direct per-window evaluation of the SSIM formula on a 2D slice.
double brute_ssim_2d(const double* a, const double* b, std::size_t ny, std::size_t nx, std::size_t window,
                     double range) {
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  const std::size_t wy = std::min(window, ny), wx = std::min(window, nx);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + wy <= ny; ++y0) {
    for (std::size_t x0 = 0; x0 + wx <= nx; ++x0) {
      const double n = double(wy * wx);
      double ma = 0, mb = 0;
      for (std::size_t y = y0; y < y0 + wy; ++y) {
        for (std::size_t x = x0; x < x0 + wx; ++x) {
          ma += a[y * nx + x];
          mb += b[y * nx + x];
        }
      }
      ma /= n;
      mb /= n;
      double va = 0, vb = 0, cov = 0;
      for (std::size_t y = y0; y < y0 + wy; ++y) {
        for (std::size_t x = x0; x < x0 + wx; ++x) {
          const double da = a[y * nx + x] - ma, db = b[y * nx + x] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / double(count);
}

double brute_ssim(const ScalarGrid& a, const ScalarGrid& b, std::size_t window, double range) {
  const Shape& s = a.shape();
  if (s.rank() == 2) return brute_ssim_2d(a.values().data(), b.values().data(), s[0], s[1], window, range);
  double sum = 0.0;
  const std::size_t plane = s[1] * s[2];
  for (std::size_t z = 0; z < s[0]; ++z) {
    sum += brute_ssim_2d(a.values().data() + z * plane, b.values().data() + z * plane, s[1], s[2], window, range);
  }
  return sum / double(s[0]);
}

TEST(Ssim, IdenticalImagesGiveExactlyOne) {
  const auto g = random_grid(Shape({20, 17}), 1);
  EXPECT_EQ(ssim(g, g, 7, 1.0), 1.0);
  const auto v = random_grid(Shape({4, 12, 11}), 2);
  EXPECT_EQ(ssim(v, v, 7, 1.0), 1.0);
}

TEST(Ssim, ConstantImageScoresBelowOne) {
  const auto g = random_grid(Shape({16, 16}), 3);
  EXPECT_LT(ssim(g, ScalarGrid(g.shape(), 0.5), 7, 1.0), 1.0);
}

TEST(Ssim, CheckerboardAgainstInverseMatchesBruteForce) {
  const Shape s({8, 8});
  ScalarGrid board(s), inverse(s);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      board[y * 8 + x] = double((x + y) % 2);
      inverse[y * 8 + x] = 1.0 - board[y * 8 + x];
    }
  }
  for (int w : {3, 5, 7}) EXPECT_NEAR(ssim(board, inverse, w, 1.0), brute_ssim(board, inverse, w, 1.0), 1e-6);
}

TEST(Ssim, RandomImagesMatchBruteForce) {
  const auto a = random_grid(Shape({13, 19}), 4);
  const auto b = random_grid(Shape({13, 19}), 5);
  EXPECT_NEAR(ssim(a, b, 7, 1.0), brute_ssim(a, b, 7, 1.0), 1e-12);
  const auto c = random_grid(Shape({3, 9, 10}), 6);
  const auto d = random_grid(Shape({3, 9, 10}), 7);
  EXPECT_NEAR(ssim(c, d, 5, 2.0), brute_ssim(c, d, 5, 2.0), 1e-12);
}

TEST(Ssim, SymmetricAndBounded) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto a = random_grid(Shape({12, 12}), seed, -1, 1);
    const auto b = random_grid(Shape({12, 12}), seed + 50, -1, 1);
    const double ab = ssim(a, b, 7, 2.0);
    EXPECT_NEAR(ab, ssim(b, a, 7, 2.0), 1e-12);
    EXPECT_LE(ab, 1.0);
    EXPECT_GE(ab, -1.0);
  }
}

TEST(Ssim, RejectsBadArguments) {
  const auto a = random_grid(Shape({8, 8}), 1);
  EXPECT_THROW(ssim(a, random_grid(Shape({8, 9}), 1), 7, 1.0), std::invalid_argument);
  EXPECT_THROW(ssim(a, a, 7, 0.0), std::invalid_argument);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  for (const Shape& s : {Shape({9, 11}), Shape({3, 8, 9})}) {
    const auto a = random_grid(s, 8);
    auto b = random_grid(s, 9);
    std::vector<double> grad(b.size());
    const double value = ssim_with_gradient(a, b, 5, 1.0, grad);
    EXPECT_EQ(value, ssim(a, b, 5, 1.0));
    for (std::size_t i = 0; i < b.size(); i += 7) {
      const double keep = b[i];
      b[i] = keep + 1e-6;
      const double hi = ssim(a, b, 5, 1.0);
      b[i] = keep - 1e-6;
      const double lo = ssim(a, b, 5, 1.0);
      b[i] = keep;
      EXPECT_NEAR(grad[i], (hi - lo) / 2e-6, 1e-7) << "index " << i;
    }
  }
}

TEST(Smoothness, ConstantFieldIsZero) {
  VectorGrid f(Shape({5, 6}));
  for (std::size_t a = 0; a < 2; ++a) f.component(a) = ScalarGrid(f.shape(), 1.5 + double(a));
  EXPECT_EQ(smoothness(f), 0.0);
}

TEST(Smoothness, IdentityMapGivesPointsTimesRank) {
  // phi(p) = p on a 3x3 grid: unit diagonal Jacobian at all 9 points.
  const Shape s({3, 3});
  VectorGrid f(s);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      f.component(0)[y * 3 + x] = double(y);
      f.component(1)[y * 3 + x] = double(x);
    }
  }
  EXPECT_EQ(smoothness(f), 18.0);

  const Shape v({3, 3, 3});
  VectorGrid g(v);
  std::vector<std::size_t> idx(3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v.unravel(i, idx);
    for (std::size_t a = 0; a < 3; ++a) g.component(a)[i] = double(idx[a]);
  }
  EXPECT_EQ(smoothness(g), 27.0 * 3.0);
}

TEST(Smoothness, ScalesQuadratically) {
  const auto f = random_field(Shape({6, 7, 5}), 3);
  const double base = smoothness(f);
  EXPECT_GT(base, 0.0);
  for (double s : {2.0, 0.5, 3.0}) EXPECT_NEAR(smoothness(f.scaled(s)), s * s * base, 1e-12 * s * s * base);
}

TEST(Smoothness, GradientMatchesFiniteDifferences) {
  auto f = random_field(Shape({5, 6}), 4);
  VectorGrid grad(f.shape());
  add_smoothness_gradient(f, 1.0, grad);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t i = 0; i < f.shape().size(); i += 3) {
      double& v = f.component(a)[i];
      const double keep = v;
      v = keep + 1e-5;
      const double hi = smoothness(f);
      v = keep - 1e-5;
      const double lo = smoothness(f);
      v = keep;
      EXPECT_NEAR(grad.component(a)[i], (hi - lo) / 2e-5, 1e-6);
    }
  }
}

TEST(Warp, ZeroFieldIsIdentity) {
  const auto m = random_grid(Shape({4, 9, 8}), 5);
  const auto out = warp(m, VectorGrid(m.shape()));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(out[i], m[i]);
}

TEST(Warp, PullsFromDisplacedPosition) {
  const auto m = random_grid(Shape({6, 7}), 6);
  VectorGrid f(m.shape());
  f.component(1) = ScalarGrid(m.shape(), 1.0);  // x + 1
  const auto out = warp(m, f);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 7; ++x) {
      const std::size_t src = std::min<std::size_t>(x + 1, 6);
      EXPECT_EQ(out[y * 7 + x], m[y * 7 + src]);
    }
  }
}

TEST(Warp, MatchesPointwiseSampling) {
  const auto m = random_grid(Shape({5, 6, 7}), 7);
  const auto f = random_field(m.shape(), 8, 1.5);
  VectorGrid grad(m.shape());
  const auto out = warp_with_gradient(m, f, grad);
  std::vector<std::size_t> idx(3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.shape().unravel(i, idx);
    double p[3], g[3];
    for (std::size_t a = 0; a < 3; ++a) p[a] = double(idx[a]) + f.component(a)[i];
    EXPECT_NEAR(out[i], sample_with_gradient(m, p, g), 1e-12);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(grad.component(a)[i], g[a], 1e-12);
  }
}

RegistrationConfig quick_config() {
  RegistrationConfig cfg;
  cfg.iterations_per_level = 60;
  return cfg;
}

TEST(RegisterPair, RecoversUnitTranslationOfBlob) {
  const Shape s({48, 48});
  // moving(x + 1) == fixed(x): the blob in `moving` sits one unit further along x.
  const auto fixed = gaussian_blob(s, {24.0, 23.0}, 5.0);
  const auto moving = gaussian_blob(s, {24.0, 24.0}, 5.0);
  const auto result = register_pair(moving, fixed, quick_config());
  std::vector<double> ux;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (fixed[i] > 0.2) ux.push_back(result.field.component(1)[i]);
  }
  std::nth_element(ux.begin(), ux.begin() + ux.size() / 2, ux.end());
  EXPECT_NEAR(ux[ux.size() / 2], 1.0, 0.3);
}

TEST(RegisterPair, LossTraceNeverIncreasesWithinLevel) {
  const Shape s({40, 40});
  const auto fixed = gaussian_blob(s, {20.0, 19.0}, 4.0);
  const auto moving = gaussian_blob(s, {21.5, 21.0}, 4.5);
  const auto result = register_pair(moving, fixed, quick_config());
  ASSERT_FALSE(result.loss_trace.empty());
  for (std::size_t k = 1; k < result.loss_trace.size(); ++k) {
    const auto& prev = result.loss_trace[k - 1];
    const auto& cur = result.loss_trace[k];
    if (prev.level == cur.level) EXPECT_LE(cur.loss, prev.loss);
  }
  EXPECT_EQ(result.loss_trace.back().level, 0);
  EXPECT_EQ(result.final_loss, result.loss_trace.back().loss);
  EXPECT_EQ(result.moved.shape(), fixed.shape());
}

TEST(RegisterPair, IdentityPairStaysNearZero) {
  const auto img = random_grid(Shape({32, 32}), 9);
  const auto cfg = quick_config();
  const auto result = register_pair(img, img, cfg);
  double mean = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) mean += result.field.norm_at(i);
  mean /= double(img.size());
  EXPECT_LT(mean, 0.05);
  const double zero_loss = registration_loss(img, img, VectorGrid(img.shape()), cfg, pair_intensity_range(img, img));
  EXPECT_LE(result.final_loss, zero_loss);
}

TEST(RegisterPair, NonFiniteLossRaisesNumericalFailure) {
  auto moving = random_grid(Shape({16, 16}), 10);
  moving[5] = std::numeric_limits<double>::quiet_NaN();
  try {
    register_pair(moving, random_grid(Shape({16, 16}), 11), quick_config());
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_GE(e.iteration(), 0);
    EXPECT_EQ(e.frame(), -1);
  }
}

TEST(RegisterPair, Deterministic) {
  const auto a = random_grid(Shape({24, 24}), 12);
  const auto b = random_grid(Shape({24, 24}), 13);
  const auto r1 = register_pair(a, b, quick_config());
  const auto r2 = register_pair(a, b, quick_config());
  for (std::size_t k = 0; k < 2; ++k) {
    const auto x = r1.field.component(k).values();
    const auto y = r2.field.component(k).values();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
  EXPECT_EQ(r1.final_loss, r2.final_loss);
}

TEST(RegisterSequence, TwoFramesGiveThePairAndItsClosure) {
  const Shape s({32, 32});
  const ImageSequence seq({gaussian_blob(s, {16, 16}, 4), gaussian_blob(s, {16, 17}, 4)}, {1, 1});
  const auto reg = register_sequence(seq, quick_config());
  ASSERT_EQ(reg.fields.length(), 2u);
  ASSERT_EQ(reg.loss_traces.size(), 2u);
  // Field 0 pulls frame 0 onto frame 1 (blob moved +x, so it samples at x - 1).
  double u0 = 0.0, u1 = 0.0;
  const auto& f1 = seq.frame(1);
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (f1[i] > 0.3) {
      u0 += reg.fields.field(0).component(1)[i];
      u1 += reg.fields.field(1).component(1)[i];
      ++n;
    }
  }
  EXPECT_LT(u0 / double(n), -0.5);
  EXPECT_GT(u1 / double(n), 0.5);
}

TEST(RegisterSequence, StaticSequenceGivesNearZeroFields) {
  const auto img = random_grid(Shape({24, 24}), 14);
  const ImageSequence seq({img, img, img}, {1, 1});
  const auto reg = register_sequence(seq, quick_config());
  for (const auto& f : reg.fields.fields()) {
    double mean = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) mean += f.norm_at(i);
    EXPECT_LT(mean / double(img.size()), 0.05);
  }
}

TEST(RegisterSequence, IndependentOfThreadCount) {
  const auto phantom = generate(make_phantom_spec(ScheduleProfile::normal, 10, Shape({32, 32})));
  auto cfg = quick_config();
  cfg.iterations_per_level = 20;
  const auto one = register_sequence(phantom.images, cfg);
  cfg.threads = 4;
  const auto four = register_sequence(phantom.images, cfg);
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t a = 0; a < 2; ++a) {
      const auto x = one.fields.field(t).component(a).values();
      const auto y = four.fields.field(t).component(a).values();
      EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin())) << "frame " << t;
    }
  }
}

TEST(RegisterSequence, PhantomFieldsFollowGroundTruth) {
  const auto spec = make_phantom_spec(ScheduleProfile::normal, 20, Shape({64, 64}));
  const auto phantom = generate(spec);
  const auto reg = register_sequence(phantom.images, RegistrationConfig{});
  const double peak = -*std::min_element(spec.schedule.begin(), spec.schedule.end());
  std::size_t sign_matches = 0, signed_frames = 0;
  for (std::size_t t = 0; t < 20; ++t) {
    const auto& truth = phantom.fields.field(t);
    const auto& est = reg.fields.field(t);
    const auto& img = phantom.images.frame(t);
    // High-gradient part of the moving ring.
    std::vector<double> grad(img.size(), 0.0);
    double grad_max = 0.0, norm_max = 0.0;
    for (std::size_t y = 1; y + 1 < 64; ++y) {
      for (std::size_t x = 1; x + 1 < 64; ++x) {
        const std::size_t i = y * 64 + x;
        grad[i] = std::hypot(img[i + 64] - img[i - 64], img[i + 1] - img[i - 1]);
        grad_max = std::max(grad_max, grad[i]);
      }
    }
    for (std::size_t i = 0; i < img.size(); ++i) norm_max = std::max(norm_max, truth.norm_at(i));

    double cos_sum = 0.0, radial = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (truth.norm_at(i) < 0.25 * norm_max || grad[i] < 0.25 * grad_max) continue;
      double dot = 0.0;
      for (std::size_t a = 0; a < 2; ++a) dot += truth.component(a)[i] * est.component(a)[i];
      if (est.norm_at(i) > 0.0) cos_sum += dot / (truth.norm_at(i) * est.norm_at(i));
      const double ry = spec.center[0] - double(i / 64), rx = spec.center[1] - double(i % 64);
      radial += (est.component(0)[i] * ry + est.component(1)[i] * rx) / std::hypot(ry, rx);
      ++n;
    }
    ASSERT_GT(n, 0u);
    if (spec.schedule[t] < -0.5 * peak) EXPECT_GT(cos_sum / double(n), 0.9) << "contraction pair " << t;
    if (std::abs(spec.schedule[t]) > 0.05) {
      ++signed_frames;
      if ((radial > 0) == (spec.schedule[t] > 0)) ++sign_matches;
    }
  }
  EXPECT_GE(double(sign_matches), 0.9 * double(signed_frames));
}

}  // namespace
}  // namespace cardiokey
