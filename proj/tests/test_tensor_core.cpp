#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "ovsr/autodiff.hpp"
#include "ovsr/ops.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/resample.hpp"
#include "ovsr/tensor.hpp"
#include "ovsr/tensor_io.hpp"

using namespace ovsr;

namespace {

// sum(out * weights) for a fixed random weight tensor, so every output element
// contributes with a distinct coefficient.
Tensor weighted_sum(const Tensor& out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return sum(mul(out, oracle::random_tensor(out.shape(), rng)));
}

constexpr double kGradTol = 1e-4;

}  // namespace

TEST(Tensor, ShapeAndIndexing) {
  Tensor t({2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(t.shape().plane(), 20);
  t.mutable_data()[t.offset(1, 2, 3, 4)] = 7;
  EXPECT_EQ(t.at(1, 2, 3, 4), 7);
  EXPECT_EQ(t.data().back(), 7);
}

TEST(Tensor, CloneIsDeepAndIdsAreUnique) {
  Tensor a = Tensor::full({1, 1, 2, 2}, 3);
  Tensor b = a.clone();
  b.mutable_data()[0] = 0;
  EXPECT_EQ(a.data()[0], 3);
  EXPECT_NE(a.id(), b.id());
}

TEST(Tensor, ItemRequiresScalar) {
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor({1, 1, 2, 1}).item(), DimensionError);
}

TEST(Conv2d, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(1, 9);
  std::uniform_int_distribution<int> ch(1, 5);
  const int kernels[] = {1, 3, 5};
  double worst = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int k = kernels[trial % 3];
    const bool same = trial % 2 == 0;
    const int h = dim(rng) + (same ? 0 : k - 1);
    const int w = dim(rng) + (same ? 0 : k - 1);
    const Tensor x = oracle::random_tensor({1 + trial % 2, ch(rng), h, w}, rng);
    const Tensor wt = oracle::random_tensor({ch(rng), x.shape().c, k, k}, rng);
    const Tensor b = oracle::random_tensor({1, wt.shape().n, 1, 1}, rng);
    const bool with_bias = trial % 4 < 2;
    const Tensor got = conv2d(x, wt, with_bias ? b : Tensor(), same ? Padding::kSame : Padding::kValid);
    const Tensor want = oracle::conv2d(x, wt, with_bias ? &b : nullptr, same);
    ASSERT_EQ(got.shape(), want.shape());
    worst = std::max<double>(worst, max_abs_diff(got, want));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Conv2d, RejectsBadGeometry) {
  const Tensor x({1, 3, 5, 5});
  try {
    conv2d(x, Tensor({2, 4, 3, 3}), Tensor());
    FAIL() << "channel mismatch accepted";
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.axis(), "channels");
  }
  EXPECT_THROW(conv2d(x, Tensor({2, 3, 2, 2}), Tensor()), DimensionError);
  EXPECT_THROW(conv2d(x, Tensor({2, 3, 3, 3}), Tensor({1, 3, 1, 1})), DimensionError);
  EXPECT_THROW(conv2d(Tensor({1, 3, 2, 2}), Tensor({2, 3, 3, 3}), Tensor(), Padding::kValid), DimensionError);
}

TEST(Conv2d, IdentityKernelIsIdentity) {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor({2, 1, 6, 7}, rng);
  Tensor w({1, 1, 3, 3});
  w.mutable_data()[4] = 1;
  EXPECT_TRUE(bitwise_equal(conv2d(x, w, Tensor()), x));
}

TEST(LeakyRelu, Values) {
  Tensor x({1, 1, 1, 3}, {-2.0, 0.0, 3.0});
  const Tensor y = leaky_relu(x, 0.2);
  EXPECT_DOUBLE_EQ(y.data()[0], -0.4);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.0);
  EXPECT_DOUBLE_EQ(y.data()[2], 3.0);
}

TEST(PixelShuffle, ChannelToTileMapping) {
  // (1, 4, 1, 1) -> (1, 1, 2, 2): channel i*2+j lands at (i, j).
  Tensor x({1, 4, 1, 1}, {10, 11, 12, 13});
  const Tensor y = pixel_shuffle(x, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.at(0, 0, 0, 0), 10);
  EXPECT_EQ(y.at(0, 0, 0, 1), 11);
  EXPECT_EQ(y.at(0, 0, 1, 0), 12);
  EXPECT_EQ(y.at(0, 0, 1, 1), 13);
}

TEST(PixelShuffle, GeneralLayoutAndInverse) {
  std::mt19937_64 rng(3);
  const Tensor x = oracle::random_tensor({2, 12, 3, 4}, rng);
  const Tensor y = pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 6, 8}));
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 4; ++w)
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) ASSERT_EQ(y.at(n, c, 2 * h + i, 2 * w + j), x.at(n, c * 4 + i * 2 + j, h, w));
  EXPECT_TRUE(bitwise_equal(pixel_unshuffle(y, 2), x));
  EXPECT_THROW(pixel_shuffle(Tensor({1, 6, 2, 2}), 2), DimensionError);
}

TEST(ConcatChannels, StacksInOrder) {
  Tensor a = Tensor::full({1, 1, 2, 2}, 1);
  Tensor b = Tensor::full({1, 2, 2, 2}, 2);
  const Tensor c = concat_channels({a, b});
  EXPECT_EQ(c.shape(), (Shape{1, 3, 2, 2}));
  EXPECT_EQ(c.at(0, 0, 1, 1), 1);
  EXPECT_EQ(c.at(0, 2, 0, 0), 2);
  EXPECT_THROW(concat_channels({a, Tensor({1, 1, 3, 2})}), DimensionError);
}

TEST(Charbonnier, FloorAndDirectFormula) {
  const Tensor a = Tensor::full({1, 1, 2, 2}, 0.5);
  EXPECT_NEAR(charbonnier(a, a, 1e-3).item(), 1e-3, 1e-15);
  const Tensor one({1, 1, 1, 1}, {1.0});
  const Tensor zero({1, 1, 1, 1}, {0.0});
  EXPECT_NEAR(charbonnier(one, zero, 1e-3).item(), std::sqrt(1 + 1e-6), 1e-15);
}

TEST(GaussianBlur, KernelGeometry) {
  const auto k = gaussian_kernel_1d(1.6);
  EXPECT_EQ(k.size(), 11u);
  double s = 0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
  EXPECT_EQ(gaussian_kernel_1d(1.6, 3).size(), 7u);
}

TEST(GaussianBlur, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(1, 14);
  std::uniform_real_distribution<double> sig(0.4, 2.5);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = sig(rng);
    const int radius = trial % 3 == 0 ? default_blur_radius(sigma) : 1 + trial % 6;
    const Tensor x = oracle::random_tensor({1 + trial % 2, 1 + trial % 3, dim(rng), dim(rng)}, rng);
    const Tensor got = gaussian_blur(x, sigma, radius);
    worst = std::max<double>(worst, max_abs_diff(got, oracle::gaussian_blur(x, sigma, radius)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(GaussianBlur, PreservesConstants) {
  const Tensor x = Tensor::full({1, 3, 9, 7}, 0.25);
  EXPECT_LT(max_abs_diff(gaussian_blur(x, 1.6), x), 1e-15);
}

TEST(Downsample, KeepsOffsetZeroAndChecksDivisibility) {
  std::mt19937_64 rng(5);
  const Tensor x = oracle::random_tensor({2, 3, 8, 12}, rng);
  EXPECT_TRUE(bitwise_equal(downsample(x, 4), oracle::decimate(x, 4)));
  try {
    downsample(Tensor({1, 1, 10, 8}), 4);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.axis(), "height");
  }
  try {
    downsample(Tensor({1, 1, 8, 10}), 4);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.axis(), "width");
  }
}

TEST(Bicubic, KeysKernelValues) {
  EXPECT_DOUBLE_EQ(cubic_weight(0), 1);
  EXPECT_DOUBLE_EQ(cubic_weight(1), 0);
  EXPECT_DOUBLE_EQ(cubic_weight(2), 0);
  EXPECT_DOUBLE_EQ(cubic_weight(0.5), oracle::keys(0.5));
  EXPECT_DOUBLE_EQ(cubic_weight(-1.5), oracle::keys(1.5));
  // Partition of unity at any phase.
  for (double p : {0.0, 0.125, 0.375, 0.5, 0.875}) {
    double s = 0;
    for (int m = -1; m <= 2; ++m) s += cubic_weight(p - m);
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(Bicubic, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> dim(1, 9);
  const int factors[] = {2, 3, 4};
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int f = factors[trial % 3];
    const Tensor x = oracle::random_tensor({1 + trial % 2, 1 + trial % 3, dim(rng), dim(rng)}, rng);
    worst = std::max<double>(worst, max_abs_diff(bicubic_upsample(x, f), oracle::bicubic(x, f)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Bicubic, ReproducesConstantsAndInteriorRamps) {
  EXPECT_LT(max_abs_diff(bicubic_upsample(Tensor::full({1, 1, 5, 5}, 0.7), 4), Tensor::full({1, 1, 20, 20}, 0.7)),
            1e-15);
  Tensor ramp({1, 1, 1, 8});
  for (int i = 0; i < 8; ++i) ramp.mutable_data()[i] = i;
  const Tensor up = bicubic_upsample(ramp, 4);
  // Away from the replicated edges the cubic reproduces the linear ramp.
  for (int x = 8; x < 24; ++x) EXPECT_NEAR(up.at(0, 0, 0, x), (x + 0.5) / 4 - 0.5, 1e-12);
}

// ---------------------------------------------------------------------------
// Gradients of every op.

TEST(Gradients, Conv2dSameValidPointwise) {
  std::mt19937_64 rng(7);
  for (int k : {1, 3, 5}) {
    for (bool same : {true, false}) {
      Tensor x = oracle::random_tensor({2, 3, 6, 5}, rng);
      Tensor w = oracle::random_tensor({4, 3, k, k}, rng);
      Tensor b = oracle::random_tensor({1, 4, 1, 1}, rng);
      const auto r = gradcheck::check({&x, &w, &b}, [&] {
        return weighted_sum(conv2d(x, w, b, same ? Padding::kSame : Padding::kValid));
      });
      EXPECT_LT(r.max_rel_error, kGradTol) << "k=" << k << " same=" << same << " worst " << r.worst;
    }
  }
}

TEST(Gradients, Elementwise) {
  std::mt19937_64 rng(8);
  Tensor a = oracle::random_tensor({2, 2, 3, 3}, rng);
  Tensor b = oracle::random_tensor({2, 2, 3, 3}, rng);
  // Keep leaky-ReLU inputs away from the kink.
  Tensor c = oracle::random_tensor({2, 2, 3, 3}, rng, 0.1, 1.0);
  for (std::size_t i = 0; i < c.data().size(); i += 2) c.mutable_data()[i] = -c.data()[i];
  auto check = [](std::vector<Tensor*> ps, std::function<Tensor()> f, const char* name) {
    const auto r = gradcheck::check(ps, f);
    EXPECT_LT(r.max_rel_error, kGradTol) << name << " worst " << r.worst;
  };
  check({&a, &b}, [&] { return weighted_sum(add(a, b)); }, "add");
  check({&a, &b}, [&] { return weighted_sum(sub(a, b)); }, "sub");
  check({&a, &b}, [&] { return weighted_sum(mul(a, b)); }, "mul");
  check({&a}, [&] { return weighted_sum(scale(a, -1.75)); }, "scale");
  check({&a}, [&] { return sum(a); }, "sum");
  check({&a}, [&] { return mean(a); }, "mean");
  check({&c}, [&] { return weighted_sum(leaky_relu(c, 0.2)); }, "leaky_relu");
  check({&a, &b}, [&] { return charbonnier(a, b, 1e-3); }, "charbonnier");
  check({&a, &b}, [&] { return weighted_sum(concat_channels({a, b})); }, "concat");
}

TEST(Gradients, Rearrangements) {
  std::mt19937_64 rng(9);
  Tensor x = oracle::random_tensor({2, 8, 3, 2}, rng);
  Tensor y = oracle::random_tensor({1, 3, 4, 6}, rng);
  auto r = gradcheck::check({&x}, [&] { return weighted_sum(pixel_shuffle(x, 2)); });
  EXPECT_LT(r.max_rel_error, kGradTol);
  r = gradcheck::check({&y}, [&] { return weighted_sum(pixel_unshuffle(y, 2)); });
  EXPECT_LT(r.max_rel_error, kGradTol);
}

TEST(Gradients, Resampling) {
  std::mt19937_64 rng(10);
  Tensor x = oracle::random_tensor({2, 2, 8, 8}, rng);
  auto r = gradcheck::check({&x}, [&] { return weighted_sum(gaussian_blur(x, 1.6)); });
  EXPECT_LT(r.max_rel_error, kGradTol) << "blur";
  r = gradcheck::check({&x}, [&] { return weighted_sum(downsample(x, 4)); });
  EXPECT_LT(r.max_rel_error, kGradTol) << "downsample";
  Tensor s = oracle::random_tensor({1, 2, 3, 4}, rng);
  r = gradcheck::check({&s}, [&] { return weighted_sum(bicubic_upsample(s, 4)); });
  EXPECT_LT(r.max_rel_error, kGradTol) << "bicubic";
}

// ---------------------------------------------------------------------------
// Tape semantics.

TEST(Tape, Errors) {
  GradientTape tape;
  EXPECT_THROW(tape.backward(Tensor::scalar(1)), std::logic_error);
  Tensor a = Tensor::full({1, 1, 2, 2}, 1);
  tape.watch(a);
  Tensor out;
  {
    TapeScope scope(tape);
    out = scale(a, 2);
  }
  EXPECT_THROW(tape.backward(out), DimensionError);
  EXPECT_THROW(tape.backward(Tensor::scalar(3)), std::logic_error);
}

TEST(Tape, UnreachableWatchedGetsZeros) {
  GradientTape tape;
  Tensor a = Tensor::full({1, 1, 2, 2}, 1);
  Tensor unused = Tensor::full({1, 2, 1, 1}, 1);
  tape.watch(a);
  tape.watch(unused);
  Tensor l;
  {
    TapeScope scope(tape);
    l = sum(scale(a, 3));
  }
  const auto g = tape.backward(l);
  for (double v : g.of(a).data()) EXPECT_EQ(v, 3);
  for (double v : g.of(unused).data()) EXPECT_EQ(v, 0);
  EXPECT_TRUE(tape.empty());
}

TEST(Tape, NoGradScopeRecordsNothing) {
  GradientTape tape;
  Tensor a = Tensor::full({1, 1, 2, 2}, 1);
  tape.watch(a);
  TapeScope scope(tape);
  {
    NoGradScope off;
    sum(a);
  }
  EXPECT_TRUE(tape.empty());
  sum(a);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(Tape, GradientsAccumulateOverReuse) {
  GradientTape tape;
  Tensor a({1, 1, 1, 1}, {3.0});
  tape.watch(a);
  Tensor l;
  {
    TapeScope scope(tape);
    l = sum(mul(a, a));  // d/da a^2 = 2a
  }
  EXPECT_DOUBLE_EQ(tape.backward(l).of(a).item(), 6.0);
}

// ---------------------------------------------------------------------------
// Determinism and serialization.

TEST(Determinism, ConvForwardBackwardIndependentOfThreadCount) {
  std::mt19937_64 rng(11);
  Tensor x = oracle::random_tensor({5, 4, 9, 9}, rng);
  Tensor w = oracle::random_tensor({6, 4, 3, 3}, rng);
  Tensor b = oracle::random_tensor({1, 6, 1, 1}, rng);
  auto run = [&](int threads) {
    ThreadCountScope scope(threads);
    GradientTape tape;
    tape.watch(x);
    tape.watch(w);
    tape.watch(b);
    Tensor l;
    {
      TapeScope s(tape);
      l = weighted_sum(leaky_relu(conv2d(x, w, b), 0.2));
    }
    const auto g = tape.backward(l);
    return std::vector<Tensor>{l, g.of(x), g.of(w), g.of(b)};
  };
  const auto one = run(1);
  const auto three = run(3);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_TRUE(bitwise_equal(one[i], three[i])) << i;
}

TEST(ParallelFor, PropagatesExceptions) {
  ThreadCountScope scope(3);
  EXPECT_THROW(parallel_for(8, [](std::size_t i) {
                 if (i == 5) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(TensorIo, RoundTripAndBadMagic) {
  std::mt19937_64 rng(12);
  const Tensor x = oracle::random_tensor({2, 3, 4, 5}, rng);
  std::stringstream ss;
  write_tensor(ss, x);
  EXPECT_TRUE(bitwise_equal(read_tensor(ss), x));
  std::stringstream bad("NOTATENSOR");
  EXPECT_THROW(read_tensor(bad), FormatError);
}
