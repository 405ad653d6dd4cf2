#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "restorl/fft.hpp"

using namespace restorl;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("constant image transforms to a single DC bin") {
  const double c = 0.4;
  const Spectrum spec = fft2(Image(16, 16, 1, c));
  const int cy = 8, cx = 8;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double mag = std::hypot(spec.re[spec.index(y, x, 0)], spec.im[spec.index(y, x, 0)]);
      if (y == cy && x == cx) {
        CHECK(mag == doctest::Approx(c * 256.0).epsilon(1e-9));
      } else {
        CHECK(mag < 1e-9);
      }
    }
  }
}

TEST_CASE("roundtrip of a random 32x24 image") {
  std::mt19937_64 rng(3);
  const Image img = oracle::random_image(32, 24, 3, rng);
  CHECK(max_abs_diff(ifft2(fft2(img)), img) < 1e-6);
}

TEST_CASE("pure cosine maps to exactly two symmetric bins") {
  const int h = 16, w = 12;
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(y, x, 0) = std::cos(2.0 * M_PI * y / h);
  }
  const Spectrum spec = fft2(img);
  const int cy = h / 2, cx = w / 2;
  const double expected = h * w / 2.0;
  int nonzero = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double mag = std::hypot(spec.re[spec.index(y, x, 0)], spec.im[spec.index(y, x, 0)]);
      if (mag > 1e-8) {
        ++nonzero;
        CHECK(x == cx);
        CHECK(std::abs(y - cy) == 1);
        CHECK(mag == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
  CHECK(nonzero == 2);
}

TEST_CASE("Parseval energy is preserved") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 5; ++i) {
    const Image img = oracle::random_image(24, 17, 1, rng);
    double signal = 0.0;
    for (double v : img.data) signal += v * v;
    const double spectral = fft2(img).energy();
    CHECK(spectral == doctest::Approx(signal * img.pixel_count()).epsilon(1e-5));
  }
}

TEST_CASE("roundtrip under 1e-6 on 200 random images of assorted sizes") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 200; ++i) {
    const int h = 8 + static_cast<int>(oracle::uniform(rng, 0.0, 57.0));
    const int w = 8 + static_cast<int>(oracle::uniform(rng, 0.0, 57.0));
    const Image img = oracle::random_image(h, w, 1, rng);
    CHECK(max_abs_diff(ifft2(fft2(img)), img) < 1e-6);
  }
}

TEST_CASE("mask_bins rounds half up and clamps") {
  CHECK(mask_bins(0.5, 7) == 4);    // 3.5 rounds up
  CHECK(mask_bins(0.5, 8) == 4);
  CHECK(mask_bins(0.01, 8) == 1);   // floor of 1 bin
  CHECK(mask_bins(0.999, 32) == 32);
  CHECK(mask_bins(0.25, 32) == 8);
}

TEST_CASE("lowfreq_mask: all-pass when the rectangle covers the grid") {
  std::mt19937_64 rng(31);
  const Spectrum spec = fft2(oracle::random_image(16, 16, 1, rng));
  const BandSplit split = lowfreq_mask(spec, 0.999, 0.999);
  for (std::size_t i = 0; i < spec.re.size(); ++i) {
    CHECK(split.low.re[i] == spec.re[i]);
    CHECK(split.low.im[i] == spec.im[i]);
    CHECK(split.high.re[i] == 0.0);
    CHECK(split.high.im[i] == 0.0);
  }
}

TEST_CASE("lowfreq_mask: DC stays in the low band at any ratio") {
  const Image img(16, 16, 1, 0.7);
  const Spectrum spec = fft2(img);
  for (double r : {0.05, 0.2, 0.6}) {
    const BandSplit split = lowfreq_mask(spec, r, r);
    CHECK(max_abs_diff(ifft2(split.low), img) < 1e-6);
    const Image hi = ifft2(split.high);
    for (double v : hi.data) CHECK(std::fabs(v) < 1e-9);
  }
}

TEST_CASE("lowfreq_mask: bands are exactly complementary") {
  std::mt19937_64 rng(37);
  const Image img = oracle::random_image(24, 18, 3, rng);
  const Spectrum spec = fft2(img);

  for (double r : {0.13, 0.5, 0.77}) {
    const BandSplit split = lowfreq_mask(spec, r, r);
    // bin-by-bin exact complement
    for (std::size_t i = 0; i < spec.re.size(); ++i) {
      CHECK(split.low.re[i] + split.high.re[i] == spec.re[i]);
      CHECK(split.low.im[i] + split.high.im[i] == spec.im[i]);
    }
  }

  const BandSplit split = lowfreq_mask(spec, 0.5, 0.5);
  const Image low = ifft2(split.low);
  const Image high = ifft2(split.high);
  Image sum = low;
  for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += high.data[i];
  CHECK(max_abs_diff(sum, img) < 1e-6);
}

TEST_CASE("lowfreq_mask rejects ratios outside (0,1)") {
  const Spectrum spec = fft2(Image(8, 8, 1, 0.5));
  CHECK_THROWS_AS(lowfreq_mask(spec, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lowfreq_mask(spec, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lowfreq_mask(spec, -0.1, 0.5), std::invalid_argument);
}
