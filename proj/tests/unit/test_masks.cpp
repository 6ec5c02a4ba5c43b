#include <cmath>
#include <random>

#include "doctest.h"
#include "specband/masks.hpp"
#include "specband/rng.hpp"

using namespace specband;

namespace {

TensorImage random_image(int h, int w, int c, uint64_t seed) {
  auto eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  TensorImage img(h, w, c);
  for (double& v : img.data) v = dist(eng);
  return img;
}

// Complex inverse of a masked spectrum, reporting the largest imaginary
// component, which conjugate symmetry should keep near zero.
double imag_residue(const TensorImage& img, const FrequencyMask& mask) {
  DftSpectrum s = dft2(img);
  apply_mask(s, mask);
  const double norm = 1.0 / std::sqrt(double(s.height) * s.width);
  double m = 0;
  for (int c = 0; c < s.channels; ++c) {
    std::vector<cplx> g(size_t(s.height) * s.width);
    for (int u = 0; u < s.height; ++u)
      for (int v = 0; v < s.width; ++v) g[size_t(u) * s.width + v] = s.at(u, v, c);
    // Row/column inverse passes.
    for (int u = 0; u < s.height; ++u) {
      std::vector<cplx> row(g.begin() + size_t(u) * s.width,
                            g.begin() + size_t(u + 1) * s.width);
      fft_inplace(row, +1);
      std::copy(row.begin(), row.end(), g.begin() + size_t(u) * s.width);
    }
    for (int v = 0; v < s.width; ++v) {
      std::vector<cplx> col(size_t(s.height));
      for (int u = 0; u < s.height; ++u) col[u] = g[size_t(u) * s.width + v];
      fft_inplace(col, +1);
      for (int u = 0; u < s.height; ++u)
        m = std::max(m, std::abs(col[u].imag() * norm));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("radial band mask i=2 matches lattice enumeration on 8x8") {
  FrequencyMask mask = radial_band_mask(8, 8, 2);
  int count = 0;
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      int fu = signed_frequency(u, 8), fv = signed_frequency(v, 8);
      double r = std::sqrt(double(fu) * fu + double(fv) * fv);
      bool expected = r >= 2.0 && r < 3.0;
      CHECK(mask.at(u, v) == (expected ? 1.0 : 0.0));
      count += expected;
    }
  CHECK(count > 0);
}

TEST_CASE("radial bands include DC at i=0 and partition the grid") {
  FrequencyMask zero = radial_band_mask(10, 12, 0);
  CHECK(zero.at(0, 0) == 1.0);

  std::vector<double> sum(size_t(10) * 12, 0.0);
  for (int i = 0; i <= 10; ++i) {
    FrequencyMask m = radial_band_mask(10, 12, i);
    for (size_t k = 0; k < sum.size(); ++k) sum[k] += m.gain[k];
  }
  for (double v : sum) CHECK(v == 1.0);  // disjoint and exhaustive
}

TEST_CASE("butterworth gain hits the 3 dB point at the cutoff") {
  FrequencyMask low = butterworth_mask(64, 64, 10.0, 5, PassKind::low);
  CHECK(low.at(0, 0) == 1.0);
  CHECK(low.at(0, 10) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(low.at(10, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  // Closed form two octaves out: r = 2*cutoff, order 5.
  CHECK(low.at(0, 20) ==
        doctest::Approx(1.0 / std::sqrt(1.0 + 1024.0)).epsilon(1e-12));

  FrequencyMask high = butterworth_mask(64, 64, 10.0, 5, PassKind::high);
  CHECK(high.at(0, 0) == 0.0);
  CHECK(high.at(0, 10) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("butterworth gains are monotone in radius") {
  FrequencyMask low = butterworth_mask(64, 64, 8.0, 5, PassKind::low);
  FrequencyMask high = butterworth_mask(64, 64, 8.0, 5, PassKind::high);
  for (int v = 1; v < 32; ++v) {
    CHECK(low.at(0, v) < low.at(0, v - 1));
    CHECK(high.at(0, v) > high.at(0, v - 1));
  }
}

TEST_CASE("sinc mask gain") {
  FrequencyMask m = sinc_mask(32, 32, 0.7);
  CHECK(m.at(0, 0) == 1.0);
  double r = 5.0;
  CHECK(m.at(0, 5) ==
        doctest::Approx(std::abs(std::sin(0.7 * r) / (0.7 * r))).epsilon(1e-12));
  for (double g : m.gain) {
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("random union passes near its centers and blocks elsewhere") {
  FrequencyMask m = random_union_mask(
      256, 256, {{5, 2}, {30, 2}, {50, 2}, {80, 2}}, 5);
  auto gain_at_radius = [&](int r) { return m.at(0, r); };
  for (int c : {5, 30, 50, 80}) CHECK(gain_at_radius(c) > 0.5);
  for (int r : {15, 40, 65, 100}) CHECK(gain_at_radius(r) <= 0.5);
}

TEST_CASE("masks keep filtered real images real") {
  TensorImage img = random_image(16, 12, 2, 77);
  CHECK(imag_residue(img, radial_band_mask(16, 12, 2)) < 1e-9);
  CHECK(imag_residue(img, butterworth_mask(16, 12, 3.0, 5, PassKind::low)) <
        1e-9);
  CHECK(imag_residue(img, sinc_mask(16, 12, 0.5)) < 1e-9);
  CHECK(imag_residue(img, random_union_mask(16, 12, {{3, 2}})) < 1e-9);
}

TEST_CASE("phase filter that keeps all phases is the identity") {
  TensorImage img = random_image(12, 12, 1, 78);
  TensorImage out = phase_filter(img, full_mask(12, 12), false);
  double m = 0;
  for (size_t i = 0; i < img.data.size(); ++i)
    m = std::max(m, std::abs(img.data[i] - out.data[i]));
  CHECK(m < 1e-10);
}

TEST_CASE("zeroing phase preserves amplitudes") {
  TensorImage img = random_image(12, 12, 1, 79);
  DftSpectrum before = dft2(img);
  TensorImage out = phase_filter(img, full_mask(12, 12), true);
  DftSpectrum after = dft2(out);
  // Amplitude spectrum of the flattened-phase image: recomputing the DFT of
  // idft2(|X|) loses nothing because |X| is already conjugate-symmetric.
  for (size_t i = 0; i < before.coeff.size(); ++i)
    CHECK(std::abs(after.coeff[i]) ==
          doctest::Approx(std::abs(before.coeff[i])).epsilon(1e-8));
}

TEST_CASE("filter_image with an all-ones mask is the identity") {
  TensorImage img = random_image(10, 14, 3, 80);
  TensorImage out = filter_image(img, full_mask(10, 14));
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-10));
}

TEST_CASE("mask input validation") {
  CHECK_THROWS_AS(radial_band_mask(8, 8, -1), Error);
  CHECK_THROWS_AS(butterworth_mask(8, 8, 0.0, 5, PassKind::low), Error);
  CHECK_THROWS_AS(sinc_mask(8, 8, 0.0), Error);
  CHECK_THROWS_AS(random_union_mask(8, 8, {}), Error);
  TensorImage img = random_image(8, 8, 1, 81);
  CHECK_THROWS_AS(filter_image(img, full_mask(4, 4)), Error);
}
