#include <cmath>
#include <vector>

#include "beamosd/dsp.hpp"
#include "beamosd/fft.hpp"
#include "beamosd/runtime.hpp"
#include "doctest.h"

using namespace beamosd;

namespace {

// Quadratic-time DFT used as the FFT oracle.
cvec naive_dft(const cvec& x) {
  const int n = static_cast<int>(x.size());
  cvec out(n, cplx(0, 0));
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < n; ++t)
      out[k] += x[t] * std::polar(1.0, -kTwoPi * k * t / n);
  return out;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
  return w;
}

}  // namespace

TEST_CASE("fft matches a quadratic DFT on random input") {
  Rng rng(3);
  for (int n : {2, 8, 64}) {
    cvec x(n);
    for (cplx& v : x) v = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    cvec expect = naive_dft(x);
    cvec got = x;
    fft_inplace(got, false);
    for (int k = 0; k < n; ++k) CHECK(std::abs(got[k] - expect[k]) <= 1e-9);

    fft_inplace(got, true);
    for (int k = 0; k < n; ++k) CHECK(std::abs(got[k] - x[k]) <= 1e-12);
  }
}

TEST_CASE("fft of a unit impulse is flat") {
  cvec x(16, cplx(0, 0));
  x[0] = cplx(1, 0);
  fft_inplace(x, false);
  for (const cplx& v : x) CHECK(std::abs(v - cplx(1, 0)) <= 1e-12);
}

TEST_CASE("rfft of a bin-centered cosine puts n/2 in that bin") {
  const int n = 64;
  const int k0 = 5;
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) x[t] = std::cos(kTwoPi * k0 * t / n);
  cvec half = rfft(x, n);
  REQUIRE(static_cast<int>(half.size()) == n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    if (k == k0)
      CHECK(std::abs(half[k] - cplx(n / 2.0, 0)) <= 1e-9);
    else
      CHECK(std::abs(half[k]) <= 1e-9);
  }
}

TEST_CASE("irfft inverts rfft for even and odd lengths") {
  Rng rng(4);
  for (int n : {64, 100, 257}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const int nfft = next_pow2(n);
    std::vector<double> back = irfft(rfft(x, nfft), nfft);
    for (int t = 0; t < n; ++t) CHECK(std::abs(back[t] - x[t]) <= 1e-12);
    for (int t = n; t < nfft; ++t) CHECK(std::abs(back[t]) <= 1e-12);
  }
}

TEST_CASE("stft frame count follows the hop formula") {
  StftConfig cfg;
  CHECK(cfg.num_frames(400) == 1);
  CHECK(cfg.num_frames(399) == 0);
  CHECK(cfg.num_frames(560) == 2);
  CHECK(cfg.num_frames(16000) == 98);
  CHECK_THROWS_AS(stft(std::vector<double>(399, 0.0), cfg), ArgumentError);
}

TEST_CASE("stft of silence is all zero") {
  StftConfig cfg;
  Stft s = stft(std::vector<double>(1200, 0.0), cfg);
  CHECK(s.num_frames == 6);
  CHECK(s.num_bins == 257);
  for (const cplx& v : s.data) CHECK(v == cplx(0, 0));
}

TEST_CASE("stft frames match a direct windowed DFT") {
  StftConfig cfg;
  Rng rng(9);
  std::vector<double> x(1000);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  Stft s = stft(x, cfg);
  REQUIRE(s.num_frames == 4);

  std::vector<double> w = hann_window(cfg.win_len);
  for (int t = 0; t < s.num_frames; ++t) {
    cvec buf(cfg.fft_size, cplx(0, 0));
    for (int i = 0; i < cfg.win_len; ++i)
      buf[i] = cplx(x[t * cfg.hop + i] * w[i], 0);
    cvec expect = naive_dft(buf);
    for (int k = 0; k < s.num_bins; ++k)
      CHECK(std::abs(s.frame(t)[k] - expect[k]) <= 1e-8);
  }
}

TEST_CASE("stft concentrates a bin-centered sine within one bin") {
  // With the window spanning the whole FFT, a Hann-windowed complex
  // exponential at a bin center lands on exactly three bins (k0, k0 +/- 1),
  // so the concentration is analytic. Zero padding (the 400/512 default)
  // spreads the mainlobe; that case gets a correspondingly looser bound.
  auto concentration = [](const StftConfig& cfg, int k0) {
    const double freq = cfg.freq_grid().bin_freq(k0);
    std::vector<double> x(1600);
    for (size_t t = 0; t < x.size(); ++t)
      x[t] = std::sin(kTwoPi * freq * t / cfg.sample_rate);
    Stft s = stft(x, cfg);
    double worst = 1.0;
    for (int t = 0; t < s.num_frames; ++t) {
      double total = 0.0, near = 0.0;
      for (int k = 0; k < s.num_bins; ++k) {
        double p = std::norm(s.frame(t)[k]);
        total += p;
        if (std::abs(k - k0) <= 1) near += p;
      }
      worst = std::min(worst, near / total);
    }
    return worst;
  };
  CHECK(concentration(StftConfig(16000.0, 512, 256, 512), 32) >= 0.99);
  CHECK(concentration(StftConfig(), 32) >= 0.97);
}

TEST_CASE("stft satisfies Parseval per frame") {
  StftConfig cfg;
  Rng rng(10);
  std::vector<double> x(720);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  Stft s = stft(x, cfg);
  std::vector<double> w = hann_window(cfg.win_len);
  for (int t = 0; t < s.num_frames; ++t) {
    double time_energy = 0.0;
    for (int i = 0; i < cfg.win_len; ++i) {
      double v = x[t * cfg.hop + i] * w[i];
      time_energy += v * v;
    }
    // Full-spectrum sum from the half spectrum: interior bins appear twice.
    double spec_energy = std::norm(s.frame(t)[0]) +
                         std::norm(s.frame(t)[s.num_bins - 1]);
    for (int k = 1; k < s.num_bins - 1; ++k)
      spec_energy += 2.0 * std::norm(s.frame(t)[k]);
    spec_energy /= cfg.fft_size;
    CHECK(std::abs(spec_energy - time_energy) <= 1e-6 * time_energy);
  }
}

TEST_CASE("mel bank centers are increasing and follow the HTK curve") {
  StftConfig cfg;
  MelBank bank = make_mel_bank(40, cfg, 0.0, 8000.0);
  CHECK(bank.num_mels == 40);
  CHECK(bank.num_bins == 257);
  REQUIRE(static_cast<int>(bank.center_freqs.size()) == 40);
  for (int f = 1; f < 40; ++f)
    CHECK(bank.center_freqs[f] > bank.center_freqs[f - 1]);

  // Centers are uniform on the mel axis: mel(c_f) = (f+1)/41 * mel(8000).
  const double mel_hi = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  for (int f = 0; f < 40; ++f) {
    double mel_c = 2595.0 * std::log10(1.0 + bank.center_freqs[f] / 700.0);
    CHECK(mel_c == doctest::Approx(mel_hi * (f + 1) / 41.0).epsilon(1e-9));
  }

  for (double w : bank.weights) CHECK(w >= 0.0);
  CHECK_THROWS_AS(make_mel_bank(0, cfg, 0.0, 8000.0), ArgumentError);
  CHECK_THROWS_AS(make_mel_bank(40, cfg, 0.0, 9000.0), ArgumentError);
}

TEST_CASE("each mel filter is triangular around its center") {
  StftConfig cfg;
  MelBank bank = make_mel_bank(40, cfg, 300.0, 5000.0);
  const double bin_hz = cfg.sample_rate / cfg.fft_size;
  for (int f = 0; f < bank.num_mels; ++f) {
    const double* w = bank.filter(f);
    // Nonzero support only strictly inside (edge below, edge above).
    bool rising = true;
    double prev = 0.0;
    int nonzero = 0;
    for (int k = 0; k < bank.num_bins; ++k) {
      if (w[k] == 0.0) continue;
      ++nonzero;
      CHECK(w[k] <= 1.0 + 1e-12);
      const double hz = k * bin_hz;
      CHECK(hz > 300.0 - 1e-9);
      CHECK(hz < 5000.0 + 1e-9);
      if (rising && w[k] < prev) rising = false;
      if (!rising) CHECK(w[k] <= prev + 1e-12);
      prev = w[k];
    }
    CHECK(nonzero >= 1);
  }
}

TEST_CASE("log_mel floors zeros and tracks amplitude scaling") {
  StftConfig cfg;
  MelBank bank = make_mel_bank(40, cfg, 0.0, 8000.0);

  Stft zero;
  zero.num_frames = 3;
  zero.num_bins = 257;
  zero.data.assign(3 * 257, cplx(0, 0));
  std::vector<double> lm = log_mel(zero, bank);
  REQUIRE(lm.size() == 3 * 40);
  for (double v : lm) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-12));

  Rng rng(21);
  std::vector<double> x(1200);
  for (double& v : x) v = rng.uniform(-0.5, 0.5);
  Stft s1 = stft(x, cfg);
  for (double& v : x) v *= 2.0;
  Stft s2 = stft(x, cfg);
  std::vector<double> a = log_mel(s1, bank);
  std::vector<double> b = log_mel(s2, bank);
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > std::log(1e-10) + 5.0)
      CHECK(b[i] - a[i] == doctest::Approx(std::log(4.0)).epsilon(1e-3));

  MelBank hi = make_mel_bank(160, cfg, 0.0, 8000.0);
  std::vector<double> c = log_mel(s1, hi);
  CHECK(c.size() == static_cast<size_t>(s1.num_frames) * 160);

  Stft bad;
  bad.num_frames = 1;
  bad.num_bins = 129;
  bad.data.assign(129, cplx(0, 0));
  CHECK_THROWS_AS(log_mel(bad, bank), ArgumentError);
}

TEST_CASE("log_mel is monotone in per-bin power") {
  StftConfig cfg;
  MelBank bank = make_mel_bank(40, cfg, 0.0, 8000.0);
  Stft lo, hi;
  lo.num_frames = hi.num_frames = 1;
  lo.num_bins = hi.num_bins = 257;
  lo.data.assign(257, cplx(0.1, 0));
  hi.data.assign(257, cplx(0.1, 0));
  hi.data[64] = cplx(0.5, 0);
  std::vector<double> a = log_mel(lo, bank);
  std::vector<double> b = log_mel(hi, bank);
  for (int f = 0; f < 40; ++f) CHECK(b[f] >= a[f] - 1e-15);
}

TEST_CASE("log_energy computes per-channel windowed energies") {
  StftConfig cfg;
  std::vector<std::vector<double>> channels(8, std::vector<double>(880, 0.0));
  std::vector<double> le = log_energy(channels, cfg);
  REQUIRE(le.size() == static_cast<size_t>(cfg.num_frames(880)) * 8);
  for (double v : le) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-12));

  // A constant channel: energy = win_len * amplitude^2 in every frame.
  channels[3].assign(880, 0.25);
  le = log_energy(channels, cfg);
  const int frames = cfg.num_frames(880);
  for (int t = 0; t < frames; ++t)
    CHECK(le[t * 8 + 3] ==
          doctest::Approx(std::log(1e-10 + 400 * 0.0625)).epsilon(1e-12));

  // Swapping two channels swaps the matching columns.
  std::swap(channels[3], channels[5]);
  std::vector<double> swapped = log_energy(channels, cfg);
  for (int t = 0; t < frames; ++t) {
    CHECK(swapped[t * 8 + 5] == le[t * 8 + 3]);
    CHECK(swapped[t * 8 + 3] == le[t * 8 + 5]);
  }

  channels[0].resize(500);
  CHECK_THROWS_AS(log_energy(channels, cfg), ArgumentError);
}
