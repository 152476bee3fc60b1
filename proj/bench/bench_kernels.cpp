// Timing comparison between the OpenMP kernels and their serial reference
// implementations. Run with BEAMOSD_THREADS=N or --serial to pin threads.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "beamosd/beamformer.hpp"
#include "beamosd/common.hpp"
#include "beamosd/dsp.hpp"
#include "beamosd/kernels.hpp"
#include "beamosd/runtime.hpp"
#include "beamosd/spatial.hpp"

using namespace beamosd;

namespace {

using clk = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int reps) {
  fn();  // warm up
  const auto t0 = clk::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = clk::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_gemm(int m, int n, int k, int reps) {
  Rng rng(mix_seed(1, static_cast<std::uint64_t>(m * 131 + n)));
  std::vector<float> a(static_cast<size_t>(m) * k);
  std::vector<float> b(static_cast<size_t>(k) * n);
  std::vector<float> c(static_cast<size_t>(m) * n);
  std::vector<float> c_ref(c.size());
  for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));

  const double t_par = time_ms(
      [&] { gemm(false, false, m, n, k, a.data(), b.data(), c.data(), false); },
      reps);
  const double t_ref = time_ms(
      [&] {
        gemm_ref(false, false, m, n, k, a.data(), b.data(), c_ref.data(), false);
      },
      reps);
  const bool same = std::memcmp(c.data(), c_ref.data(),
                                c.size() * sizeof(float)) == 0;
  std::printf("gemm   %4dx%4dx%4d  %10.3f ms  %10.3f ms  %6.2fx  %s\n", m, n, k,
              t_par, t_ref, t_ref / t_par, same ? "bit-identical" : "MISMATCH");
}

void bench_srp(int reps) {
  const ArrayGeometry geom;
  const FrequencyGrid grid{16000.0, 512};
  const BeamformerBank bank =
      design_bank(geom, grid_look_angles(AngleGrid(120, 3.0)), grid, 300.0, 5000.0, 1e-9);
  Rng rng(mix_seed(2, 7));
  cvec frame(static_cast<size_t>(grid.num_bins()) * geom.num_mics);
  for (auto& v : frame) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));

  std::vector<double> p, p_ref;
  const double t_par = time_ms([&] { p = srp_frame(frame, bank, true); }, reps);
  const double t_ref =
      time_ms([&] { p_ref = srp_frame_ref(frame, bank, true); }, reps);
  const bool same = p == p_ref;
  std::printf("srp    120 angles       %10.3f ms  %10.3f ms  %6.2fx  %s\n",
              t_par, t_ref, t_ref / t_par, same ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  bool serial = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--serial") serial = true;
  init_threads(serial);

  std::printf("threads: %d\n", worker_threads());
  std::printf("%-22s  %12s  %12s  %7s\n", "kernel", "parallel", "reference",
              "speedup");
  bench_gemm(64, 64, 64, 200);
  bench_gemm(256, 256, 256, 20);
  bench_gemm(512, 512, 512, 5);
  bench_srp(50);
  return 0;
}
