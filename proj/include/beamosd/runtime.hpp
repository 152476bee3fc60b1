#pragma once

#include <cstdint>

namespace beamosd {

// Worker-thread policy for the OpenMP kernels. Resolution order:
// --serial flag > BEAMOSD_THREADS env var > all hardware threads.
// All parallel loops write disjoint outputs, so results are bit-identical
// for any thread count; --serial exists to pin scheduling for timing runs.
void init_threads(bool serial);
int worker_threads();

// splitmix64, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic RNG with explicit algorithms so byte-for-byte
// reproducibility does not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace beamosd
