/* Seeded generators for the three synthetic instance recipes. Each object of
 * an instance (measurement matrix, planted solution, noise, sampling set)
 * draws from its own substream of the given seed, so adding fields to a
 * generator never perturbs the ones already there.
 */
#pragma once

#include "pdrs/problems.hpp"

#include <cstdint>
#include <random>

namespace pdrs {

struct Seed {
  std::uint64_t value = 0;
};

/* Deterministic substream RNG: the (seed, stream) pair is mixed through
 * SplitMix64 into an mt19937_64 state. Gaussians come from Box-Muller on
 * 53-bit uniforms, so the sequence is a fixed function of the bit stream. */
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return gen_(); }
  double uniform();                           // [0, 1)
  double gaussian();                          // standard normal
  std::uint64_t below(std::uint64_t bound);   // unbiased in [0, bound)

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SparseLsData {
  SparseLsInstance instance;
  Vec x_true;
  Vec noise;  // epsilon with b = A x_true + noise_level * epsilon
};

/* Sparse least squares: A is m x n iid standard normal, x_true has
 * ceil(m/10) standard-normal nonzeros at uniformly random positions,
 * b = A x_true + noise_level * epsilon. D caps the support at the same
 * sparsity with bound 1e6. Requires m >= 10 and n > m. */
SparseLsData gen_sparse_ls(int m, int n, std::uint64_t seed, double noise_level = 0.01);

struct FeasibilityData {
  FeasibilityInstance instance;
  Vec x_true;  // contained in C and D, so the optimal value is zero
};

/* Sparse feasibility: A iid standard normal, x_true has ceil(m/5) nonzeros
 * whose magnitudes are clamped into [1e-6, 1e6] preserving sign, b = A x_true
 * exactly. Requires m >= 5 and n > m. */
FeasibilityData gen_feasibility(int m, int n, std::uint64_t seed);

/* Low-rank completion: M = M_L M_R^T with n x r iid standard normal factors;
 * Omega is a uniform subset of the n^2 entries of size round(p n^2), sampled
 * without replacement by a seeded partial shuffle. The dense ground truth is
 * retained on the instance. */
CompletionInstance gen_completion(int n, int r, double p, std::uint64_t seed);

}  // namespace pdrs
