#include "pdrs/datagen.hpp"

#include <cmath>
#include <numeric>

namespace pdrs {

namespace {

constexpr std::uint64_t kMixConstant = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t z) {
  z += kMixConstant;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t stream)
    : gen_(splitmix64(seed ^ splitmix64(stream + 1))) {}

double SubstreamRng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double SubstreamRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return radius * std::cos(kTwoPi * u2);
}

std::uint64_t SubstreamRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("SubstreamRng::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = gen_();
    if (r >= threshold) return r % bound;
  }
}

namespace {

enum Stream : std::uint64_t { kMatrix = 0, kPlanted = 1, kNoise = 2, kSampling = 3 };

Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, SubstreamRng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

/* First r entries of a partial Fisher-Yates shuffle of 0..n-1, sorted. */
std::vector<Eigen::Index> sample_positions(Eigen::Index n, int r, SubstreamRng& rng) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (int k = 0; k < r; ++k) {
    const auto j = k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(idx[k], idx[j]);
  }
  std::vector<Eigen::Index> out(idx.begin(), idx.begin() + r);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SparseLsData gen_sparse_ls(int m, int n, std::uint64_t seed, double noise_level) {
  if (m < 10) throw std::invalid_argument("gen_sparse_ls: m >= 10 required (so ceil(m/10) >= 1)");
  if (n <= m) throw std::invalid_argument("gen_sparse_ls: n must exceed m");
  const int r = (m + 9) / 10;  // ceil(m/10)

  SubstreamRng rng_a(seed, kMatrix), rng_x(seed, kPlanted), rng_e(seed, kNoise);
  auto a = std::make_shared<Mat>(gaussian_matrix(m, n, rng_a));

  Vec x_true = Vec::Zero(n);
  for (const Eigen::Index pos : sample_positions(n, r, rng_x)) x_true(pos) = rng_x.gaussian();

  Vec noise(m);
  for (Eigen::Index i = 0; i < m; ++i) noise(i) = rng_e.gaussian();

  auto b = std::make_shared<Vec>(*a * x_true + noise_level * noise);
  const LambdaMaxResult lam = lambda_max(*a);

  SparseLsData out;
  out.instance = {a, b, SparsityBox{r, 1e6}, lam.value, lam.converged, seed, noise_level};
  out.x_true = std::move(x_true);
  out.noise = std::move(noise);
  return out;
}

FeasibilityData gen_feasibility(int m, int n, std::uint64_t seed) {
  if (m < 5) throw std::invalid_argument("gen_feasibility: m >= 5 required (so ceil(m/5) >= 1)");
  if (n <= m) throw std::invalid_argument("gen_feasibility: n must exceed m");
  const int r = (m + 4) / 5;  // ceil(m/5)
  const SparsityBox box{r, 1e6};

  SubstreamRng rng_a(seed, kMatrix), rng_x(seed, kPlanted);
  Mat a = gaussian_matrix(m, n, rng_a);

  // Clamp nonzero magnitudes into [1e-6, bound] preserving sign, so the
  // planted point stays r-sparse and inside the box.
  Vec x_true = Vec::Zero(n);
  for (const Eigen::Index pos : sample_positions(n, r, rng_x)) {
    const double z = rng_x.gaussian();
    const double mag = std::min(std::max(std::abs(z), 1e-6), box.bound);
    x_true(pos) = std::copysign(mag, z == 0.0 ? 1.0 : z);
  }

  Vec b = a * x_true;

  FeasibilityData out;
  out.instance = {std::make_shared<AffineSetHandle>(std::move(a), std::move(b)), box, seed};
  out.x_true = std::move(x_true);
  return out;
}

CompletionInstance gen_completion(int n, int r, double p, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("gen_completion: n must be positive");
  if (r <= 0 || r > n) throw std::invalid_argument("gen_completion: rank out of range");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("gen_completion: p must lie in (0, 1]");
  const auto total = static_cast<std::int64_t>(n) * n;
  const auto count = static_cast<std::int64_t>(std::llround(p * static_cast<double>(total)));
  if (count < 1) throw std::invalid_argument("gen_completion: round(p*n^2) must be at least 1");

  SubstreamRng rng_f(seed, kMatrix), rng_o(seed, kSampling);
  const Mat left = gaussian_matrix(n, r, rng_f);
  const Mat right = gaussian_matrix(n, r, rng_f);
  auto full = std::make_shared<Mat>(left * right.transpose());

  std::vector<std::int64_t> flat(total);
  std::iota(flat.begin(), flat.end(), std::int64_t{0});
  for (std::int64_t k = 0; k < count; ++k) {
    const auto j = k + static_cast<std::int64_t>(rng_o.below(static_cast<std::uint64_t>(total - k)));
    std::swap(flat[k], flat[j]);
  }
  flat.resize(count);
  std::sort(flat.begin(), flat.end());

  CompletionInstance inst;
  inst.rows = n;
  inst.cols = n;
  inst.rank = r;
  inst.sampling_ratio = p;
  inst.seed = seed;
  inst.observed.rows = n;
  inst.observed.cols = n;
  inst.observed.flat = std::move(flat);
  inst.observed.values.reserve(count);
  for (const std::int64_t f : inst.observed.flat)
    inst.observed.values.push_back((*full)(f / n, f % n));
  inst.ground_truth = std::move(full);
  inst.validate();
  return inst;
}

}  // namespace pdrs
