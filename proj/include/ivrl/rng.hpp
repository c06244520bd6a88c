#pragma once

#include <array>
#include <cstdint>

namespace ivrl {

// xoshiro256++ with splitmix64 seeding. Deterministic across platforms,
// cheap to fork into per-replication streams.
class Rng {
 public:
  Rng() : Rng(0x9e3779b97f4a7c15ULL) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform on (0,1), never returns an exact endpoint
  double uniform01();
  double uniform(double lo, double hi);
  // standard normal via inverse-CDF (AS241)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double lognormal(double mu, double sigma);
  // Bernoulli(p) as 0/1
  double bernoulli(double p) { return uniform01() < p ? 1.0 : 0.0; }
  double gamma(double shape);
  double beta(double a, double b);

 private:
  std::array<std::uint64_t, 4> s_;
};

// Independent stream for (master_seed, replication_index).
Rng seed_stream(std::uint64_t master_seed, std::uint64_t replication_index);

// Inverse standard normal CDF, Wichura's AS241 (double precision).
double normal_quantile(double p);

// Standard normal CDF.
double normal_cdf(double x);

// Survival function of chi-square with 1 degree of freedom.
double chi2_sf_1df(double x);

}  // namespace ivrl
