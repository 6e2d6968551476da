#include "slelab/experiments.hpp"

#include <cmath>

#include "doctest.h"

using namespace slelab;
using namespace slelab::experiments;

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
}

TEST_CASE("ks two-sample basics") {
  std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  auto rep = stats::ks_two_sample(a, a);
  CHECK(rep.statistic == 0.0);
  CHECK(rep.p_value == 1.0);
  CHECK_THROWS_AS(stats::ks_two_sample({}, a), stats::EmptyInputError);
  // analytic separation: U(0,1) vs U(0.5,1.5)
  stochastic::CounterRng rng({1, 1});
  std::vector<double> u1, u2;
  for (int i = 0; i < 1000; ++i) {
    u1.push_back(rng.uniform(2 * i));
    u2.push_back(0.5 + rng.uniform(2 * i + 1));
  }
  auto sep = stats::ks_two_sample(u1, u2);
  CHECK(sep.p_value < 1e-6);
}

TEST_CASE("chi-square basics") {
  std::vector<double> c{10, 12, 9, 11};
  auto rep = stats::chi2_gof(c, c);
  CHECK(rep.statistic == 0.0);
  CHECK(rep.p_value == 1.0);
  // gammq sanity: Q(1/2, x) = erfc(sqrt(x))
  for (double x : {0.1, 1.0, 3.0})
    CHECK(stats::gammq(0.5, x) ==
          doctest::Approx(std::erfc(std::sqrt(x))).epsilon(1e-10));
}

TEST_CASE("endpoint bin masses normalize exactly and flatten for large p") {
  auto masses = endpoint_bin_masses(1.0, 16);
  double sum = 0.0;
  for (double m : masses) sum += m;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // large p: nearly uniform, within the estimation-lemma tail bound
  // |mass - 1/16| <= p * 2 * 5.5 e^{-p} / (2 pi)
  auto flat = endpoint_bin_masses(6.0, 16);
  double tail = 6.0 * 2.0 * 5.5 * std::exp(-6.0) / kTwoPi;
  for (double m : flat) CHECK(std::abs(m - 1.0 / 16) < tail);
}

TEST_CASE("martingale unity at small N") {
  ExperimentConfig cfg;
  cfg.kappa = 2.0;
  cfg.p = 1.0;
  cfg.n_samples = 120;
  cfg.seed = {31, 0};
  auto rep = martingale_unity_experiment(cfg);
  CHECK(std::abs(rep.t0_average - 1.0) < 1e-12);
  CHECK(std::abs(rep.mean - 1.0) < 3.5 * rep.stderr_);
  CHECK(std::abs(rep.drift_mean) < 3.5 * rep.drift_stderr);
}

TEST_CASE("endpoint experiment at small N does not reject") {
  ExperimentConfig cfg;
  cfg.kappa = 2.0;
  cfg.p = 1.0;
  cfg.n_samples = 150;
  cfg.seed = {32, 0};
  cfg.delta_stop = 0.01;
  auto rep = endpoint_decomposition_experiment(cfg);
  CHECK(rep.n_used >= 140);
  CHECK(rep.chi2.p_value > 0.005);
}

TEST_CASE("experiment reports rerun bit-identically under one seed") {
  ExperimentConfig cfg;
  cfg.kappa = 2.0;
  cfg.p = 1.0;
  cfg.n_samples = 30;
  cfg.seed = {33, 0};
  auto a = martingale_unity_experiment(cfg);
  auto b = martingale_unity_experiment(cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("insufficient samples raise") {
  ExperimentConfig cfg;
  cfg.n_samples = 0;
  CHECK_THROWS_AS(endpoint_decomposition_experiment(cfg),
                  InsufficientSamplesError);
}
