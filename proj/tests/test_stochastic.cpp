#include "slelab/stochastic.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "slelab/stats.hpp"

using namespace slelab;
using namespace slelab::stochastic;

TEST_CASE("brownian paths start at zero and are deterministic per seed") {
  Grid g{0.0, 1e-3, 1000};
  auto a = brownian({11, 3}, g);
  auto b = brownian({11, 3}, g);
  auto c = brownian({11, 4}, g);
  CHECK(a.values[0] == 0.0);
  CHECK(a.values == b.values);  // bit-identical
  CHECK(a.values != c.values);
}

TEST_CASE("variance of B(1) matches normal theory at N=1e5") {
  Grid g{0.0, 0.05, 20};
  const int N = 100000;
  double s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    auto p = brownian({123, std::uint64_t(i)}, g);
    s2 += p.values.back() * p.values.back();
  }
  s2 /= N;
  CHECK(std::abs(s2 - 1.0) < 0.02);  // 3 sigma for N = 1e5 is ~0.013
}

TEST_CASE("increments over disjoint intervals are uncorrelated") {
  Grid g{0.0, 0.25, 4};
  const int N = 100000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < N; ++i) {
    auto p = brownian({99, std::uint64_t(i)}, g);
    double x = p.values[2] - p.values[0];
    double y = p.values[4] - p.values[2];
    sx += x; sy += y; sxy += x * y; sxx += x * x; syy += y * y;
  }
  double cov = sxy / N - (sx / N) * (sy / N);
  double rho = cov / std::sqrt((sxx / N - sx / N * sx / N) *
                               (syy / N - sy / N * sy / N));
  CHECK(std::abs(rho) < 0.01);
}

TEST_CASE("pre-(T;kappa)-BM: uniform circle position and wing variance") {
  Grid g{-2.0, 0.01, 400};  // spans [-2, 2]
  const int N = 10000;
  std::vector<double> counts(16, 0.0);
  double var_acc = 0.0;
  const double kappa = 3.0;
  for (int i = 0; i < N; ++i) {
    auto p = pre_t_kappa_bm({7, std::uint64_t(i)}, kappa, g);
    // value at t0 = -1 is grid index 100
    double ang = std::remainder(p.values[100], 2 * M_PI);
    int bin = int((ang + M_PI) / (2 * M_PI) * 16);
    counts[std::min(bin, 15)] += 1.0;
    // wing increment over [1, 2]: indices 300 -> 400
    double inc = p.values[400] - p.values[300];
    var_acc += inc * inc;
  }
  std::vector<double> expected(16, N / 16.0);
  auto rep = stats::chi2_gof(counts, expected);
  CHECK(rep.p_value > 0.01);
  double var = var_acc / N;  // should be kappa * 1.0
  CHECK(std::abs(var - kappa) < 3.0 * kappa * std::sqrt(2.0 / N));
  // B(0) = x: both wings glued at the uniform start
  auto p0 = pre_t_kappa_bm({7, 0}, kappa, g);
  CHECK(p0.values[200] >= 0.0);
  CHECK(p0.values[200] < 2 * M_PI);
}

TEST_CASE("integrate_sde with zero drift reproduces sqrt(kappa) B pathwise") {
  Grid g{0.0, 1e-3, 500};
  double kappa = 2.0;
  auto sde = integrate_sde({5, 12}, [](double, double) { return 0.0; }, kappa,
                           0.7, g);
  auto bm = brownian({5, 12}, g);
  for (std::size_t i = 0; i <= g.n_steps; ++i) {
    CHECK(sde.path.values[i] ==
          doctest::Approx(0.7 + std::sqrt(kappa) * bm.values[i])
              .epsilon(1e-12));
  }
  CHECK(!sde.abort.has_value());
}

TEST_CASE("tanh drift respects its declared bound") {
  Grid g{0.0, 1e-3, 2000};
  double tau = -1.0;
  auto drift = [tau](double, double x) { return tau * std::tanh(0.5 * x); };
  auto sde = integrate_sde({8, 1}, drift, 4.0, 0.0, g, std::abs(tau));
  CHECK(!sde.abort.has_value());
}

TEST_CASE("drift blowup is recorded, not silently dropped") {
  Grid g{0.0, 1e-3, 100};
  auto drift = [](double t, double) { return t > 0.05 ? 1e9 : 0.0; };
  auto sde = integrate_sde({8, 2}, drift, 1.0, 0.0, g);
  REQUIRE(sde.abort.has_value());
  CHECK(sde.abort->time > 0.05);
  CHECK(sde.path.values.size() == g.n_steps + 1);
}

TEST_CASE("tail bound of the drifted diffusion (Lemma-inq)") {
  // P[exists t: |X| > c t + b] <= 2 e^{(2c/kappa)(|x0| - b)}
  const double kappa = 4.0, tau = -1.0, c = 1.0, b = 5.0;
  const int N = 10000;
  Grid g{0.0, 1e-3, 30000};
  auto drift = [tau](double, double x) { return tau * std::tanh(0.5 * x); };
  int exceed = 0;
  for (int i = 0; i < N; ++i) {
    auto sde = integrate_sde({321, std::uint64_t(i)}, drift, kappa, 0.0, g);
    for (std::size_t k = 0; k <= g.n_steps; ++k) {
      if (std::abs(sde.path.values[k]) > c * g.time(k) + b) {
        ++exceed;
        break;
      }
    }
  }
  double bound = 2.0 * std::exp((2.0 * c / kappa) * (0.0 - b));
  double frac = double(exceed) / N;
  double sigma3 = 3.0 * std::sqrt(bound * (1.0 - bound) / N);
  CHECK(frac <= bound + sigma3);
}

TEST_CASE("recurrence: the drifted diffusion keeps returning to zero") {
  const double kappa = 4.0, tau = -1.0;
  const int N = 1000;
  Grid g{0.0, 1e-3, 50000};
  auto drift = [tau](double, double x) { return tau * std::tanh(0.5 * x); };
  int returned = 0;
  for (int i = 0; i < N; ++i) {
    auto sde = integrate_sde({77, std::uint64_t(i)}, drift, kappa, 0.0, g);
    bool left = false;
    for (std::size_t k = 1000; k <= g.n_steps; ++k) {
      double v = sde.path.values[k];
      if (!left && std::abs(v) > 0.5) left = true;
      if (left && ((sde.path.values[k - 1] <= 0) != (v <= 0))) {
        ++returned;
        break;
      }
    }
  }
  CHECK(double(returned) / N >= 0.99);
}

TEST_CASE("Euler weak-convergence regression guard") {
  // E[X(1)] at dt vs dt/2, common random numbers; C was measured once at
  // ~0.004 for this configuration and is asserted with margin.
  const double kappa = 1.0, tau = -1.0, x0 = 1.0;
  const int N = 20000;
  const double dt = 4e-3;
  const int n = int(1.0 / dt);
  double mc = 0.0, mf = 0.0;
  for (int i = 0; i < N; ++i) {
    CounterRng rng({2024, std::uint64_t(i)});
    double xc = x0, xf = x0;
    double sf = std::sqrt(kappa * dt / 2);
    for (int k = 0; k < n; ++k) {
      double n1 = rng.normal(2 * k), n2 = rng.normal(2 * k + 1);
      xf += tau * std::tanh(0.5 * xf) * dt / 2 + sf * n1;
      xf += tau * std::tanh(0.5 * xf) * dt / 2 + sf * n2;
      xc += tau * std::tanh(0.5 * xc) * dt + sf * (n1 + n2);
    }
    mc += xc;
    mf += xf;
  }
  double diff = std::abs(mc - mf) / N;
  CHECK(diff < 0.05 * dt);  // frozen regression constant C = 0.05
}

TEST_CASE("marked SDE co-integrates the marked-point track") {
  Grid g{0.0, 1e-4, 5000};
  double p = 1.0, kappa = 2.0;
  auto zero = [](double, double) { return 0.0; };
  auto r = integrate_marked_sde({50, 9}, zero, p, kappa, 0.0, 2.0, g);
  CHECK(!r.abort.has_value());
  // q moves toward xi monotonically for this geometry... at least it moved
  CHECK(r.q.values.back() != r.q.values.front());
  // determinism
  auto r2 = integrate_marked_sde({50, 9}, zero, p, kappa, 0.0, 2.0, g);
  CHECK(r.q.values == r2.q.values);
  CHECK(r.xi.values == r2.xi.values);
}
