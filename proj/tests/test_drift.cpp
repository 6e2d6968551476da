#include "slelab/drift.hpp"

#include <cmath>

#include "doctest.h"
#include "slelab/specfun.hpp"

using namespace slelab;
using namespace slelab::drift;
namespace sf = slelab::specfun;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("tau-sigma relation") {
  FkParams p = FkParams::reversibility(2.0);
  CHECK(p.sigma == doctest::Approx(1.0));
  CHECK(p.tau() == doctest::Approx(-1.0));  // kappa/2 - 2
  FkParams q = FkParams::reversibility(4.0);
  CHECK(q.sigma == 0.0);
  CHECK(q.tau() == doctest::Approx(0.0));
  FkParams r = FkParams::decomposition(2.0);
  CHECK(r.sigma == doctest::Approx(1.0));  // 1/2 + 1/kappa at kappa=2
  // the nonpositive root of tau^2/(2k) = tau/4 + sigma/2
  FkParams s = FkParams::reversibility(3.0);
  double tau = s.tau();
  CHECK(tau <= 0.0);
  CHECK(tau * tau / (2 * s.kappa) ==
        doctest::Approx(tau / 4.0 + s.sigma / 2.0));
}

TEST_CASE("psi_q at sigma=0 is exactly one") {
  FkParams p = FkParams::reversibility(4.0);
  p.n_paths = 500;
  auto est = psi_q_mc(p, {3, 0}, 2.0, 0.7);
  CHECK(est.value == 1.0);
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("psi_q >= 1 - bias at 3 sigma on a sample grid") {
  FkParams p = FkParams::reversibility(2.0);
  p.n_paths = 20000;
  p.dt = 5e-3;
  for (double t : {1.0, 3.0, 7.0}) {
    for (double x : {0.0, 1.5}) {
      auto est = psi_q_mc(p, {4, 0}, t, x);
      CHECK(est.value - 3.0 * est.stderr_ >= 1.0 - est.bias_bound);
      CHECK(est.value >= 1.0);  // pathwise property of the positive integrand
    }
  }
}

TEST_CASE("psi_q tends to 1 at large rescaled time") {
  FkParams p = FkParams::reversibility(2.0);
  p.n_paths = 20000;
  p.dt = 5e-3;
  for (double x : {0.0, kPi / 2, kPi}) {
    auto est = psi_q_mc(p, {5, 0}, 12.0, x);
    CHECK(std::abs(est.value - 1.0) < std::max(3.0 * est.stderr_, 1e-3));
  }
}

TEST_CASE("explicit T_max below the tail requirement throws") {
  FkParams p = FkParams::reversibility(2.0);
  p.n_paths = 50000;
  p.dt = 5e-3;
  p.T_max = 1.0;  // hopelessly short at t = 1
  CHECK_THROWS_AS(psi_q_mc(p, {6, 0}, 1.0, 0.0), BiasExceedsToleranceError);
}

TEST_CASE("kappa=4 pipeline reproduces the closed form deterministically") {
  FkParams p = FkParams::reversibility(4.0);
  p.n_paths = 100;
  for (double t : {0.8, 1.5, 3.0}) {
    for (double x : {0.3, 2.0}) {
      auto lv = lambda_s(p, {7, 0}, t, x);
      CHECK(lv.value == doctest::Approx(lambda_closed_k4(t, x)).epsilon(1e-6));
      CHECK(lv.stderr_ == 0.0);
    }
  }
}

TEST_CASE("kappa=2 pipeline matches the closed form at one point") {
  FkParams p = FkParams::reversibility(2.0);
  p.n_paths = 20000;
  p.dt = 8e-3;
  auto lv = lambda_s(p, {2026, 0}, 1.5, 0.8);
  double cf = lambda_closed_k2(1.5, 0.8);
  CHECK(std::abs(lv.value - cf) < 3.0 * lv.stderr_ + 1e-6);
  CHECK(lv.bias_rel < 0.05);
}

TEST_CASE("closed-form drifts are odd (self-dual at s = 0)") {
  for (double t : {0.8, 2.0}) {
    for (double x : {0.4, 1.9}) {
      CHECK(lambda_closed_k2(t, x) ==
            doctest::Approx(-lambda_closed_k2(t, -x)).epsilon(1e-12));
      CHECK(lambda_closed_k3(t, x) ==
            doctest::Approx(-lambda_closed_k3(t, -x)).epsilon(1e-12));
      CHECK(lambda_closed_k4(t, x) ==
            doctest::Approx(-lambda_closed_k4(t, -x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dual symmetry: dual of Lambda<s> equals Lambda<-s> statistically") {
  FkParams plus = FkParams::reversibility(2.0, 0.7);
  plus.n_paths = 8000;
  plus.dt = 8e-3;
  FkParams minus = plus;
  minus.s = -0.7;
  double t = 1.5, x = 0.9;
  auto a = lambda_s(plus, {8, 0}, t, -x);   // -Lambda<s>(t,-x)
  auto b = lambda_s(minus, {8, 1}, t, x);   // Lambda<-s>(t,x)
  CHECK(std::abs(-a.value - b.value) <
        3.0 * std::hypot(a.stderr_, b.stderr_) + 2e-4);
}

TEST_CASE("catalog closed-form residuals are tiny") {
  std::vector<double> ts{1.0, 1.7, 2.6};
  for (const auto& e : catalog()) {
    auto rep = pde_residual(e, ts, 24);
    INFO(e.id);
    CHECK(rep.n_points > 20);
    CHECK(rep.max_residual < 1e-7);
  }
}

TEST_CASE("kappa=2 Gamma tends to 1 and stays positive") {
  const auto& e = catalog_entry("k2-gamma");
  for (double x = 0.1; x < 2 * kPi; x += 0.5) {
    CHECK(std::abs(catalog_eval(e, 20.0, x).real() - 1.0) < 1e-6);
    CHECK(catalog_eval(e, 1.0, x).real() > 0.0);
    CHECK(catalog_eval(e, 0.3, x).real() > 0.0);
  }
}

TEST_CASE("kappa=16/3 entries are -G/3") {
  const auto& f = catalog_entry("k16o3-F");
  const auto& g = catalog_entry("k0-G");
  auto a = catalog_eval(f, 1.3, 2.2);
  auto b = catalog_eval(g, 1.3, 2.2);
  CHECK(std::abs(a + b / 3.0) < 1e-12);
}

TEST_CASE("kappa=4 sine heat solution vanishes at its node") {
  const auto& e = catalog_entry("k4-heat-sin");
  CHECK(std::abs(catalog_eval(e, 1.0, e.param_c)) < 1e-15);
}

TEST_CASE("transform consistency ties Gamma-Psi to HA-Theta at kappa=2") {
  // Lambda = kappa Psi'/Psi - H_I with Psi = Gamma Theta_I^{2/kappa} must
  // equal kappa Gamma'/Gamma exactly (H_I = 2 Theta_I'/Theta_I).
  double t = 1.4, x = 0.9, kappa = 2.0;
  auto jet = catalog_jet(catalog_entry("k2-gamma"), t, x);
  auto ti0 = sf::eval_theta(t, {x, 0}, sf::Theta::ThetaI, 0).value;
  auto ti1 = sf::eval_theta(t, {x, 0}, sf::Theta::ThetaI, 1).value;
  double hi[1];
  sf::ha_i_real(t, x, 0, hi);
  // d/dx log(Gamma Theta_I) * kappa - H_I   (kappa = 2 so 2/kappa = 1)
  auto lam_psi =
      kappa * (jet.fx / jet.f + ti1 / ti0) - hi[0];
  auto lam_gamma = kappa * jet.fx / jet.f;
  CHECK(std::abs(lam_psi - lam_gamma) < 1e-9);
}

TEST_CASE("lambda_s determinism under a fixed seed") {
  FkParams p = FkParams::reversibility(2.0);
  p.n_paths = 2000;
  p.dt = 1e-2;
  auto a = lambda_s(p, {99, 5}, 1.2, 0.4);
  auto b = lambda_s(p, {99, 5}, 1.2, 0.4);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  auto c = lambda_s(p, {99, 6}, 1.2, 0.4);
  CHECK(a.value != c.value);
}

TEST_CASE("drift surface interpolation passes the probe check") {
  FkParams p = FkParams::reversibility(4.0);  // deterministic: exact surface
  p.n_paths = 100;
  auto d = DriftFunction::fk_surface(p, {10, 0}, 1.0, 0.2, 16, 64);
  // sigma = 0 surfaces carry no MC noise, so the probe ratio is pure
  // bilinear interpolation error over the declared floor
  double worst = d.probe_check({11, 0}, 8, 0.05);
  CHECK(worst < 1.0);
  auto v = d.eval(0.45, 1.3);
  CHECK(std::abs(v.first - lambda_closed_k4(0.45, 1.3)) < 0.02);
}
