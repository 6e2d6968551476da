#include "slelab/loewner.hpp"

#include <cmath>
#include <complex>

#include "doctest.h"
#include "slelab/stochastic.hpp"

using namespace slelab;
using namespace slelab::loewner;
using Cx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;

DrivingPath kappa2_sample(double t1, double dt) {
  stochastic::Grid g{0.0, dt, std::size_t(std::ceil(t1 / dt))};
  auto b = stochastic::brownian({42, 7}, g);
  DrivingPath d;
  d.t0 = 0.0;
  d.dt = dt;
  d.kappa = 2.0;
  d.samples.resize(b.values.size());
  for (std::size_t i = 0; i < b.values.size(); ++i)
    d.samples[i] = std::sqrt(2.0) * b.values[i];
  return d;
}
}  // namespace

TEST_CASE("radial flow fixes the origin for zero driving") {
  auto drv = DrivingPath::constant(0.0, 0.0, 1.0, 0.01);
  Flow flow(Variant::Radial, drv);
  auto r = flow.evolve(Cx(0, 0), 0.8);
  REQUIRE(r.status == EvolveStatus::Ok);
  CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("radial capacity: log g'(t,0) = t for three drivings") {
  SolverConfig cfg;
  cfg.rel_tol = 1e-11;
  auto check = [&](const DrivingPath& drv) {
    Flow flow(Variant::Radial, drv, cfg);
    for (double t : {0.3, 0.7, 1.0}) {
      auto wd = flow.evolve_with_deriv(Cx(0, 0), t);
      REQUIRE(wd.g.status == EvolveStatus::Ok);
      CHECK(std::abs(std::log(std::abs(wd.dg)) - t) < 1e-7);
    }
  };
  check(DrivingPath::constant(0.0, 0.0, 1.0, 0.01));
  check(DrivingPath::from_function([](double s) { return std::sin(s); }, 0.0,
                                   1.0, 1e-3));
  check(kappa2_sample(1.0, 1e-4));
}

TEST_CASE("annulus modulus bookkeeping on the inner circle") {
  SolverConfig cfg;
  double p = 2.0;
  auto check = [&](const DrivingPath& drv) {
    Flow flow(Variant::Annulus, drv, cfg, p);
    for (double theta : {0.0, kPi / 2, kPi}) {
      Cx z = std::exp(Cx(-p, theta));
      auto r = flow.evolve(z, 0.5);
      REQUIRE(r.status == EvolveStatus::Ok);
      CHECK(std::abs(-std::log(std::abs(r.value)) - (p - 0.5)) < 1e-7);
    }
  };
  check(DrivingPath::constant(0.0, 0.0, 1.0, 0.01));
  check(DrivingPath::from_function([](double s) { return std::sin(s); }, 0.0,
                                   1.0, 1e-3));
  check(kappa2_sample(1.0, 1e-4));
}

TEST_CASE("covering consistency e^{i g~} = g o e^i") {
  double p = 2.0;
  auto drv = DrivingPath::from_function([](double s) { return std::sin(s); },
                                        0.0, 1.0, 1e-3);
  Flow cov(Variant::CoveringAnnulus, drv, {}, p);
  Flow ann(Variant::Annulus, drv, {}, p);
  for (Cx zt : {Cx(0.5, 0.8), Cx(2.0, 1.2), Cx(-1.0, 1.7)}) {
    auto a = cov.evolve(zt, 0.7);
    auto b = ann.evolve(std::exp(Cx(0, 1) * zt), 0.7);
    REQUIRE(a.status == EvolveStatus::Ok);
    REQUIRE(b.status == EvolveStatus::Ok);
    CHECK(std::abs(std::exp(Cx(0, 1) * a.value) - b.value) < 1e-8);
  }
  // radial pair as well
  Flow covr(Variant::CoveringRadial, drv);
  Flow rad(Variant::Radial, drv);
  for (Cx zt : {Cx(0.9, 0.5), Cx(2.4, 1.0)}) {
    auto a = covr.evolve(zt, 0.8);
    auto b = rad.evolve(std::exp(Cx(0, 1) * zt), 0.8);
    CHECK(std::abs(std::exp(Cx(0, 1) * a.value) - b.value) < 1e-8);
  }
}

TEST_CASE("semigroup consistency for radial and annulus") {
  auto drv = DrivingPath::from_function([](double s) { return std::sin(s); },
                                        0.0, 1.0, 1e-3);
  double t1 = 0.4, t2 = 0.35;
  SolverConfig cfg;
  double tol5 = 5.0 * (cfg.rel_tol * 10 + cfg.abs_tol) + 5e-9;
  {
    Flow flow(Variant::Radial, drv, cfg);
    Cx z(0.45, 0.2);
    auto full = flow.evolve(z, t1 + t2);
    auto part = flow.evolve(z, t1);
    DrivingPath d2 = drv.shifted(t1);
    Flow flow2(Variant::Radial, d2, cfg);
    auto rest = flow2.evolve(part.value, t2);
    CHECK(std::abs(rest.value - full.value) < tol5);
  }
  {
    double p = 2.0;
    Flow flow(Variant::Annulus, drv, cfg, p);
    Cx z = std::exp(Cx(-1.0, 0.9));
    auto full = flow.evolve(z, t1 + t2);
    auto part = flow.evolve(z, t1);
    DrivingPath d2 = drv.shifted(t1);
    Flow flow2(Variant::Annulus, d2, cfg, p - t1);
    auto rest = flow2.evolve(part.value, t2);
    CHECK(std::abs(rest.value - full.value) < tol5);
  }
}

TEST_CASE("large-p annulus approaches the radial equation") {
  auto drv = DrivingPath::from_function([](double s) { return std::sin(s); },
                                        0.0, 1.0, 1e-3);
  Flow ann(Variant::Annulus, drv, {}, 30.0);
  Flow rad(Variant::Radial, drv);
  for (double r : {0.3, 0.6, 0.9}) {
    Cx z = std::exp(Cx(std::log(r), 1.1));
    for (double t : {0.5, 1.0}) {
      auto a = ann.evolve(z, t);
      auto b = rad.evolve(z, t);
      REQUIRE(a.status == EvolveStatus::Ok);
      CHECK(std::abs(a.value - b.value) < 1e-6);
    }
  }
}

TEST_CASE("points at the driving singularity are swallowed") {
  auto drv = DrivingPath::constant(0.0, 0.0, 1.0, 0.01);
  Flow flow(Variant::Radial, drv);
  auto r = flow.evolve(Cx(0.999999, 0.0000004), 0.5);
  CHECK(r.status == EvolveStatus::Swallowed);
  CHECK(r.swallow_time < 0.1);
}

TEST_CASE("whole-plane initialization error certificate") {
  double t_start = -6.0;
  auto drv = DrivingPath::constant(0.0, t_start, 1.0, 0.02);
  Cx z(0.3, 1.0);
  auto r = evolve_whole_plane(drv, t_start, z, 0.5);
  REQUIRE(r.status == EvolveStatus::Ok);
  CHECK(r.init_error_bound == doctest::Approx(4 * std::exp(t_start - 1.0)));
  // start exactly at Im z - ln 8: bound = 1/2
  double ts2 = z.imag() - std::log(8.0);
  auto drv2 = DrivingPath::constant(0.0, ts2, 1.0, 0.02);
  auto r2 = evolve_whole_plane(drv2, ts2, z, 0.5);
  CHECK(r2.init_error_bound == doctest::Approx(0.5));
  // too late a start throws
  auto drv3 = DrivingPath::constant(0.0, ts2 + 0.1, 1.0, 0.02);
  CHECK_THROWS_AS(evolve_whole_plane(drv3, ts2 + 0.1, z, 0.5),
                  StartTooLateError);
}

TEST_CASE("whole-plane two-start self-consistency") {
  auto f = [](double s) { return 0.4 * std::sin(2 * s); };
  Cx z(0.7, 2.5);
  double tA = -8.0, tB = -10.0;
  auto rA_ = evolve_whole_plane(DrivingPath::from_function(f, tA, 0.5, 1e-3),
                                tA, z, 0.5);
  auto rB_ = evolve_whole_plane(DrivingPath::from_function(f, tB, 0.5, 1e-3),
                                tB, z, 0.5);
  REQUIRE(rA_.status == EvolveStatus::Ok);
  REQUIRE(rB_.status == EvolveStatus::Ok);
  CHECK(std::abs(rA_.value - rB_.value) <
        rA_.init_error_bound + rB_.init_error_bound);
  CHECK(std::abs(rA_.value - rB_.value) < 2.2 * rA_.init_error_bound);
}

TEST_CASE("whole-plane trace with zero driving stays on the real axis") {
  double t_start = -7.0;
  auto drv = DrivingPath::constant(0.0, t_start, 0.5, 0.01);
  Flow flow(Variant::CoveringWholePlane, drv);
  auto tr = flow.extract_trace({-4.0, -2.0, 0.0, 0.4}, 1e-4);
  for (auto pt : tr.points) {
    // covering point maps to beta = e^{i pt}; real-axis trace means Re pt = 0
    // modulo 2pi (the conjugation-symmetric curve is radial), up to tip eps.
    CHECK(std::abs(std::remainder(pt.real(), 2 * kPi)) < 5e-3);
  }
  // hull diameter bound: |beta(t)| = e^{-Im beta~} <= 4 e^{t}
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    double absb = std::exp(-tr.points[i].imag());
    CHECK(absb <= 4.0 * std::exp(tr.times[i]) * 1.05);
  }
}

TEST_CASE("disc flow keeps the unit circle on the unit circle") {
  double t_start = -5.0;
  auto drv = DrivingPath::from_function([](double s) { return 0.3 * s; },
                                        t_start, -0.2, 1e-3);
  Flow flow(Variant::Disc, drv, {});
  for (double th : {0.4, 2.0}) {
    Cx z = std::exp(Cx(0, th));
    auto r = flow.evolve(z, -0.5);
    REQUIRE(r.status == EvolveStatus::Ok);
    CHECK(std::abs(std::abs(r.value) - 1.0) < 1e-9);
  }
}

TEST_CASE("disc start error certificate") {
  Cx z(0.2, 0.9);  // covering coordinates for the covering-disc variant
  double ts = -z.imag() - std::log(13.0);
  auto drv = DrivingPath::constant(0.0, ts, -0.1, 0.01);
  auto r = evolve_disc(drv, ts, z, -0.2);
  REQUIRE(r.status == EvolveStatus::Ok);
  CHECK(r.init_error_bound == doctest::Approx(10.0 / 13.0));
  auto drv2 = DrivingPath::constant(0.0, ts + 0.01, -0.1, 0.01);
  CHECK_THROWS_AS(evolve_disc(drv2, ts + 0.01, z, -0.2), StartTooLateError);
}

TEST_CASE("disc two-start self-consistency") {
  auto f = [](double s) { return 0.2 * std::cos(s); };
  Cx z(0.4, 1.2);
  double tA = -7.0, tB = -9.0;
  auto rA_ = evolve_disc(DrivingPath::from_function(f, tA, -0.2, 1e-3), tA, z,
                         -0.3);
  auto rB_ = evolve_disc(DrivingPath::from_function(f, tB, -0.2, 1e-3), tB, z,
                         -0.3);
  CHECK(std::abs(rA_.value - rB_.value) <
        rA_.init_error_bound + rB_.init_error_bound);
}

TEST_CASE("trace start point and conjugation symmetry") {
  double p = 2.0;
  auto drv = DrivingPath::constant(0.7, 0.0, 1.0, 0.01);
  Flow flow(Variant::CoveringAnnulus, drv, {}, p);
  double eps = 1e-4;
  Cx b0 = flow.trace_point(0.0, eps);
  CHECK(std::abs(b0 - Cx(0.7, 0)) < 10 * eps);  // beta(0) = xi(0)
  // the tip leaves the boundary at square-root speed: Im beta(t) ~ 2 sqrt(t)
  Cx bt = flow.trace_point(1e-6, eps);
  CHECK(bt.imag() == doctest::Approx(2e-3).epsilon(0.05));
  // constant driving: the covering trace stays on the vertical line Re = xi
  for (double t : {0.2, 0.5, 0.8}) {
    Cx bt = flow.trace_point(t, eps);
    CHECK(std::abs(bt.real() - 0.7) < 10 * eps);
    CHECK(bt.imag() > 0.0);
  }
}

TEST_CASE("trace refinement: halving dt shrinks consecutive gaps") {
  auto drv1 = kappa2_sample(0.5, 2e-4);
  auto drv2 = kappa2_sample(0.5, 1e-4);  // same seed, finer grid
  double p = 2.0;
  auto gap = [&](const DrivingPath& d, double tip) {
    Flow flow(Variant::CoveringAnnulus, d, {}, p);
    std::vector<double> times;
    for (int i = 1; i <= 20; ++i) times.push_back(0.02 * i);
    auto tr = flow.extract_trace(times, tip);
    double g = 0.0;
    for (std::size_t i = 1; i < tr.points.size(); ++i)
      g = std::max(g, std::abs(tr.points[i] - tr.points[i - 1]));
    return g;
  };
  double g1 = gap(drv1, 0.1 * std::sqrt(2e-4));
  double g2 = gap(drv2, 0.1 * std::sqrt(1e-4));
  // C dt^{0.4} scaling: the finer run may not halve, but must not grow
  CHECK(g2 < 1.6 * g1);
  CHECK(g1 < 1.0);
}

TEST_CASE("rescaled driving of the zero path is zero") {
  auto drv = DrivingPath::constant(0.0, 0.0, 1.0, 1e-3);
  auto hxi = rescaled_driving(2.0, drv, 1e-3);
  for (double v : hxi.samples) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("rescaled correspondence for p=2 and smooth driving") {
  auto drv = DrivingPath::from_function([](double s) { return std::sin(s); },
                                        0.0, 1.0, 2e-4);
  auto rep = rescaled_correspondence_check(2.0, drv, 20);
  CHECK(rep.map_points > 10);
  CHECK(rep.max_map_deviation < 1e-5);
  CHECK(rep.max_trace_deviation < 10 * rep.tip_eps);
}
