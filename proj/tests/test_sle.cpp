#include "slelab/sle.hpp"

#include <cmath>

#include "doctest.h"
#include "slelab/stats.hpp"

using namespace slelab;
using namespace slelab::sle;
using Cx = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("plain annulus driving accumulates quadratic variation kappa t") {
  const int N = 1000;
  const double kappa = 2.0, t = 0.5;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < N; ++i) {
    SleSpec spec;
    spec.kind = Kind::AnnulusPlain;
    spec.kappa = kappa;
    spec.p = 2.0;
    spec.dt = 1e-3;
    spec.t_horizon = 0.6;
    spec.seed = {21, std::uint64_t(i)};
    auto s = sample(spec, {});
    double qv = 0.0;
    std::size_t n = std::size_t(t / spec.dt);
    for (std::size_t k = 1; k <= n; ++k) {
      double d = s.driving.samples[k] - s.driving.samples[k - 1];
      qv += d * d;
    }
    sum += qv;
    sum2 += qv * qv;
  }
  double mean = sum / N;
  double sd = std::sqrt((sum2 / N - mean * mean) / N);
  CHECK(std::abs(mean - kappa * t) < 3.0 * sd + 1e-9);
}

TEST_CASE("marked annulus trace starts at the initial angle") {
  drift::DriftFunction lam = drift::DriftFunction::closed_form("k2");
  SleSpec spec;
  spec.kind = Kind::AnnulusMarked;
  spec.kappa = 2.0;
  spec.p = 1.0;
  spec.dt = 1e-4;
  spec.t_horizon = 0.5;
  spec.x0 = 0.8;
  spec.y0 = 0.0;
  spec.lambda = &lam;
  spec.seed = {22, 1};
  auto s = sample(spec, {0.0, 0.2});
  CHECK(std::abs(s.trace.points[0] - Cx(0.8, 0)) <
        10 * s.trace.tip_offset_eps);
  CHECK(!s.aborted.has_value());
}

TEST_CASE("rotation equivariance of the annulus sampler") {
  // shifting the start angle shifts driving and covering trace exactly
  drift::DriftFunction lam = drift::DriftFunction::closed_form("k2");
  double theta = 0.9;
  SleSpec a;
  a.kind = Kind::AnnulusMarked;
  a.kappa = 2.0;
  a.p = 1.0;
  a.dt = 1e-4;
  a.t_horizon = 0.4;
  a.x0 = 0.0;
  a.y0 = 0.0;
  a.lambda = &lam;
  a.seed = {23, 9};
  SleSpec b = a;
  b.x0 = theta;
  b.y0 = theta;
  auto sa = sample(a, {0.2, 0.4});
  auto sb = sample(b, {0.2, 0.4});
  for (std::size_t i = 0; i < sa.trace.points.size(); ++i)
    CHECK(std::abs(sb.trace.points[i] - sa.trace.points[i] - Cx(theta, 0)) <
          1e-6);
}

TEST_CASE("whole-plane sample: hull diameter bound at the start time") {
  SleSpec spec;
  spec.kind = Kind::WholePlane;
  spec.kappa = 2.0;
  spec.s = 0.0;
  spec.dt = 1e-3;
  spec.t_start = -8.0;
  spec.t_horizon = 0.5;
  spec.seed = {24, 2};
  auto s = sample(spec, {-6.0, -3.0, 0.0});
  for (std::size_t i = 0; i < s.trace.times.size(); ++i) {
    double absb = std::exp(-s.trace.points[i].imag());
    CHECK(absb <= 4.0 * std::exp(s.trace.times[i]) * 1.1);
  }
}

TEST_CASE("radial skewed driving has linear mean drift") {
  const int N = 400;
  double s_rate = 1.5, t = 1.0;
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    SleSpec spec;
    spec.kind = Kind::Radial;
    spec.kappa = 2.0;
    spec.dt = 1e-3;
    spec.t_horizon = 1.0;
    spec.s = s_rate;
    spec.seed = {25, std::uint64_t(i)};
    auto smp = sample(spec, {});
    acc += smp.driving.samples.back() - smp.driving.samples.front();
  }
  double mean = acc / N;
  double sd = std::sqrt(2.0 * t / N);  // variance kappa t / N
  CHECK(std::abs(mean - s_rate * t) < 3.5 * sd);
}

TEST_CASE("simpleness proxy: the trace polyline avoids self-crossings") {
  drift::DriftFunction lam = drift::DriftFunction::closed_form("k2");
  int ok = 0, total = 12;
  for (int i = 0; i < total; ++i) {
    SleSpec spec;
    spec.kind = Kind::AnnulusMarked;
    spec.kappa = 2.0;
    spec.p = 1.0;
    spec.dt = 1e-4;
    spec.t_horizon = 0.8;
    spec.lambda = &lam;
    spec.seed = {26, std::uint64_t(i)};
    spec.solver.rel_tol = 1e-7;
    spec.solver.abs_tol = 1e-10;
    std::vector<double> times;
    for (int k = 1; k <= 24; ++k) times.push_back(0.8 * k / 24);
    auto s = sample(spec, times);
    // min distance between non-adjacent covering segments' endpoints
    double dmin = 1e9;
    for (std::size_t aco = 0; aco + 2 < s.trace.points.size(); ++aco)
      for (std::size_t bco = aco + 2; bco < s.trace.points.size(); ++bco)
        dmin = std::min(dmin,
                        std::abs(s.trace.points[aco] - s.trace.points[bco]));
    if (dmin > s.trace.tip_offset_eps) ++ok;
  }
  CHECK(ok >= int(0.9 * total));
}

TEST_CASE("marked-track q agrees with the flow map at the marked point") {
  drift::DriftFunction lam = drift::DriftFunction::closed_form("k2");
  SleSpec spec;
  spec.kind = Kind::AnnulusMarked;
  spec.kappa = 2.0;
  spec.p = 1.0;
  spec.dt = 1e-4;
  spec.t_horizon = 0.5;
  spec.y0 = 1.3;
  spec.lambda = &lam;
  spec.seed = {27, 3};
  auto s = sample(spec, {});
  auto flow = flow_of(s);
  // q(t) = Re g~(t, y0 + i p)
  double t = 0.5;
  auto g = flow.evolve(Cx(1.3, 1.0), t);
  REQUIRE(g.status == loewner::EvolveStatus::Ok);
  std::size_t idx = std::size_t(t / spec.dt);
  CHECK(std::abs(g.value.real() - s.marked_track[idx]) < 2e-3);
  CHECK(std::abs(g.value.imag() - (spec.p - t)) < 1e-7);
}

TEST_CASE("endpoint: stopping at half capacity cannot reach the circle") {
  SleSpec spec;
  spec.kind = Kind::AnnulusPlain;
  spec.kappa = 2.0;
  spec.p = 1.0;
  spec.dt = 1e-4;
  spec.t_horizon = 0.5;  // delta_stop = p/2
  spec.seed = {28, 4};
  auto s = sample(spec, {0.5});
  CHECK_THROWS_AS(endpoint(s, EndpointTarget::InnerCircle),
                  NotConvergedError);
}

TEST_CASE("samples are bit-identical under the same seed") {
  SleSpec spec;
  spec.kind = Kind::AnnulusPlain;
  spec.kappa = 2.0;
  spec.p = 1.0;
  spec.dt = 1e-3;
  spec.t_horizon = 0.5;
  spec.seed = {29, 11};
  auto a = sample(spec, {0.25});
  auto b = sample(spec, {0.25});
  CHECK(a.driving.samples == b.driving.samples);
  CHECK(a.trace.points[0] == b.trace.points[0]);
}
