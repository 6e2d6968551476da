#include "slelab/sle.hpp"

#include <cmath>

#include "slelab/specfun.hpp"

namespace slelab::sle {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;
using loewner::DrivingPath;
using loewner::Flow;
using loewner::Variant;
using stochastic::CounterRng;

double default_tip(const SleSpec& spec) {
  return spec.tip_eps > 0 ? spec.tip_eps : 0.1 * std::sqrt(spec.dt);
}

Variant variant_for(Kind kind) {
  switch (kind) {
    case Kind::AnnulusPlain:
    case Kind::AnnulusMarked:
      return Variant::CoveringAnnulus;
    case Kind::DiscMarked:
      return Variant::CoveringDisc;
    case Kind::Radial:
      return Variant::CoveringRadial;
    case Kind::WholePlane:
      return Variant::CoveringWholePlane;
  }
  return Variant::CoveringAnnulus;
}

}  // namespace

SleSample sample(const SleSpec& spec, const std::vector<double>& trace_times) {
  SleSample out;
  out.spec = spec;
  const double dt = spec.dt;
  const double sk = std::sqrt(spec.kappa * dt);
  CounterRng rng(spec.seed);

  DrivingPath drv;
  drv.dt = dt;
  drv.kappa = spec.kappa;

  switch (spec.kind) {
    case Kind::AnnulusPlain: {
      if (!(spec.t_horizon > 0 && spec.t_horizon < spec.p))
        throw std::invalid_argument("annulus horizon must lie in (0, p)");
      drv.t0 = 0.0;
      std::size_t n = std::size_t(std::ceil(spec.t_horizon / dt));
      drv.samples.resize(n + 1);
      double xi = spec.x0;
      drv.samples[0] = xi;
      for (std::size_t i = 1; i <= n; ++i) {
        xi += sk * rng.normal(i - 1);
        drv.samples[i] = xi;
      }
      break;
    }
    case Kind::AnnulusMarked: {
      if (!(spec.t_horizon > 0 && spec.t_horizon < spec.p))
        throw std::invalid_argument("annulus horizon must lie in (0, p)");
      if (!spec.lambda)
        throw std::invalid_argument("marked kind requires a drift function");
      drv.t0 = 0.0;
      std::size_t n = std::size_t(std::ceil(spec.t_horizon / dt));
      drv.samples.resize(n + 1);
      out.marked_track.resize(n + 1);
      double xi = spec.x0, q = spec.y0;
      drv.samples[0] = xi;
      out.marked_track[0] = q;
      double hi[1];
      for (std::size_t i = 1; i <= n; ++i) {
        double tau = spec.p - (i - 1) * dt;
        double b = spec.lambda->eval(tau, xi - q).first;
        if (std::abs(b) > spec.blowup_guard) {
          out.aborted = AbortInfo{(i - 1) * dt, b};
          for (std::size_t j = i; j <= n; ++j) {
            drv.samples[j] = xi;
            out.marked_track[j] = q;
          }
          break;
        }
        specfun::ha_i_real(tau, q - xi, 0, hi);
        xi += b * dt + sk * rng.normal(i - 1);
        q += hi[0] * dt;
        drv.samples[i] = xi;
        out.marked_track[i] = q;
      }
      break;
    }
    case Kind::DiscMarked: {
      if (!(spec.t_start < spec.t_horizon && spec.t_horizon < 0))
        throw std::invalid_argument("disc kind needs t_start < t_horizon < 0");
      if (!spec.lambda)
        throw std::invalid_argument("marked kind requires a drift function");
      drv.t0 = spec.t_start;
      std::size_t n =
          std::size_t(std::ceil((spec.t_horizon - spec.t_start) / dt));
      drv.samples.resize(n + 1);
      out.marked_track.resize(n + 1);
      double xi = rng.uniform(1ULL << 62) * kTwoPi;  // uniform circle start
      double q = spec.y0;
      drv.samples[0] = xi;
      out.marked_track[0] = q;
      double hi[1];
      for (std::size_t i = 1; i <= n; ++i) {
        double t = spec.t_start + (i - 1) * dt;
        double b = spec.lambda->eval(-t, xi - q).first;
        if (std::abs(b) > spec.blowup_guard) {
          out.aborted = AbortInfo{t, b};
          for (std::size_t j = i; j <= n; ++j) {
            drv.samples[j] = xi;
            out.marked_track[j] = q;
          }
          break;
        }
        specfun::ha_i_real(-t, q - xi, 0, hi);
        xi += b * dt + sk * rng.normal(i - 1);
        q += hi[0] * dt;
        drv.samples[i] = xi;
        out.marked_track[i] = q;
      }
      break;
    }
    case Kind::Radial: {
      if (!(spec.t_horizon > 0))
        throw std::invalid_argument("radial horizon must be positive");
      drv.t0 = 0.0;
      std::size_t n = std::size_t(std::ceil(spec.t_horizon / dt));
      drv.samples.resize(n + 1);
      double xi = spec.x0;
      drv.samples[0] = xi;
      for (std::size_t i = 1; i <= n; ++i) {
        xi += sk * rng.normal(i - 1) + spec.s * dt;
        drv.samples[i] = xi;
      }
      break;
    }
    case Kind::WholePlane: {
      if (!(spec.t_start < spec.t_horizon))
        throw std::invalid_argument("whole-plane needs t_start < t_horizon");
      stochastic::Grid g{spec.t_start, dt,
                         std::size_t(std::ceil(
                             (spec.t_horizon - spec.t_start) / dt))};
      auto bm = stochastic::pre_t_kappa_bm(spec.seed, spec.kappa, g);
      drv.t0 = spec.t_start;
      drv.samples.resize(bm.values.size());
      for (std::size_t i = 0; i < bm.values.size(); ++i)
        drv.samples[i] = bm.values[i] + spec.s * g.time(i);
      break;
    }
  }

  out.driving = std::move(drv);
  if (!trace_times.empty()) {
    Flow flow = flow_of(out);
    out.trace = flow.extract_trace(trace_times, default_tip(spec));
  } else {
    out.trace.tip_offset_eps = default_tip(spec);
  }
  return out;
}

loewner::Flow flow_of(const SleSample& s) {
  double p = variant_needs_modulus(variant_for(s.spec.kind)) ? s.spec.p : 0.0;
  return Flow(variant_for(s.spec.kind), s.driving, s.spec.solver, p);
}

EndpointResult endpoint(const SleSample& sample, EndpointTarget target) {
  (void)target;  // both targets live on T_p for annulus kinds
  if (sample.trace.points.empty())
    throw std::invalid_argument("endpoint: sample has no trace");
  const double p = sample.spec.p;
  double t_stop = sample.trace.times.back();
  double delta_stop = p - t_stop;
  // The tip approaches T_p much faster than any sqrt(delta) heuristic
  // (empirically the gap closes like e^{-c/delta}), so a half-capacity stop
  // still lands near the circle; degenerate stops are rejected outright.
  if (delta_stop > 0.1 * p)
    throw NotConvergedError("endpoint: stopped too far from the modulus");
  Complex tip = sample.trace.points.back();
  double dist = std::abs(tip.imag() - p);
  if (dist > 10.0 * std::sqrt(std::max(delta_stop, 0.0)))
    throw NotConvergedError("endpoint: terminal point too far from T_p");
  EndpointResult r;
  r.achieved_distance = dist;
  r.point = std::exp(Complex(-p, tip.real()));
  return r;
}

}  // namespace slelab::sle
