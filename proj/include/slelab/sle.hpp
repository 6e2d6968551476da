#pragma once

// SLE samplers: plain annulus SLE_kappa, annulus SLE(kappa, Lambda) with one
// marked point (crossing type), disc SLE(kappa, Lambda), radial SLE(kappa,s)
// and whole-plane SLE(kappa,s).  Traces are extracted in covering
// coordinates (strip points); the annulus/disc picture is e^{i beta~}.

#include <complex>
#include <optional>
#include <vector>

#include "slelab/drift.hpp"
#include "slelab/loewner.hpp"
#include "slelab/stochastic.hpp"

namespace slelab::sle {

using Complex = std::complex<double>;

enum class Kind {
  AnnulusPlain,   // xi = x0 + sqrt(kappa) B
  AnnulusMarked,  // crossing annulus SLE(kappa, Lambda), marked e^{-p+i y0}
  DiscMarked,     // disc SLE(kappa, Lambda), marked e^{i y0}, t < 0
  Radial,         // xi = x0 + sqrt(kappa) B + s t
  WholePlane,     // xi = pre-(T;kappa)-BM + s t on [t_start, t_horizon]
};

struct SleSpec {
  Kind kind = Kind::AnnulusPlain;
  double kappa = 2.0;
  double dt = 1e-4;
  stochastic::RngSeed seed{};
  double t_horizon = 0.0;  // end of integration (annulus kinds: < p)
  double p = 1.0;          // annulus modulus
  double x0 = 0.0;         // covering start angle
  double y0 = 0.0;         // covering marked angle
  const drift::DriftFunction* lambda = nullptr;  // marked kinds
  double s = 0.0;          // skew drift rate (radial / whole-plane)
  double t_start = -8.0;   // surrogate -infinity (whole-plane / disc)
  loewner::SolverConfig solver{};
  double tip_eps = 0.0;    // 0: defaults to 0.1 sqrt(dt)
  double blowup_guard = 1e6;
};

struct AbortInfo {
  double time = 0.0;
  double drift_value = 0.0;
};

struct SleSample {
  SleSpec spec;
  loewner::DrivingPath driving;
  std::vector<double> marked_track;  // q(t) on the driving grid (marked kinds)
  loewner::Trace trace;              // covering coordinates
  std::optional<AbortInfo> aborted;
};

// Samples the driving (and marked track) and extracts the trace at the
// requested times.  Pass an empty times list to skip trace extraction.
SleSample sample(const SleSpec& spec, const std::vector<double>& trace_times);

// The flow the sample's driving generates (for direct map evaluations).
loewner::Flow flow_of(const SleSample& sample);

enum class EndpointTarget { InnerCircle, MarkedPoint };

struct NotConvergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EndpointResult {
  Complex point;               // projected to T_p (annulus picture)
  double achieved_distance;    // covering distance from the terminal point
};

// Terminal trace point of an annulus sample integrated to t_stop = p -
// delta_stop, projected to the inner circle.  NotConverged when the terminal
// point is farther than 10 sqrt(delta_stop) from T_p.
EndpointResult endpoint(const SleSample& sample, EndpointTarget target);

}  // namespace slelab::sle
