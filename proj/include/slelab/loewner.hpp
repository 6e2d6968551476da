#pragma once

// Loewner-equation variants and their conformal maps: forward evolution
// g(t,z) with swallowing detection, variational derivative g'(t,z), trace
// extraction by backward flow, and the rescaled-equation correspondence.

#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slelab/specfun.hpp"

namespace slelab::loewner {

using Complex = std::complex<double>;

enum class Variant {
  Radial,
  CoveringRadial,
  Annulus,
  CoveringAnnulus,
  InvertedCoveringAnnulus,
  WholePlaneInverted,           // grows from infinity; unit-disc coordinates
  CoveringWholePlaneInverted,   // covering of the above, maps onto H
  CoveringWholePlane,           // interior chain from 0, maps onto -H
  Disc,                         // interior chain from 0, t < 0
  CoveringDisc,
  RescaledCoveringAnnulus,
  Strip,
};

bool variant_needs_modulus(Variant v);
bool variant_is_covering(Variant v);
bool variant_starts_at_minus_infinity(Variant v);
std::string variant_name(Variant v);

// Driving function xi sampled on a uniform grid, interpolated piecewise
// linearly.  kappa is metadata (quadratic-variation rate of the samples).
struct DrivingPath {
  double t0 = 0.0;
  double dt = 1e-3;
  std::vector<double> samples;
  double kappa = 0.0;

  double t_end() const { return t0 + dt * (samples.size() - 1); }
  double value(double t) const;
  // Restarted path: samples from time t1 on, re-anchored to start at t'=0.
  DrivingPath shifted(double t1) const;
  static DrivingPath constant(double value, double t0, double t1, double dt);
  static DrivingPath from_function(const std::function<double(double)>& f,
                                   double t0, double t1, double dt);
};

struct SolverConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  double pole_safety_factor = 0.25;  // step <= factor * dist(state, pole)
  double min_step = 1e-14;
};

struct StepUnderflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StartTooLateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BackwardBlowupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EvolveStatus { Ok, Swallowed };

struct EvolveResult {
  EvolveStatus status = EvolveStatus::Ok;
  Complex value{};        // g(t,z) when Ok
  double swallow_time = 0;  // tau_z when Swallowed
  double init_error_bound = 0.0;  // asymptotic-start error (whole-plane/disc)
};

struct Trace {
  std::vector<double> times;
  std::vector<Complex> points;
  double tip_offset_eps = 0.0;
};

// A solved Loewner evolution for one variant.  Immutable after construction;
// evaluations at distinct (z, t) are independent.
class Flow {
 public:
  Flow(Variant variant, DrivingPath driving, SolverConfig cfg = {},
       double modulus_p = 0.0);

  Variant variant() const { return variant_; }
  double modulus() const { return p_; }
  const DrivingPath& driving() const { return driving_; }
  const SolverConfig& config() const { return cfg_; }

  // g(t, z).  For variants started at -infinity the flow is initialized at
  // driving().t0 with the certified asymptotic value; the reported
  // init_error_bound covers it, and StartTooLateError signals a start time
  // too close to z for the certificate.
  EvolveResult evolve(Complex z, double t) const;

  // (g(t,z), g'(t,z)) by co-integrating the variational equation.
  struct WithDeriv {
    EvolveResult g;
    Complex dg{};
  };
  WithDeriv evolve_with_deriv(Complex z, double t) const;

  // beta(t) for each requested time by backward flow from the driving point
  // offset tip_eps into the domain.  Points are in the variant's own
  // coordinates (covering variants: strip/half-plane points).
  Trace extract_trace(const std::vector<double>& times, double tip_eps) const;
  Complex trace_point(double t, double tip_eps) const;

  // Right-hand side and distance to the nearest RHS singularity at (t, w).
  Complex rhs(double t, Complex w) const;
  Complex rhs_dw(double t, Complex w) const;  // d(rhs)/dw for the variational eq
  double singularity_distance(double t, Complex w) const;

 private:
  Complex integrate(Complex y0, double s0, double s1, bool backward,
                    EvolveResult* res, Complex* deriv) const;
  Complex initial_state(Complex z, EvolveResult* res) const;

  Variant variant_;
  DrivingPath driving_;
  SolverConfig cfg_;
  double p_ = 0.0;
};

// Whole-plane / disc convenience wrappers (variant chosen by name).
EvolveResult evolve_whole_plane(const DrivingPath& driving, double t_start,
                                Complex z, double t, SolverConfig cfg = {});
EvolveResult evolve_disc(const DrivingPath& driving, double t_start, Complex z,
                         double t, SolverConfig cfg = {});

// Rescaled-equation correspondence report for modulus p and a driving xi on
// [0, T], T < p: max deviation of the map identity over a (t,z) grid and of
// the trace identity over trace times.
struct RescaledCorrespondenceReport {
  double max_map_deviation = 0.0;
  double max_trace_deviation = 0.0;
  double tip_eps = 0.0;
  int map_points = 0;
  int trace_points = 0;
};
RescaledCorrespondenceReport rescaled_correspondence_check(
    double p, const DrivingPath& xi, int n_trace_times = 20,
    SolverConfig cfg = {});

// Builds the rescaled driving (ha-xi transform) from xi on [0,T]:
// hxi(s) = ((hp+s)/pi) xi(p - pi^2/(hp+s)) - (1/pi) int_0^s xi(...) dr.
DrivingPath rescaled_driving(double p, const DrivingPath& xi, double dt_hat);

void write_trace_csv(const Trace& trace, const std::string& path,
                     const std::string& config_echo);

}  // namespace slelab::loewner
