#pragma once

// Counter-based RNG, Brownian / pre-(T;kappa)-Brownian path generation, and
// Euler-Maruyama integration of the drift SDEs.  Identical (seed, stream_id)
// reproduce identical paths bit-for-bit on one build; paths with distinct
// stream_ids are independent and may be generated concurrently.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slelab::stochastic {

struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// SplitMix64-style counter generator: value k of a stream is a pure function
// of (seed, stream_id, k).
class CounterRng {
 public:
  explicit CounterRng(RngSeed s);
  double uniform(std::uint64_t k) const;  // in (0,1)
  double normal(std::uint64_t k) const;   // N(0,1)
  std::uint64_t bits(std::uint64_t k) const;

 private:
  std::uint64_t key_;
};

struct Grid {
  double t0 = 0.0;
  double dt = 1e-3;
  std::size_t n_steps = 0;
  double time(std::size_t i) const { return t0 + dt * double(i); }
};

struct SdePath {
  Grid grid;
  std::vector<double> values;  // n_steps + 1 entries
  double kappa = 0.0;
  double time(std::size_t i) const { return grid.time(i); }
};

struct AbortRecord {
  double time = 0.0;
  double drift_value = 0.0;
};

struct DriftBlowupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// B(t0) = 0, increments N(0, dt).
SdePath brownian(RngSeed seed, Grid grid);

// Pre-(T;kappa)-Brownian motion on a grid that spans t=0: uniform start
// x ~ U[0, 2pi), two independent wings scaled by sqrt(kappa).
SdePath pre_t_kappa_bm(RngSeed seed, double kappa, Grid grid);

// Euler-Maruyama for dX = sqrt(kappa) dB + drift(t, X) dt.  The drift may
// declare a known bound (|drift| <= drift_bound asserted per step, 0 = none).
// |drift| > blowup_guard aborts the path; the abort is recorded on the
// result, never silently dropped.
struct SdeResult {
  SdePath path;
  std::optional<AbortRecord> abort;
};
SdeResult integrate_sde(RngSeed seed,
                        const std::function<double(double, double)>& drift,
                        double kappa, double x0, Grid grid,
                        double drift_bound = 0.0,
                        double blowup_guard = 1e6);

// Coupled driving/marked-point system for annulus SLE(kappa, Lambda):
//   d xi = sqrt(kappa) dB + Lambda(p - t, xi - q) dt,   xi(0) = x0
//   dq   = H_I(p - t, q - xi) dt,                       q(0)  = y0
// Lambda(tau, x) is supplied as a callable; H_I comes from specfun.
struct MarkedSdeResult {
  SdePath xi;
  SdePath q;
  std::optional<AbortRecord> abort;
};
MarkedSdeResult integrate_marked_sde(
    RngSeed seed, const std::function<double(double, double)>& lambda,
    double p, double kappa, double x0, double y0, Grid grid,
    double blowup_guard = 1e6);

void write_path_csv(const SdePath& path, const std::string& file);

}  // namespace slelab::stochastic
