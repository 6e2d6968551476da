#include "slelab/stochastic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "slelab/specfun.hpp"

namespace slelab::stochastic {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(RngSeed s) {
  std::uint64_t a = mix64(s.seed + kGolden);
  key_ = mix64(a ^ (s.stream_id + 0x6a09e667f3bcc909ULL) * kGolden);
}

std::uint64_t CounterRng::bits(std::uint64_t k) const {
  return mix64(key_ + k * kGolden);
}

double CounterRng::uniform(std::uint64_t k) const {
  return (double(bits(k) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t k) const {
  double u1 = uniform(2 * k);
  double u2 = uniform(2 * k + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

SdePath brownian(RngSeed seed, Grid grid) {
  CounterRng rng(seed);
  SdePath p;
  p.grid = grid;
  p.values.resize(grid.n_steps + 1);
  double sdt = std::sqrt(grid.dt);
  double x = 0.0;
  p.values[0] = 0.0;
  for (std::size_t i = 1; i <= grid.n_steps; ++i) {
    x += sdt * rng.normal(i - 1);
    p.values[i] = x;
  }
  return p;
}

SdePath pre_t_kappa_bm(RngSeed seed, double kappa, Grid grid) {
  if (grid.t0 > 0.0 || grid.time(grid.n_steps) < 0.0)
    throw std::invalid_argument("pre_t_kappa_bm: grid must span t = 0");
  CounterRng rng(seed);
  SdePath p;
  p.grid = grid;
  p.kappa = kappa;
  p.values.resize(grid.n_steps + 1);
  // index of the grid point closest to 0 (grids are expected to contain 0)
  std::size_t i0 = std::size_t(std::llround(-grid.t0 / grid.dt));
  if (i0 > grid.n_steps) i0 = grid.n_steps;
  double x = rng.uniform(0) * kTwoPi;
  double sk = std::sqrt(kappa) * std::sqrt(grid.dt);
  p.values[i0] = x;
  double v = x;
  for (std::size_t i = i0 + 1; i <= grid.n_steps; ++i) {  // positive wing
    v += sk * rng.normal(1 + (i - i0));
    p.values[i] = v;
  }
  v = x;
  for (std::size_t i = i0; i-- > 0;) {  // negative wing, independent counters
    v += sk * rng.normal((1ULL << 32) + (i0 - i));
    p.values[i] = v;
  }
  return p;
}

SdeResult integrate_sde(RngSeed seed,
                        const std::function<double(double, double)>& drift,
                        double kappa, double x0, Grid grid, double drift_bound,
                        double blowup_guard) {
  CounterRng rng(seed);
  SdeResult out;
  out.path.grid = grid;
  out.path.kappa = kappa;
  out.path.values.resize(grid.n_steps + 1);
  double x = x0;
  out.path.values[0] = x;
  double sk = std::sqrt(kappa * grid.dt);
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    double t = grid.time(i);
    double b = drift(t, x);
    if (drift_bound > 0.0 && std::abs(b) > drift_bound * (1.0 + 1e-12))
      throw DriftBlowupError("drift exceeded its declared bound");
    if (std::abs(b) > blowup_guard) {
      out.abort = AbortRecord{t, b};
      for (std::size_t j = i + 1; j <= grid.n_steps; ++j)
        out.path.values[j] = x;
      return out;
    }
    x += b * grid.dt + sk * rng.normal(i);
    out.path.values[i + 1] = x;
  }
  return out;
}

MarkedSdeResult integrate_marked_sde(
    RngSeed seed, const std::function<double(double, double)>& lambda,
    double p, double kappa, double x0, double y0, Grid grid,
    double blowup_guard) {
  CounterRng rng(seed);
  MarkedSdeResult out;
  out.xi.grid = grid;
  out.xi.kappa = kappa;
  out.xi.values.resize(grid.n_steps + 1);
  out.q.grid = grid;
  out.q.values.resize(grid.n_steps + 1);
  double xi = x0, q = y0;
  out.xi.values[0] = xi;
  out.q.values[0] = q;
  double sk = std::sqrt(kappa * grid.dt);
  double hi[1];
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    double t = grid.time(i);
    double tau = p - t;
    double b = lambda(tau, xi - q);
    if (std::abs(b) > blowup_guard) {
      out.abort = AbortRecord{t, b};
      for (std::size_t j = i + 1; j <= grid.n_steps; ++j) {
        out.xi.values[j] = xi;
        out.q.values[j] = q;
      }
      return out;
    }
    specfun::ha_i_real(tau, q - xi, 0, hi);
    xi += b * grid.dt + sk * rng.normal(i);
    q += hi[0] * grid.dt;
    out.xi.values[i + 1] = xi;
    out.q.values[i + 1] = q;
  }
  return out;
}

void write_path_csv(const SdePath& path, const std::string& file) {
  std::ofstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file);
  f << "t,value\n";
  char buf[80];
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.time(i),
                  path.values[i]);
    f << buf;
  }
}

}  // namespace slelab::stochastic
