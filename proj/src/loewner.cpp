#include "slelab/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace slelab::loewner {
namespace {

constexpr double kPi = 3.14159265358979323846;
using specfun::kSwapModulus;

Complex cot2(Complex w) {
  if (w.imag() >= 0.0) {
    Complex e = std::exp(Complex(0, 1) * w);
    return Complex(0, 1) * (e + 1.0) / (e - 1.0);
  }
  Complex e = std::exp(Complex(0, -1) * w);
  return Complex(0, -1) * (e + 1.0) / (e - 1.0);
}
Complex coth2(Complex w) {
  if (w.real() >= 0.0) {
    Complex e = std::exp(-w);
    return (1.0 + e) / (1.0 - e);
  }
  Complex e = std::exp(w);
  return (e + 1.0) / (e - 1.0);
}
using specfun::ha_fast;
using specfun::ha_i_fast;
using specfun::hh_fast;

}  // namespace

bool variant_needs_modulus(Variant v) {
  switch (v) {
    case Variant::Annulus:
    case Variant::CoveringAnnulus:
    case Variant::InvertedCoveringAnnulus:
    case Variant::RescaledCoveringAnnulus:
      return true;
    default:
      return false;
  }
}
bool variant_is_covering(Variant v) {
  switch (v) {
    case Variant::CoveringRadial:
    case Variant::CoveringAnnulus:
    case Variant::InvertedCoveringAnnulus:
    case Variant::CoveringWholePlane:
    case Variant::CoveringWholePlaneInverted:
    case Variant::CoveringDisc:
    case Variant::RescaledCoveringAnnulus:
    case Variant::Strip:
      return true;
    default:
      return false;
  }
}
bool variant_starts_at_minus_infinity(Variant v) {
  switch (v) {
    case Variant::WholePlaneInverted:
    case Variant::CoveringWholePlane:
    case Variant::CoveringWholePlaneInverted:
    case Variant::Disc:
    case Variant::CoveringDisc:
      return true;
    default:
      return false;
  }
}
std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Radial: return "radial";
    case Variant::CoveringRadial: return "covering-radial";
    case Variant::Annulus: return "annulus";
    case Variant::CoveringAnnulus: return "covering-annulus";
    case Variant::InvertedCoveringAnnulus: return "inverted-covering-annulus";
    case Variant::WholePlaneInverted: return "whole-plane-inverted";
    case Variant::CoveringWholePlane: return "covering-whole-plane";
    case Variant::CoveringWholePlaneInverted:
      return "covering-whole-plane-inverted";
    case Variant::Disc: return "disc";
    case Variant::CoveringDisc: return "covering-disc";
    case Variant::RescaledCoveringAnnulus: return "rescaled-covering-annulus";
    case Variant::Strip: return "strip";
  }
  return "?";
}

double DrivingPath::value(double t) const {
  if (samples.empty()) throw OutOfRangeError("driving: empty path");
  if (samples.size() == 1) return samples[0];
  double u = (t - t0) / dt;
  if (u <= 0.0) return samples.front();
  if (u >= double(samples.size() - 1)) return samples.back();
  size_t i = size_t(u);
  double frac = u - double(i);
  return samples[i] * (1.0 - frac) + samples[i + 1] * frac;
}

DrivingPath DrivingPath::shifted(double t1) const {
  DrivingPath out;
  out.t0 = 0.0;
  out.dt = dt;
  out.kappa = kappa;
  double end = t_end();
  for (double s = t1; s <= end + 1e-12; s += dt) out.samples.push_back(value(s));
  if (out.samples.size() < 2) out.samples.push_back(value(end));
  return out;
}

DrivingPath DrivingPath::constant(double v, double t0, double t1, double dt) {
  DrivingPath out;
  out.t0 = t0;
  out.dt = dt;
  size_t n = size_t(std::ceil((t1 - t0) / dt)) + 1;
  out.samples.assign(std::max<size_t>(n, 2), v);
  return out;
}

DrivingPath DrivingPath::from_function(const std::function<double(double)>& f,
                                       double t0, double t1, double dt) {
  DrivingPath out;
  out.t0 = t0;
  out.dt = dt;
  size_t n = size_t(std::ceil((t1 - t0) / dt)) + 1;
  out.samples.reserve(n + 1);
  for (size_t i = 0; i <= n; ++i) out.samples.push_back(f(t0 + i * dt));
  return out;
}

Flow::Flow(Variant variant, DrivingPath driving, SolverConfig cfg,
           double modulus_p)
    : variant_(variant), driving_(std::move(driving)), cfg_(cfg),
      p_(modulus_p) {
  if (variant_needs_modulus(variant) && !(p_ > 0))
    throw std::invalid_argument("variant requires a positive modulus");
}

Complex Flow::rhs(double t, Complex w) const {
  const double xi = driving_.value(t);
  Complex out[3];
  switch (variant_) {
    case Variant::Radial:
    case Variant::WholePlaneInverted: {
      Complex a = std::exp(Complex(0, xi));
      return w * (a + w) / (a - w);
    }
    case Variant::CoveringRadial:
    case Variant::CoveringWholePlane:
    case Variant::CoveringWholePlaneInverted:
      return cot2(w - xi);
    case Variant::Annulus: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      ha_fast(p_ - (t - driving_.t0), z, 0, out);
      return w * Complex(0, 1) * out[0];
    }
    case Variant::CoveringAnnulus:
      ha_fast(p_ - (t - driving_.t0), w - xi, 0, out);
      return out[0];
    case Variant::InvertedCoveringAnnulus:
      ha_i_fast(p_ - (t - driving_.t0), w - xi, 0, out);
      return out[0];
    case Variant::Disc: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      ha_i_fast(-t, z, 0, out);
      return w * Complex(0, 1) * out[0];
    }
    case Variant::CoveringDisc:
      ha_i_fast(-t, w - xi, 0, out);
      return out[0];
    case Variant::RescaledCoveringAnnulus:
      hh_fast(p_ + (t - driving_.t0), w - xi, 0, out);
      return out[0];
    case Variant::Strip:
      return coth2(w - xi);
  }
  return {};
}

Complex Flow::rhs_dw(double t, Complex w) const {
  const double xi = driving_.value(t);
  Complex out[3];
  switch (variant_) {
    case Variant::Radial:
    case Variant::WholePlaneInverted: {
      Complex a = std::exp(Complex(0, xi));
      Complex d = a - w;
      return (a * a + 2.0 * a * w - w * w) / (d * d);
    }
    case Variant::CoveringRadial:
    case Variant::CoveringWholePlane:
    case Variant::CoveringWholePlaneInverted: {
      Complex f = cot2(w - xi);
      return -0.5 * (1.0 + f * f);
    }
    case Variant::Annulus: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      ha_fast(p_ - (t - driving_.t0), z, 1, out);
      return Complex(0, 1) * out[0] + out[1];
    }
    case Variant::CoveringAnnulus:
      ha_fast(p_ - (t - driving_.t0), w - xi, 1, out);
      return out[1];
    case Variant::InvertedCoveringAnnulus:
      ha_i_fast(p_ - (t - driving_.t0), w - xi, 1, out);
      return out[1];
    case Variant::Disc: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      ha_i_fast(-t, z, 1, out);
      return Complex(0, 1) * out[0] + out[1];
    }
    case Variant::CoveringDisc:
      ha_i_fast(-t, w - xi, 1, out);
      return out[1];
    case Variant::RescaledCoveringAnnulus:
      hh_fast(p_ + (t - driving_.t0), w - xi, 1, out);
      return out[1];
    case Variant::Strip: {
      Complex f = coth2(w - xi);
      return 0.5 * (1.0 - f * f);
    }
  }
  return {};
}

double Flow::singularity_distance(double t, Complex w) const {
  const double xi = driving_.value(t);
  auto cot_lattice = [&](Complex u) {
    return std::hypot(std::remainder(u.real(), 2 * kPi), u.imag());
  };
  switch (variant_) {
    case Variant::Radial:
    case Variant::WholePlaneInverted:
      return std::abs(w - std::exp(Complex(0, xi)));
    case Variant::CoveringRadial:
    case Variant::CoveringWholePlane:
    case Variant::CoveringWholePlaneInverted:
      return cot_lattice(w - xi);
    case Variant::Annulus: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      return std::abs(w) *
             specfun::dist_to_ha_poles(p_ - (t - driving_.t0), z);
    }
    case Variant::CoveringAnnulus:
      return specfun::dist_to_ha_poles(p_ - (t - driving_.t0), w - xi);
    case Variant::InvertedCoveringAnnulus:
      return specfun::dist_to_ha_i_poles(p_ - (t - driving_.t0), w - xi);
    case Variant::Disc: {
      Complex a = std::exp(Complex(0, xi));
      Complex z = Complex(0, -1) * std::log(w / a);
      return std::abs(w) * specfun::dist_to_ha_i_poles(-t, z);
    }
    case Variant::CoveringDisc:
      return specfun::dist_to_ha_i_poles(-t, w - xi);
    case Variant::RescaledCoveringAnnulus:
      return specfun::dist_to_rescaled_poles(p_ + (t - driving_.t0), w - xi,
                                             specfun::Rescaled::H);
    case Variant::Strip:
      return std::hypot(w.real() - xi, std::remainder(w.imag(), 2 * kPi));
  }
  return 1e300;
}

Complex Flow::initial_state(Complex z, EvolveResult* res) const {
  const double t0 = driving_.t0;
  switch (variant_) {
    case Variant::WholePlaneInverted: {
      double im_cov = -std::log(std::abs(z));
      if (t0 > im_cov - std::log(8.0))
        throw StartTooLateError("whole-plane start too late for this point");
      res->init_error_bound = 4.0 * std::exp(t0 - im_cov);
      return z * std::exp(t0);
    }
    case Variant::CoveringWholePlaneInverted: {
      if (t0 > z.imag() - std::log(8.0))
        throw StartTooLateError("whole-plane start too late for this point");
      res->init_error_bound = 4.0 * std::exp(t0 - z.imag());
      return z - Complex(0, t0);
    }
    case Variant::CoveringWholePlane: {
      if (t0 > -z.imag() - std::log(8.0))
        throw StartTooLateError("whole-plane start too late for this point");
      res->init_error_bound = 4.0 * std::exp(t0 + z.imag());
      return z + Complex(0, t0);
    }
    case Variant::Disc: {
      double im_cov = -std::log(std::abs(z));
      if (t0 > -im_cov - std::log(13.0))
        throw StartTooLateError("disc start too late for this point");
      res->init_error_bound = 10.0 * std::exp(im_cov + t0);
      return z;
    }
    case Variant::CoveringDisc: {
      if (t0 > -z.imag() - std::log(13.0))
        throw StartTooLateError("disc start too late for this point");
      res->init_error_bound = 10.0 * std::exp(z.imag() + t0);
      return z;
    }
    default:
      return z;
  }
}

namespace {
// Dormand-Prince 5(4) tableau.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kC[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kE[7] = {35.0 / 384 - 5179.0 / 57600,
                          0.0,
                          500.0 / 1113 - 7571.0 / 16695,
                          125.0 / 192 - 393.0 / 640,
                          -2187.0 / 6784 + 92097.0 / 339200,
                          11.0 / 84 - 187.0 / 2100,
                          -1.0 / 40};
}  // namespace

// Integrates the flow ODE (and optionally the variational equation) from s0
// to s1.  backward = integrating toward smaller time for trace extraction.
Complex Flow::integrate(Complex y0, double s0, double s1, bool backward,
                        EvolveResult* res, Complex* deriv) const {
  const double dir = s1 >= s0 ? 1.0 : -1.0;
  double s = s0;
  Complex y = y0;
  Complex w = deriv ? *deriv : Complex(1.0);
  const bool with_deriv = deriv != nullptr;
  double h = dir * std::min(cfg_.max_step, std::abs(s1 - s0));
  const double guard = specfun::pole_guard(y0);

  auto f = [&](double ss, Complex yy, Complex ww, Complex* fy, Complex* fw) {
    *fy = rhs(ss, yy);
    if (with_deriv) *fw = rhs_dw(ss, yy) * ww;
  };

  int iter_guard = 0;
  while (dir * (s1 - s) > 1e-15 * (1.0 + std::abs(s1))) {
    if (++iter_guard > 40000000)
      throw StepUnderflowError("integrator: iteration budget exhausted");
    double dist = singularity_distance(s, y);
    if (!backward && dist < guard) {
      if (res) {
        res->status = EvolveStatus::Swallowed;
        res->swallow_time = s;
      }
      return y;
    }
    if (backward && dist < 1e-3 * guard)
      throw BackwardBlowupError("backward flow reached the singularity");
    double cap = std::max(cfg_.pole_safety_factor * dist, 1e-13);
    double habs = std::min({std::abs(h), cap, cfg_.max_step,
                            std::abs(s1 - s)});
    if (habs < cfg_.min_step) {
      if (!backward) {
        if (res) {
          res->status = EvolveStatus::Swallowed;
          res->swallow_time = s;
        }
        return y;
      }
      throw StepUnderflowError("integrator: step size underflow");
    }
    double hs = dir * habs;

    Complex ky[7], kw[7];
    f(s, y, w, &ky[0], &kw[0]);
    bool stage_ok = true;
    for (int i = 1; i < 7 && stage_ok; ++i) {
      Complex yy = y, ww = w;
      for (int j = 0; j < i; ++j) {
        yy += hs * kA[i][j] * ky[j];
        if (with_deriv) ww += hs * kA[i][j] * kw[j];
      }
      if (!std::isfinite(yy.real()) || !std::isfinite(yy.imag())) {
        stage_ok = false;
        break;
      }
      f(s + kC[i] * hs, yy, ww, &ky[i], &kw[i]);
    }
    if (!stage_ok) {
      h = hs * 0.25;
      continue;
    }
    // 5th-order solution uses row kA[6]; error uses kE.
    Complex y5 = y, w5 = w, err = 0.0, errw = 0.0;
    for (int i = 0; i < 6; ++i) {
      y5 += hs * kA[6][i] * ky[i];
      if (with_deriv) w5 += hs * kA[6][i] * kw[i];
    }
    for (int i = 0; i < 7; ++i) {
      err += hs * kE[i] * ky[i];
      if (with_deriv) errw += hs * kE[i] * kw[i];
    }
    double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y), std::abs(y5));
    double en = std::abs(err) / sc;
    if (with_deriv) {
      double scw =
          cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(w), std::abs(w5));
      en = std::max(en, std::abs(errw) / scw);
    }
    if (en <= 1.0 || habs <= cfg_.min_step * 2) {
      s += hs;
      y = y5;
      w = w5;
    }
    double fac = en > 0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    fac = std::min(5.0, std::max(0.2, fac));
    h = hs * fac;
  }
  if (deriv) *deriv = w;
  return y;
}

EvolveResult Flow::evolve(Complex z, double t) const {
  if (t < driving_.t0 - 1e-12 || t > driving_.t_end() + 1e-12)
    throw OutOfRangeError("evolve: t outside the driving range");
  if (variant_needs_modulus(variant_) &&
      variant_ != Variant::RescaledCoveringAnnulus &&
      t - driving_.t0 >= p_)
    throw OutOfRangeError("evolve: t beyond the annulus modulus");
  EvolveResult res;
  Complex y0 = initial_state(z, &res);
  Complex y = integrate(y0, driving_.t0, t, false, &res, nullptr);
  if (res.status == EvolveStatus::Ok) res.value = y;
  return res;
}

Flow::WithDeriv Flow::evolve_with_deriv(Complex z, double t) const {
  if (t < driving_.t0 - 1e-12 || t > driving_.t_end() + 1e-12)
    throw OutOfRangeError("evolve: t outside the driving range");
  WithDeriv out;
  Complex y0 = initial_state(z, &out.g);
  Complex w = 1.0;
  if (variant_ == Variant::WholePlaneInverted) w = std::exp(driving_.t0);
  Complex y = integrate(y0, driving_.t0, t, false, &out.g, &w);
  if (out.g.status == EvolveStatus::Ok) out.g.value = y;
  out.dg = w;
  return out;
}

Complex Flow::trace_point(double t, double tip_eps) const {
  const double xi = driving_.value(t);
  Complex w0;
  switch (variant_) {
    case Variant::Radial:
    case Variant::WholePlaneInverted:
      w0 = std::exp(Complex(0, xi)) * (1.0 - tip_eps);
      break;
    case Variant::Annulus:
      w0 = std::exp(Complex(0, xi)) * (1.0 - tip_eps);
      break;
    case Variant::CoveringRadial:
    case Variant::CoveringAnnulus:
    case Variant::CoveringWholePlaneInverted:
    case Variant::Strip:
    case Variant::RescaledCoveringAnnulus:
      w0 = Complex(xi, tip_eps);
      break;
    case Variant::CoveringWholePlane:
      w0 = Complex(xi, -tip_eps);
      break;
    case Variant::InvertedCoveringAnnulus:
      w0 = Complex(xi, p_ - (t - driving_.t0) - tip_eps);
      break;
    case Variant::CoveringDisc:
      w0 = Complex(xi, -t - tip_eps);
      break;
    case Variant::Disc:
      w0 = std::exp(Complex(t, xi)) * (1.0 + tip_eps);
      break;
  }
  Complex y = integrate(w0, t, driving_.t0, true, nullptr, nullptr);
  const double t0 = driving_.t0;
  switch (variant_) {
    case Variant::CoveringWholePlane:
      return y - Complex(0, t0);
    case Variant::CoveringWholePlaneInverted:
      return y + Complex(0, t0);
    case Variant::WholePlaneInverted:
      return y * std::exp(-t0);
    default:
      return y;
  }
}

Trace Flow::extract_trace(const std::vector<double>& times,
                          double tip_eps) const {
  Trace tr;
  tr.tip_offset_eps = tip_eps;
  tr.times = times;
  tr.points.reserve(times.size());
  for (double t : times) tr.points.push_back(trace_point(t, tip_eps));
  return tr;
}

EvolveResult evolve_whole_plane(const DrivingPath& driving, double t_start,
                                Complex z, double t, SolverConfig cfg) {
  if (std::abs(driving.t0 - t_start) > 1e-12)
    throw std::invalid_argument("evolve_whole_plane: driving.t0 != t_start");
  Flow flow(Variant::CoveringWholePlaneInverted, driving, cfg);
  return flow.evolve(z, t);
}

EvolveResult evolve_disc(const DrivingPath& driving, double t_start, Complex z,
                         double t, SolverConfig cfg) {
  if (std::abs(driving.t0 - t_start) > 1e-12)
    throw std::invalid_argument("evolve_disc: driving.t0 != t_start");
  Flow flow(Variant::CoveringDisc, driving, cfg);
  return flow.evolve(z, t);
}

DrivingPath rescaled_driving(double p, const DrivingPath& xi, double dt_hat) {
  if (std::abs(xi.t0) > 1e-12)
    throw std::invalid_argument("rescaled_driving: xi must start at t=0");
  const double hp = kPi * kPi / p;
  const double T = xi.t_end();
  const double That = kPi * kPi / (p - T) - hp;
  auto u = [&](double s) { return p - kPi * kPi / (hp + s); };
  DrivingPath out;
  out.t0 = 0.0;
  out.dt = dt_hat;
  out.kappa = xi.kappa;
  size_t n = size_t(std::floor(That / dt_hat));
  out.samples.reserve(n + 1);
  double integral = 0.0;
  double prev_f = xi.value(u(0.0));
  out.samples.push_back((hp / kPi) * prev_f);
  for (size_t i = 1; i <= n; ++i) {
    double s = i * dt_hat;
    double fm = xi.value(u(s - 0.5 * dt_hat));
    double fs = xi.value(u(s));
    integral += dt_hat / 6.0 * (prev_f + 4.0 * fm + fs);  // Simpson
    prev_f = fs;
    out.samples.push_back(((hp + s) / kPi) * fs - integral / kPi);
  }
  return out;
}

RescaledCorrespondenceReport rescaled_correspondence_check(
    double p, const DrivingPath& xi, int n_trace_times, SolverConfig cfg) {
  const double hp = kPi * kPi / p;
  auto u = [&](double s) { return p - kPi * kPi / (hp + s); };

  const double dt_hat = 2e-4;
  DrivingPath hxi = rescaled_driving(p, xi, dt_hat);
  Flow flowA(Variant::CoveringAnnulus, xi, cfg, p);
  Flow flowR(Variant::RescaledCoveringAnnulus, hxi, cfg, hp);

  // Cumulative integral of xi(u(r))/pi on the hxi grid, by Simpson.
  size_t nI = hxi.samples.size();
  std::vector<double> I(nI, 0.0);
  double prev_f = xi.value(u(0.0));
  for (size_t i = 1; i < nI; ++i) {
    double s = i * dt_hat;
    double fm = xi.value(u(s - 0.5 * dt_hat));
    double fs = xi.value(u(s));
    I[i] = I[i - 1] + dt_hat / 6.0 * (prev_f + 4.0 * fm + fs);
    prev_f = fs;
  }
  auto integral_at = [&](double s) {
    double pos = s / dt_hat;
    size_t i = std::min(size_t(pos), nI - 2);
    double frac = pos - double(i);
    return I[i] * (1.0 - frac) + I[i + 1] * frac;
  };

  RescaledCorrespondenceReport rep;
  const double s_max = hxi.t_end();
  for (double fs : {0.25, 0.5, 0.8}) {
    double s = fs * s_max;
    for (double zr : {0.0, 1.2, 2.9}) {
      for (double zi : {0.7, 1.6, 2.6}) {
        Complex z(zr, zi);
        auto lhs = flowR.evolve(z, s);
        auto rhs = flowA.evolve(p / kPi * z, u(s));
        if (lhs.status != EvolveStatus::Ok || rhs.status != EvolveStatus::Ok)
          continue;
        Complex rhs_mapped =
            (hp + s) / kPi * rhs.value - integral_at(s) / kPi;
        rep.max_map_deviation = std::max(rep.max_map_deviation,
                                         std::abs(lhs.value - rhs_mapped));
        ++rep.map_points;
      }
    }
  }

  const double tip_eps = 1e-4;
  rep.tip_eps = tip_eps;
  for (int j = 1; j <= n_trace_times; ++j) {
    double s = s_max * j / (n_trace_times + 1);
    Complex bh = flowR.trace_point(s, tip_eps);
    Complex bt = flowA.trace_point(u(s), tip_eps);
    rep.max_trace_deviation =
        std::max(rep.max_trace_deviation, std::abs(bh - kPi / p * bt));
    ++rep.trace_points;
  }
  return rep;
}

void write_trace_csv(const Trace& trace, const std::string& path,
                     const std::string& config_echo) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  if (!config_echo.empty()) {
    f << "# " << config_echo << "\n";
  }
  f << "t,re,im,tip_eps\n";
  char buf[160];
  for (size_t i = 0; i < trace.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n",
                  trace.times[i], trace.points[i].real(),
                  trace.points[i].imag(), trace.tip_offset_eps);
    f << buf;
  }
}

}  // namespace slelab::loewner
