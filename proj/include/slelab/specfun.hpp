#pragma once

// Annulus kernels S, H, H_I, the theta functions Theta, Theta_I, the
// rescaled kernels hH, hH_I, hH_Iq, and the coefficients r_A, R_A.
//
// Conventions (t > 0 is the modulus, z the lattice variable):
//   H(t,z)    = PV sum over even n of cot(z/2 - i n t / 2)          poles 2m*pi + 2kt i
//   H_I(t,z)  = PV sum over odd  n of cot((z - i n t)/2)            poles 2m*pi + (2k+1)t i
//   hH(t,z)   = PV sum over even n of coth((z - n t)/2)             poles n t + 2k*pi i
//   hH_I(t,z) = PV sum over even n of tanh((z - n t)/2)             poles n t + (2k+1)pi i
//   hH_Iq     = hH_I - tanh(z/2)
//   Theta_I(t,z) = prod_{m>=1} (1-q^{2m})(1-q^{2m-1}e^{iz})(1-q^{2m-1}e^{-iz}),  q = e^{-t}
//   Theta(t,z)   = 2 q^{1/4} sin(z/2) prod_{m>=1} (1-q^{2m})(1-q^{2m}e^{iz})(1-q^{2m}e^{-iz})
// so that H = 2 Theta'/Theta and H_I = 2 Theta_I'/Theta_I, and both thetas
// solve the heat equation d_t Theta = Theta''.
//
// t = +inf is a legal modulus and maps to the closed forms
// cot(z/2), 0, coth(z/2), tanh(z/2).
//
// For t below kSwapModulus the direct series converge slowly; evaluation
// switches to the other family through
//   hH_*(t,z) = (pi/t) H_*(pi^2/t, pi z/t) + z/t
// where the swapped-to modulus is >= pi^2/kSwapModulus.

#include <complex>
#include <limits>
#include <stdexcept>

namespace slelab::specfun {

using Complex = std::complex<double>;

inline constexpr double kInfModulus = std::numeric_limits<double>::infinity();
inline constexpr double kSwapModulus = 0.5; // t_min for the modular swap
inline constexpr int kMaxDeriv = 6;         // z-derivative depth of the engines

struct SeriesTruncation {
  double abs_tol = 1e-13;
  int max_terms = 4000;
};

// Value plus a rigorous bound on |value - exact| from the geometric series tail.
struct KernelValue {
  Complex value{};
  double trunc_error_bound = 0.0;
};

struct PoleProximityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pole guard radius: 1e-6 * (1 + |z|).
inline double pole_guard(Complex z) { return 1e-6 * (1.0 + std::abs(z)); }

// Distance from z to the pole lattice of H (even) / H_I (odd), modulus t.
double dist_to_ha_poles(double t, Complex z);
double dist_to_ha_i_poles(double t, Complex z);

enum class Theta { Theta, ThetaI };
enum class Rescaled { H, HI, HIq };

// Distance to the pole lattice of a rescaled kernel.
double dist_to_rescaled_poles(double t, Complex z, Rescaled which);

// d^order/dz^order  d^dt_order/dt^dt_order of each kernel.
// order in [0, kMaxDeriv], dt_order in {0,1,2}; order + dt_order <= kMaxDeriv.
KernelValue eval_ha(double t, Complex z, int order, int dt_order,
                    SeriesTruncation trunc = {});
KernelValue eval_ha_i(double t, Complex z, int order, int dt_order,
                      SeriesTruncation trunc = {});
KernelValue eval_ha_rescaled(double t, Complex z, Rescaled which, int order,
                             int dt_order, SeriesTruncation trunc = {});
KernelValue eval_theta(double t, Complex z, Theta which, int order = 0,
                       int dt_order = 0, SeriesTruncation trunc = {});

inline KernelValue eval_ha(double t, Complex z, SeriesTruncation trunc = {}) {
  return eval_ha(t, z, 0, 0, trunc);
}
inline KernelValue eval_ha_i(double t, Complex z, SeriesTruncation trunc = {}) {
  return eval_ha_i(t, z, 0, 0, trunc);
}

// S(t,w) = i H(t, -i Log w); S(inf,w) = (1+w)/(1-w).
Complex eval_sa(double t, Complex w, SeriesTruncation trunc = {});
// S_I(t,w) = S(t, e^{-t} w) - 1 evaluated through H_I.
Complex eval_sa_i(double t, Complex w, SeriesTruncation trunc = {});

// H(t,z) - 2/z, the kernel with its pole at 0 removed (stable for small |z|).
KernelValue eval_ha_minus_pole(double t, Complex z, SeriesTruncation trunc = {});

// r_A(t) = sum_k sinh(kt)^{-2} - 1/6;   r_A(inf) = -1/6.
double eval_rA(double t, SeriesTruncation trunc = {});
// R_A(t) = -int_t^inf (r_A(s) + 1/6) ds by adaptive quadrature;  R_A(inf) = 0.
double eval_RA(double t, SeriesTruncation trunc = {});

// ---- fast paths (hot loops; fixed machine-accuracy truncation) ----

// out[k] = d^k/dz^k of the kernel for k = 0..max_order (max_order <= 2).
void ha_fast(double t, Complex z, int max_order, Complex* out);
void ha_i_fast(double t, Complex z, int max_order, Complex* out);
void hh_fast(double t, Complex z, int max_order, Complex* out);  // rescaled hH

// out[k] = d^k/dx^k H_I(t,x) for k = 0..max_order (max_order <= 2), x real.
void ha_i_real(double t, double x, int max_order, double* out);
// out[k] = d^k/dx^k H(t,x), x real off the pole lattice.
void ha_real(double t, double x, int max_order, double* out);
// hH'_{I,q}(t,x) = sum over even n != 0 of tanh'((x-nt)/2)/2, x real.
// exp_neg_abs_x must equal e^{-|x|} and exp_neg_2t must equal e^{-2t}
// (Monte-Carlo loops maintain both as running products).
double ha_rescaled_iq_prime_from_e(double exp_neg_2t, double x,
                                   double exp_neg_abs_x);
double ha_rescaled_iq_prime(double t, double x, double exp_neg_abs_x);
inline double ha_rescaled_iq_prime(double t, double x) {
  return ha_rescaled_iq_prime(t, x, std::exp(-std::abs(x)));
}

}  // namespace slelab::specfun
