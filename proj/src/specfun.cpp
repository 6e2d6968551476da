#include "slelab/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace slelab::specfun {
namespace {

constexpr double kPi = 3.14159265358979323846;
using std::abs;

// ---------------------------------------------------------------------------
// Stable primitives.  cot2(w) = cot(w/2), tanh2(w) = tanh(w/2), ...
// Evaluated through e^{iw} / e^{-w} with the exponent chosen so |e^..| <= 1.

Complex cot2(Complex w) {
  if (w.imag() >= 0.0) {
    Complex e = std::exp(Complex(0, 1) * w);  // |e| <= 1
    return Complex(0, 1) * (e + 1.0) / (e - 1.0);
  }
  Complex e = std::exp(Complex(0, -1) * w);
  return Complex(0, -1) * (e + 1.0) / (e - 1.0);
}

Complex tanh2(Complex w) {
  if (w.real() >= 0.0) {
    Complex e = std::exp(-w);
    return (1.0 - e) / (1.0 + e);
  }
  Complex e = std::exp(w);
  return (e - 1.0) / (e + 1.0);
}

Complex coth2(Complex w) {
  if (w.real() >= 0.0) {
    Complex e = std::exp(-w);
    return (1.0 + e) / (1.0 - e);
  }
  Complex e = std::exp(w);
  return (e + 1.0) / (e - 1.0);
}

// Binomial table up to kMaxDeriv+2.
constexpr int kBinN = kMaxDeriv + 3;
struct Binom {
  double c[kBinN][kBinN]{};
  constexpr Binom() {
    for (int n = 0; n < kBinN; ++n) {
      c[n][0] = 1.0;
      for (int k = 1; k <= n; ++k)
        c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0.0);
    }
  }
};
constexpr Binom kBinom;

// Derivative stack for f with f' = a + b f^2 (cot2: a=b=-1/2; tanh2/coth2:
// a=1/2, b=-1/2).  Fills d[0..n] with d^k f / dw^k.
void riccati_stack(Complex f0, double a, double b, int n, Complex* d) {
  d[0] = f0;
  if (n >= 1) d[1] = a + b * f0 * f0;
  for (int m = 1; m < n; ++m) {
    Complex s = 0.0;
    for (int k = 0; k <= m; ++k) s += kBinom.c[m][k] * d[k] * d[m - k];
    d[m + 1] = b * s;
  }
}

// A[k] = 2 sum_{l>=1} l^k e^{-(l-1)}: |f^(k)(w)| <= A[k] e^{-decay(w)} for the
// three primitives once decay(w) >= 1 (the +-i / +-1 constants excluded; they
// cancel in PV pairs).
const std::array<double, kBinN>& tail_consts() {
  static const std::array<double, kBinN> a = [] {
    std::array<double, kBinN> r{};
    for (int k = 0; k < kBinN; ++k) {
      double s = 0.0;
      for (int l = 1; l < 80; ++l) s += std::pow(double(l), k) * std::exp(-(l - 1.0));
      r[k] = 2.0 * s;
    }
    return r;
  }();
  return a;
}

double ipow(double x, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= x;
  return r;
}

// One PV series: value of d_t^j d_z^h of  sum_n f(z - n*shift) over the n
// selected by `odd` (trig: shift = i t, hyp: shift = t).  The n=0 term is
// handled by the caller.  Pair n = +-n_k, n_k = 2k or 2k-1, k >= 1.
struct PairSeries {
  bool trig;          // true: cot2 halves, shift i t;  false: hyp halves
  bool odd;           // odd n (n_k = 2k-1) vs even n (n_k = 2k)
  bool tanh_kind;     // hyp only: tanh2 (true) or coth2 (false)
};

KernelValue pv_pairs(const PairSeries& ps, double t, Complex z, int h, int j,
                     const SeriesTruncation& trunc) {
  const auto& A = tail_consts();
  const int depth = h + j;
  const double sigma = ps.trig ? std::abs(z.imag()) : std::abs(z.real());
  Complex sum = 0.0;
  Complex d[kBinN];
  const Complex jfac_m = ps.trig ? Complex(0, -1) : Complex(-1, 0);
  const Complex jfac_p = ps.trig ? Complex(0, 1) : Complex(1, 0);

  auto half = [&](Complex w) -> Complex {
    Complex f0 = ps.trig ? cot2(w) : (ps.tanh_kind ? tanh2(w) : coth2(w));
    double a = ps.trig ? -0.5 : 0.5;
    riccati_stack(f0, a, -0.5, depth, d);
    return d[depth];
  };

  int k = 1;
  double bound = 0.0;
  for (;; ++k) {
    if (2 * k > trunc.max_terms)
      throw NonConvergenceError("pv series: max_terms exhausted");
    const double n = ps.odd ? (2.0 * k - 1.0) : (2.0 * k);
    const Complex shift = ps.trig ? Complex(0, n * t) : Complex(n * t, 0);
    Complex term = ipow(n, j) * (std::pow(jfac_m, j) * half(z - shift) +
                                 std::pow(jfac_p, j) * half(z + shift));
    sum += term;
    // Tail test at the next index; rigorous once n_next*t >= sigma + 1.
    const double n_next = n + 2.0;
    if (n_next * t >= sigma + 1.0) {
      double b = 2.0 * A[depth] * ipow(n_next, j) *
                 (std::exp(sigma - n_next * t) + std::exp(-sigma - n_next * t));
      if (b < trunc.abs_tol) {
        // Sum the explicit bound series for the certificate.
        bound = 0.0;
        double nn = n_next;
        for (int i = 0; i < 400; ++i) {
          double bi = 2.0 * A[depth] * ipow(nn, j) *
                      (std::exp(sigma - nn * t) + std::exp(-sigma - nn * t));
          bound += bi;
          if (bi < bound * 1e-6 + 1e-320) break;
          nn += 2.0;
        }
        break;
      }
    }
  }
  return {sum, bound};
}

// ---------------------------------------------------------------------------
// Modular swap assembly.  For t < kSwapModulus the z-derivative array comes
// from the partner family at modulus pi^2/t; dt-orders are then assembled
// from the PDE  d_t F = s (F'' + F' F),  s = +1 for H/H_I, s = -1 for the
// rescaled kernels.

struct ValErr {
  Complex v;
  double e;
};

ValErr mul(const ValErr& x, const ValErr& y) {
  return {x.v * y.v, std::abs(x.v) * y.e + std::abs(y.v) * x.e + x.e * y.e};
}
ValErr add(const ValErr& x, const ValErr& y) { return {x.v + y.v, x.e + y.e}; }

// Given D[0..n+2] (z-derivatives of F), return d_t F^(h) per the PDE.
ValErr pde_dt(const ValErr* D, int h, double sgn) {
  ValErr s = D[h + 2];
  for (int i = 0; i <= h; ++i)
    s = add(s, mul({kBinom.c[h][i] * D[i + 1].v, kBinom.c[h][i] * D[i + 1].e},
                   D[h - i]));
  return {sgn * s.v, s.e};
}

// dt assembly to dt_order j (0..2) for slot h, from z-derivatives D[0..h+4].
ValErr assemble_dt(const ValErr* D, int h, int j, double sgn) {
  if (j == 0) return D[h];
  if (j == 1) return pde_dt(D, h, sgn);
  // d_t^2 F^(h) = d_z^h d_t (s(F''+F'F)) with d_t F^(k) = T1[k]
  ValErr T1[kBinN];
  for (int k = 0; k <= h + 2; ++k) T1[k] = pde_dt(D, k, sgn);
  ValErr s = T1[h + 2];
  for (int i = 0; i <= h; ++i) {
    double c = kBinom.c[h][i];
    s = add(s, mul({c * T1[i + 1].v, c * T1[i + 1].e}, D[h - i]));
    s = add(s, mul({c * D[i + 1].v, c * D[i + 1].e}, T1[h - i]));
  }
  return {sgn * s.v, s.e};
}

void check_args(int order, int dt_order) {
  if (order < 0 || dt_order < 0 || dt_order > 2 ||
      order + 2 * dt_order > kMaxDeriv)
    throw std::invalid_argument("kernel derivative order out of range");
}

// Evaluate kind (0=H,1=H_I,2=hH,3=hH_I,4=hH_Iq) honoring the modular swap.
KernelValue eval_kernel(int kind, double t, Complex z, int h, int j,
                        const SeriesTruncation& trunc);

KernelValue eval_direct(int kind, double t, Complex z, int h, int j,
                        const SeriesTruncation& trunc) {
  PairSeries ps;
  ps.trig = (kind <= 1);
  ps.odd = (kind == 1);
  ps.tanh_kind = (kind >= 3);
  KernelValue kv = pv_pairs(ps, t, z, h, j, trunc);
  if (j == 0 && (kind == 0 || kind == 2 || kind == 3)) {
    Complex d0[kBinN];
    Complex f0 = kind == 0 ? cot2(z) : (kind == 2 ? coth2(z) : tanh2(z));
    riccati_stack(f0, kind == 0 ? -0.5 : 0.5, -0.5, h, d0);
    kv.value += d0[h];
  }
  return kv;
}

// Swap: hH_*(t,z) = (pi/t) H_*(pi^2/t, pi z/t) + z/t, and the inverse
// H_*(t,z) = (T/pi) hH_*(T, (T/pi) z) - z/t with T = pi^2/t.  kind and
// partner differ by 2; the linear term enters with sign -1 when the target
// is a trig kernel and +1 when it is a rescaled kernel.
KernelValue eval_swapped(int kind, double t, Complex z, int h, int j,
                         const SeriesTruncation& trunc) {
  const int partner = kind <= 1 ? kind + 2 : kind - 2;
  const double lin_sign = kind <= 1 ? -1.0 : 1.0;
  const double T = kPi * kPi / t;
  const double scale = T / kPi;  // = pi / t
  const Complex Z = scale * z;
  const int need = h + 2 * j;
  ValErr D[kBinN];
  for (int k = 0; k <= need; ++k) {
    KernelValue p = eval_kernel(partner, T, Z, k, 0, trunc);
    // F^(k)(t,z) = scale^{k+1} P^(k)(T,Z) + sign*([k==0] z/t + [k==1] 1/t)
    double f = ipow(scale, k + 1);
    D[k] = {f * p.value, f * p.trunc_error_bound};
    if (k == 0) D[k].v += lin_sign * z / t;
    if (k == 1) D[k].v += lin_sign / t;
  }
  // After the swap the array is a z-derivative array of the ORIGINAL kernel
  // at the original (t,z); dt orders follow from its own PDE sign.
  double sgn = (kind <= 1) ? 1.0 : -1.0;
  ValErr r = assemble_dt(D, h, j, sgn);
  return {r.v, r.e};
}

KernelValue eval_kernel(int kind, double t, Complex z, int h, int j,
                        const SeriesTruncation& trunc) {
  if (std::isinf(t)) {
    if (j > 0) return {0.0, 0.0};
    Complex d[kBinN];
    switch (kind) {
      case 0: riccati_stack(cot2(z), -0.5, -0.5, h, d); return {d[h], 0.0};
      case 1: return {0.0, 0.0};
      case 2: riccati_stack(coth2(z), 0.5, -0.5, h, d); return {d[h], 0.0};
      case 3: riccati_stack(tanh2(z), 0.5, -0.5, h, d); return {d[h], 0.0};
      default: return {0.0, 0.0};
    }
  }
  if (!(t > 0)) throw std::invalid_argument("modulus must be positive");
  if (kind == 4) {
    // hH_Iq = hH_I - tanh2(z): pairs only, no n=0 column.
    if (t < kSwapModulus) {
      KernelValue a = eval_swapped(3, t, z, h, j, trunc);
      if (j == 0) {
        Complex d[kBinN];
        riccati_stack(tanh2(z), 0.5, -0.5, h, d);
        a.value -= d[h];
      }
      return a;
    }
    PairSeries ps{false, false, true};
    return pv_pairs(ps, t, z, h, j, trunc);
  }
  if (t < kSwapModulus) return eval_swapped(kind, t, z, h, j, trunc);
  return eval_direct(kind, t, z, h, j, trunc);
}

double lattice_dist(double sx, double px, double sy, double py, double ox,
                    double oy) {
  // distance of (sx, sy) to lattice {m*px + ox, k*py + oy}
  double dx = std::remainder(sx - ox, px);
  double dy = std::remainder(sy - oy, py);
  return std::hypot(dx, dy);
}

void guard_pole(double dist, Complex z, const char* who) {
  if (dist < pole_guard(z))
    throw PoleProximityError(std::string(who) + ": z within pole guard");
}

}  // namespace

double dist_to_ha_poles(double t, Complex z) {
  if (std::isinf(t)) return lattice_dist(z.real(), 2 * kPi, 0.0, 1e300, 0, 0);
  return lattice_dist(z.real(), 2 * kPi, z.imag(), 2 * t, 0, 0);
}
double dist_to_ha_i_poles(double t, Complex z) {
  if (std::isinf(t)) return 1e300;
  return lattice_dist(z.real(), 2 * kPi, z.imag(), 2 * t, 0, t);
}
double dist_to_rescaled_poles(double t, Complex z, Rescaled which) {
  if (std::isinf(t)) {
    if (which == Rescaled::HIq) return 1e300;
    double oy = which == Rescaled::H ? 0.0 : kPi;
    return lattice_dist(0.0, 1e300, z.imag(), 2 * kPi, 0, oy);
  }
  double oy = which == Rescaled::H ? 0.0 : kPi;
  double d = lattice_dist(z.real(), 2 * t, z.imag(), 2 * kPi, 0, oy);
  if (which != Rescaled::HIq) return d;
  // hH_Iq has no poles on the m = 0 column.
  double m = std::round(z.real() / (2 * t));
  if (m != 0.0) return d;
  double dx = std::min(std::abs(z.real() - 2 * t), std::abs(z.real() + 2 * t));
  return std::hypot(dx, std::remainder(z.imag() - kPi, 2 * kPi));
}

KernelValue eval_ha(double t, Complex z, int order, int dt_order,
                    SeriesTruncation trunc) {
  check_args(order, dt_order);
  guard_pole(dist_to_ha_poles(t, z), z, "eval_ha");
  return eval_kernel(0, t, z, order, dt_order, trunc);
}

KernelValue eval_ha_i(double t, Complex z, int order, int dt_order,
                      SeriesTruncation trunc) {
  check_args(order, dt_order);
  guard_pole(dist_to_ha_i_poles(t, z), z, "eval_ha_i");
  return eval_kernel(1, t, z, order, dt_order, trunc);
}

KernelValue eval_ha_rescaled(double t, Complex z, Rescaled which, int order,
                             int dt_order, SeriesTruncation trunc) {
  check_args(order, dt_order);
  guard_pole(dist_to_rescaled_poles(t, z, which), z, "eval_ha_rescaled");
  int kind = which == Rescaled::H ? 2 : (which == Rescaled::HI ? 3 : 4);
  return eval_kernel(kind, t, z, order, dt_order, trunc);
}

Complex eval_sa(double t, Complex w, SeriesTruncation trunc) {
  if (std::isinf(t)) return (1.0 + w) / (1.0 - w);
  Complex z = Complex(0, -1) * std::log(w);
  return Complex(0, 1) * eval_ha(t, z, 0, 0, trunc).value;
}

Complex eval_sa_i(double t, Complex w, SeriesTruncation trunc) {
  if (std::isinf(t)) return 2.0 * w / (1.0 - w);  // S(inf, w) - 1
  Complex z = Complex(0, -1) * std::log(w);
  return Complex(0, 1) * eval_ha_i(t, z, 0, 0, trunc).value;
}

KernelValue eval_ha_minus_pole(double t, Complex z, SeriesTruncation trunc) {
  // cot2(z) - 2/z by Laurent series for small |z|, direct otherwise;
  // the even pairs are analytic at 0.
  Complex base;
  if (std::abs(z) <= 0.5) {
    // cot(u) - 1/u = -(u/3 + u^3/45 + 2u^5/945 + u^7/4725 + 2u^9/93555
    //                 + 1382 u^11 / 638512875 + 4 u^13 / 18243225)
    Complex u = 0.5 * z, u2 = u * u;
    Complex s = u * (1.0 / 3 +
               u2 * (1.0 / 45 +
               u2 * (2.0 / 945 +
               u2 * (1.0 / 4725 +
               u2 * (2.0 / 93555 +
               u2 * (1382.0 / 638512875 + u2 * (4.0 / 18243225)))))));
    base = -s;
  } else {
    base = cot2(z) - 2.0 / z;
  }
  if (std::isinf(t)) return {base, 0.0};
  if (t < kSwapModulus)
    throw std::invalid_argument("eval_ha_minus_pole: t below swap threshold");
  PairSeries ps{true, false, false};
  KernelValue pairs = pv_pairs(ps, t, z, 0, 0, trunc);
  return {base + pairs.value, pairs.trunc_error_bound};
}

double eval_rA(double t, SeriesTruncation trunc) {
  if (std::isinf(t)) return -1.0 / 6.0;
  if (!(t > 0)) throw std::invalid_argument("rA: modulus must be positive");
  // sum_k sinh(kt)^{-2} - 1/6, sinh(u)^{-2} = 4 e^{-2u} / (1 - e^{-2u})^2
  double E2 = std::exp(-2.0 * t);
  double q = E2, s = 0.0;
  for (int k = 1;; ++k) {
    if (k > trunc.max_terms) throw NonConvergenceError("rA: max_terms");
    double term = 4.0 * q / ((1.0 - q) * (1.0 - q));
    s += term;
    q *= E2;
    if (4.0 * q / ((1.0 - E2) * (1.0 - q)) < trunc.abs_tol * 0.5) break;
  }
  return s - 1.0 / 6.0;
}

namespace {
double rA_plus_sixth(double s) { return eval_rA(s) + 1.0 / 6.0; }

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = rA_plus_sixth(lm), frm = rA_plus_sixth(rm);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         adaptive_simpson(m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}
}  // namespace

double eval_RA(double t, SeriesTruncation trunc) {
  if (std::isinf(t)) return 0.0;
  if (!(t > 0)) throw std::invalid_argument("RA: modulus must be positive");
  // -int_t^U (rA + 1/6) with U where the O(e^{-2s}) integrand drops below
  // the tolerance; the discarded tail is under 3 e^{-2U}.
  double U = std::max(t, 1.0) + 0.5 * std::log(1.0 / trunc.abs_tol) + 2.0;
  double fa = rA_plus_sixth(t), fb = rA_plus_sixth(U);
  double fm = rA_plus_sixth(0.5 * (t + U));
  double whole = (U - t) / 6.0 * (fa + 4 * fm + fb);
  double v = adaptive_simpson(t, U, fa, fm, fb, whole,
                              std::max(trunc.abs_tol, 1e-14), 40);
  return -v;
}

// ---------------------------------------------------------------------------
// Theta products.

KernelValue eval_theta(double t, Complex z, Theta which, int order,
                       int dt_order, SeriesTruncation trunc) {
  if (order < 0 || order > 2 || dt_order < 0 || dt_order > 1 ||
      (order > 0 && dt_order > 0))
    throw std::invalid_argument("eval_theta: unsupported derivative order");
  if (std::isinf(t)) {
    if (which == Theta::ThetaI)
      return {order == 0 && dt_order == 0 ? 1.0 : 0.0, 0.0};
    throw std::invalid_argument("eval_theta: Theta at t = inf is degenerate");
  }
  if (!(t > 0)) throw std::invalid_argument("theta: modulus must be positive");

  const double q = std::exp(-t);
  const Complex eiz = std::exp(Complex(0, 1) * z);
  const Complex miz = std::exp(Complex(0, -1) * z);
  Complex value = 1.0;
  Complex L1 = 0.0, L2 = 0.0, Lt = 0.0;  // sums of log-derivatives
  double em = std::abs(eiz) > 1.0 / std::abs(eiz) ? std::abs(eiz)
                                                  : 1.0 / std::abs(eiz);

  if (which == Theta::Theta) {
    value = 2.0 * std::pow(q, 0.25) * std::sin(0.5 * z);
    Complex c = cot2(z);
    L1 = 0.5 * c;
    L2 = -0.25 * (1.0 + c * c);
    Lt = -0.25;
  }

  double qe = 1.0;  // q^{2m} running
  double bound_log = 0.0;
  for (int m = 1;; ++m) {
    if (m > trunc.max_terms) throw NonConvergenceError("theta: max_terms");
    qe *= q * q;
    double qo = which == Theta::ThetaI ? qe / q : qe;  // q^{2m-1} or q^{2m}
    double ex = which == Theta::ThetaI ? 2.0 * m - 1.0 : 2.0 * m;
    Complex u = qo * eiz, v = qo * miz;
    value *= (1.0 - qe) * (1.0 - u) * (1.0 - v);
    L1 += -Complex(0, 1) * u / (1.0 - u) + Complex(0, 1) * v / (1.0 - v);
    L2 += u / ((1.0 - u) * (1.0 - u)) + v / ((1.0 - v) * (1.0 - v));
    Lt += 2.0 * m * qe / (1.0 - qe) + ex * u / (1.0 - u) + ex * v / (1.0 - v);
    double tailfac = qo * q * q * em;
    if (tailfac < 0.25 && tailfac < trunc.abs_tol * 0.05) {
      // |log remaining product| <= sum 3 * q^{..} em / (1-..)
      bound_log = 8.0 * tailfac / (1.0 - q * q);
      break;
    }
  }

  Complex out;
  if (dt_order == 1)
    out = value * Lt;
  else if (order == 0)
    out = value;
  else if (order == 1)
    out = value * L1;
  else
    out = value * (L1 * L1 + L2);
  double bound = std::abs(out) * bound_log * (2.0 + order + dt_order) +
                 std::abs(value) * bound_log;
  return {out, bound};
}

// ---------------------------------------------------------------------------
// Fast paths (machine truncation, no certificates).

namespace {

void hyp_pairs_fast(double T, Complex z, bool tanh_kind, int mo, Complex* out) {
  // f(z) + sum_{m>=1} f(z-2mT) + f(z+2mT), f = tanh2 or coth2.
  auto stack = [&](Complex w, Complex* d) {
    Complex f = tanh_kind ? tanh2(w) : coth2(w);
    d[0] = f;
    d[1] = 0.5 * (1.0 - f * f);
    if (mo >= 2) d[2] = -f * d[1];
  };
  Complex d[3];
  stack(z, d);
  for (int k = 0; k <= mo; ++k) out[k] = d[k];
  double ax = std::abs(z.real());
  for (int m = 1;; ++m) {
    double a = 2.0 * m * T;
    if (a - ax > 42.0) break;
    stack(z - a, d);
    for (int k = 0; k <= mo; ++k) out[k] += d[k];
    stack(z + a, d);
    for (int k = 0; k <= mo; ++k) out[k] += d[k];
    if (m > 200000) throw NonConvergenceError("hyp_pairs_fast");
  }
}

}  // namespace

void ha_fast(double t, Complex z, int mo, Complex* out) {
  if (std::isinf(t)) {
    Complex f = cot2(z);
    out[0] = f;
    if (mo >= 1) out[1] = -0.5 * (1.0 + f * f);
    if (mo >= 2) out[2] = -f * out[1];
    return;
  }
  if (t < kSwapModulus) {
    double T = kPi * kPi / t;
    double scale = T / kPi;
    Complex acc[3];
    hyp_pairs_fast(T, scale * z, false, mo, acc);
    double s = scale;
    for (int k = 0; k <= mo; ++k) {
      out[k] = s * acc[k];
      s *= scale;
    }
    out[0] -= z / t;
    if (mo >= 1) out[1] -= 1.0 / t;
    return;
  }
  Complex f = cot2(z);
  out[0] = f;
  if (mo >= 1) out[1] = -0.5 * (1.0 + f * f);
  if (mo >= 2) out[2] = -f * out[1];
  Complex S = std::sin(z), C = std::cos(z);
  double ay = std::abs(z.imag());
  double E2 = std::exp(-2.0 * t);
  double e = E2;
  for (int m = 1;; ++m) {
    double a = 2.0 * m * t;
    if (a - ay > 42.0) break;
    double Cm = 0.5 * (1.0 / e + e);
    Complex den = Cm - C;
    out[0] += 2.0 * S / den;
    if (mo >= 1) out[1] += (2.0 * C * Cm - 2.0) / (den * den);
    if (mo >= 2)
      out[2] += -2.0 * S * (Cm * Cm + C * Cm - 2.0) / (den * den * den);
    e *= E2;
    if (m > 200000) throw NonConvergenceError("ha_fast");
  }
}

void ha_i_fast(double t, Complex z, int mo, Complex* out) {
  if (std::isinf(t)) {
    for (int k = 0; k <= mo; ++k) out[k] = 0.0;
    return;
  }
  if (t < kSwapModulus) {
    double T = kPi * kPi / t;
    double scale = T / kPi;
    Complex acc[3];
    hyp_pairs_fast(T, scale * z, true, mo, acc);
    double s = scale;
    for (int k = 0; k <= mo; ++k) {
      out[k] = s * acc[k];
      s *= scale;
    }
    out[0] -= z / t;
    if (mo >= 1) out[1] -= 1.0 / t;
    return;
  }
  for (int k = 0; k <= mo; ++k) out[k] = 0.0;
  Complex S = std::sin(z), C = std::cos(z);
  double ay = std::abs(z.imag());
  double E2 = std::exp(-2.0 * t);
  double e = std::exp(-t);
  for (int m = 0;; ++m) {
    double a = (2.0 * m + 1.0) * t;
    if (a - ay > 42.0) break;
    double Cm = 0.5 * (1.0 / e + e);
    Complex den = Cm - C;
    out[0] += 2.0 * S / den;
    if (mo >= 1) out[1] += (2.0 * C * Cm - 2.0) / (den * den);
    if (mo >= 2)
      out[2] += -2.0 * S * (Cm * Cm + C * Cm - 2.0) / (den * den * den);
    e *= E2;
    if (m > 200000) throw NonConvergenceError("ha_i_fast");
  }
}

void hh_fast(double t, Complex z, int mo, Complex* out) {
  if (std::isinf(t)) {
    Complex f = coth2(z);
    out[0] = f;
    if (mo >= 1) out[1] = 0.5 * (1.0 - f * f);
    if (mo >= 2) out[2] = -f * out[1];
    return;
  }
  if (t < kSwapModulus) {
    double T = kPi * kPi / t;
    double scale = T / kPi;
    Complex acc[3];
    ha_fast(T, scale * z, mo, acc);
    double s = scale;
    for (int k = 0; k <= mo; ++k) {
      out[k] = s * acc[k];
      s *= scale;
    }
    out[0] += z / t;
    if (mo >= 1) out[1] += 1.0 / t;
    return;
  }
  hyp_pairs_fast(t, z, false, mo, out);
}

namespace {

// hH_I derivatives on the real line through tanh halves; out[0..mo].
void hh_i_real(double T, double x, int mo, double* out) {
  double d[4];
  auto tanh2_stack = [&](double u, double* dd) {
    double f = std::tanh(0.5 * u);
    dd[0] = f;
    dd[1] = 0.5 * (1.0 - f * f);
    if (mo >= 2) dd[2] = -f * dd[1];
  };
  tanh2_stack(x, d);
  for (int k = 0; k <= mo; ++k) out[k] = d[k];
  for (int m = 1;; ++m) {
    double a = 2.0 * m * T;
    if (a - std::abs(x) > 42.0) break;
    tanh2_stack(x - a, d);
    for (int k = 0; k <= mo; ++k) out[k] += d[k];
    tanh2_stack(x + a, d);
    for (int k = 0; k <= mo; ++k) out[k] += d[k];
    if (m > 100000) throw NonConvergenceError("hh_i_real");
  }
}

}  // namespace

void ha_i_real(double t, double x, int max_order, double* out) {
  if (std::isinf(t)) {
    for (int k = 0; k <= max_order; ++k) out[k] = 0.0;
    return;
  }
  if (t < kSwapModulus) {
    double T = kPi * kPi / t;
    double hh[3];
    hh_i_real(T, T * x / kPi, max_order, hh);
    double f = T / kPi;
    double s = f;
    for (int k = 0; k <= max_order; ++k) {
      out[k] = s * hh[k];
      s *= f;
    }
    out[0] -= x / t;
    if (max_order >= 1) out[1] -= 1.0 / t;
    return;
  }
  const double S = std::sin(x), C = std::cos(x);
  for (int k = 0; k <= max_order; ++k) out[k] = 0.0;
  const double E2 = std::exp(-2.0 * t);
  double e = std::exp(-t);  // e^{-(2k+1)t} running
  for (int k = 0;; ++k) {
    if ((2 * k + 1) * t > 42.0 + 0.0) break;
    double Ck = 0.5 * (1.0 / e + e);  // cosh((2k+1)t)
    double den = Ck - C;
    out[0] += 2.0 * S / den;
    if (max_order >= 1) out[1] += (2.0 * C * Ck - 2.0) / (den * den);
    if (max_order >= 2)
      out[2] += -2.0 * S * (Ck * Ck + C * Ck - 2.0) / (den * den * den);
    e *= E2;
  }
}

void ha_real(double t, double x, int max_order, double* out) {
  double c = 1.0 / std::tan(0.5 * x);
  out[0] = c;
  if (max_order >= 1) out[1] = -0.5 * (1.0 + c * c);
  if (max_order >= 2) out[2] = 0.5 * c * (1.0 + c * c);
  if (std::isinf(t)) return;
  if (t < kSwapModulus) {
    // H(t,x) = (T/pi) hH(T, Tx/pi) - x/pi; hH = coth2 + tanh-type pairs
    double T = kPi * kPi / t, X = T * x / kPi;
    double d[3];
    double ch = 1.0 / std::tanh(0.5 * X);
    d[0] = ch;
    d[1] = 0.5 * (1.0 - ch * ch);
    d[2] = -ch * d[1];
    double acc[3] = {d[0], d[1], d[2]};
    for (int m = 1;; ++m) {
      double a = 2.0 * m * T;
      if (a - std::abs(X) > 42.0) break;
      for (double sgn : {-1.0, 1.0}) {
        double u = X + sgn * a;
        double f = 1.0 / std::tanh(0.5 * u);
        double f1 = 0.5 * (1.0 - f * f);
        acc[0] += f;
        acc[1] += f1;
        acc[2] += -f * f1;
      }
    }
    double fscale = T / kPi, s = fscale;
    for (int k = 0; k <= max_order; ++k) {
      out[k] = s * acc[k];
      s *= fscale;
    }
    out[0] -= x / t;
    if (max_order >= 1) out[1] -= 1.0 / t;
    return;
  }
  const double S = std::sin(x), C = std::cos(x);
  const double E2 = std::exp(-2.0 * t);
  double e = E2;  // e^{-2mt}
  for (int m = 1;; ++m) {
    if (2 * m * t > 42.0) break;
    double Cm = 0.5 * (1.0 / e + e);
    double den = Cm - C;
    out[0] += 2.0 * S / den;
    if (max_order >= 1) out[1] += (2.0 * C * Cm - 2.0) / (den * den);
    if (max_order >= 2)
      out[2] += -2.0 * S * (Cm * Cm + C * Cm - 2.0) / (den * den * den);
    e *= E2;
  }
}

double ha_rescaled_iq_prime_from_e(double E, double x, double exp_neg_abs_x) {
  // sum_{m>=1} tanh2'(|x| - 2mt) + tanh2'(|x| + 2mt), tanh2'(u) = 2v/(1+v)^2
  // with v = e^{-|u|}; even in x.  E = e^{-2t}.  Running products keep the
  // loop exp-free; the underflow fallback covers |x| beyond double range.
  double a = exp_neg_abs_x;
  if (a <= 0.0) {
    double ax = std::abs(x);
    double t = -0.5 * std::log(E);
    double sum = 0.0;
    double m0 = std::floor(ax / (2.0 * t));
    for (double m = std::max(1.0, m0 - 30); m <= m0 + 30; ++m) {
      double v = std::exp(-std::abs(ax - 2.0 * m * t));
      sum += 2.0 * v / ((1.0 + v) * (1.0 + v));
    }
    return sum;
  }
  double sum = 0.0;
  double w = a;       // -> a E^m   (plus side)
  double r = a;       // -> a E^{-m} until it crosses 1 (minus side)
  bool crossed = false;
  for (int m = 1; m < 100000; ++m) {
    w *= E;
    double vp = w;
    double vm;
    if (!crossed) {
      r /= E;
      if (r > 1.0) {
        r = 1.0 / r;
        crossed = true;
        vm = r;
      } else {
        vm = r;
      }
    } else {
      r *= E;
      vm = r;
    }
    sum += 2.0 * vp / ((1.0 + vp) * (1.0 + vp)) +
           2.0 * vm / ((1.0 + vm) * (1.0 + vm));
    if (crossed && vm < 1e-18 && vp < 1e-18) break;
  }
  return sum;
}

double ha_rescaled_iq_prime(double t, double x, double exp_neg_abs_x) {
  return ha_rescaled_iq_prime_from_e(std::exp(-2.0 * t), x, exp_neg_abs_x);
}

}  // namespace slelab::specfun
