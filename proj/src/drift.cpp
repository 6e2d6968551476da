#include "slelab/drift.hpp"

#include <algorithm>
#include <cmath>

#include "slelab/specfun.hpp"
#include "slelab/stats.hpp"

namespace slelab::drift {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
namespace sf = slelab::specfun;
using stochastic::CounterRng;
using stochastic::RngSeed;

double c0_of(double kappa, double sigma) {
  double lo = 1.0 + kappa * sigma / 4.0;
  return lo + 0.1 * (2.0 - lo);
}

// sigma * int_T^inf (cone bound of hH'_{I,q}(that+s, X(s))) ds.
double tail_integral_bound(double kappa, double sigma, double that, double T) {
  if (sigma == 0.0) return 0.0;
  double c0 = c0_of(kappa, sigma);
  double denom = (2.0 - c0) * (1.0 - std::exp(-2.0 * std::min(that, 30.0)));
  return sigma * 4.0 * std::exp((c0 - 2.0) * (that + T)) / denom;
}

double auto_T_max(double kappa, double sigma, double that, double eps) {
  if (sigma == 0.0) return 4.0;
  double c0 = c0_of(kappa, sigma);
  double rate = 2.0 - c0;
  double denom = rate * (1.0 - std::exp(-2.0 * std::min(that, 30.0)));
  double T = std::log(4.0 * sigma / (eps * denom)) / rate - that;
  return std::clamp(T, 4.0, 80.0);
}

// Exit-probability part of the truncation certificate.
double cone_exit_bound(double kappa, double sigma, double that, double T,
                       double xhat) {
  double c0 = c0_of(kappa, sigma);
  double mstar = (c0 - 1.0) * T + c0 * that;
  return 2.0 * std::exp((2.0 / kappa) * (std::abs(xhat) - mstar));
}

double log_cosh2(double x) {  // log cosh(x/2)
  double ax = std::abs(x);
  return 0.5 * ax + std::log1p(std::exp(-ax)) - std::log(2.0);
}

// Shared-noise Feynman-Kac path engine.  All probe states advance with the
// same Brownian increments (stream = seed.stream_id + path index); per_path
// receives exp(sigma * integral) for every probe.
template <class PerPath>
void run_fk(double kappa, double sigma, double tau, double that, double dt,
            double T, long n_paths, const std::vector<double>& starts,
            RngSeed seed, PerPath&& per_path) {
  const std::size_t P = starts.size();
  std::vector<double> X(P), I(P), vals(P);
  const std::size_t nsteps = std::size_t(std::llround(T / dt));
  const double sk = std::sqrt(kappa * dt);
  const double Edt = std::exp(-2.0 * dt);
  const double E0 = std::exp(-2.0 * that);
  for (long i = 0; i < n_paths; ++i) {
    CounterRng rng({seed.seed, seed.stream_id + std::uint64_t(i)});
    for (std::size_t p = 0; p < P; ++p) {
      X[p] = starts[p];
      I[p] = 0.0;
    }
    double E = E0;
    for (std::size_t k = 0; k < nsteps; ++k) {
      const double dz = sk * rng.normal(k);
      const double half = k == 0 ? 0.5 : 1.0;  // trapezoid in s
      for (std::size_t p = 0; p < P; ++p) {
        const double x = X[p];
        const double ax = std::abs(x);
        const double a = ax < 700.0 ? std::exp(-ax) : 0.0;
        I[p] += half * sf::ha_rescaled_iq_prime_from_e(E, x, a);
        const double th = (x >= 0.0 ? 1.0 : -1.0) * (1.0 - a) / (1.0 + a);
        X[p] = x + tau * th * dt + dz;
      }
      E *= Edt;
    }
    for (std::size_t p = 0; p < P; ++p) {
      const double ax = std::abs(X[p]);
      const double a = ax < 700.0 ? std::exp(-ax) : 0.0;
      I[p] += 0.5 * sf::ha_rescaled_iq_prime_from_e(E, X[p], a);
      vals[p] = std::exp(sigma * dt * I[p]);
    }
    per_path(vals.data());
  }
}

}  // namespace

double FkParams::tau() const {
  return kappa / 4.0 - std::sqrt(kappa * kappa / 16.0 + kappa * sigma);
}

void FkParams::validate() const {
  if (!(kappa > 0)) throw std::invalid_argument("FkParams: kappa must be > 0");
  if (sigma < 0.0 || sigma >= 4.0 / kappa)
    throw std::invalid_argument("FkParams: sigma must lie in [0, 4/kappa)");
  if (n_paths < 2) throw std::invalid_argument("FkParams: n_paths too small");
  if (!(dt > 0) || !(h_x > 0) || m_trunc < 0)
    throw std::invalid_argument("FkParams: bad dt / h_x / m_trunc");
}

FkParams FkParams::reversibility(double kappa, double s) {
  FkParams p;
  p.kappa = kappa;
  p.sigma = 4.0 / kappa - 1.0;
  p.s = s;
  return p;
}

FkParams FkParams::decomposition(double kappa) {
  FkParams p;
  p.kappa = kappa;
  p.sigma = 0.5 + 1.0 / kappa;
  p.s = 0.0;
  return p;
}

double psi_q_upper_bound(double kappa, double sigma, double t, double x) {
  if (sigma == 0.0) return 1.0;
  double c0 = c0_of(kappa, sigma);
  double alpha = 4.0 / (1.0 - std::exp(-2.0 * std::min(t, 30.0)));
  double first =
      std::exp(sigma * alpha * std::exp((c0 - 2.0) * t) / (2.0 - c0));
  double geom = std::exp(sigma / (2.0 * (c0 - 1.0)) - 2.0 / kappa);
  double second = 2.0 *
                  std::exp((2.0 / kappa) * (std::abs(x) - std::floor(c0 * t)) +
                           sigma / (2.0 * (c0 - 1.0))) /
                  (1.0 - geom);
  return first * (1.0 + second);
}

McEstimate psi_q_mc(const FkParams& params, RngSeed seed, double t, double x) {
  params.validate();
  if (!(t > 0)) throw std::invalid_argument("psi_q_mc: t must be positive");
  const double tau = params.tau();
  double eps = 0.1 * std::max(1.0 / std::sqrt(double(params.n_paths)), 1e-4);
  double T = params.T_max > 0
                 ? params.T_max
                 : auto_T_max(params.kappa, params.sigma, t, eps);
  double tail = tail_integral_bound(params.kappa, params.sigma, t, T);
  double s1 = 0, s2 = 0;
  std::vector<double> starts{x};
  run_fk(params.kappa, params.sigma, tau, t, params.dt, T, params.n_paths,
         starts, seed, [&](const double* v) {
           s1 += v[0];
           s2 += v[0] * v[0];
         });
  McEstimate est;
  est.n_paths = params.n_paths;
  est.value = s1 / double(params.n_paths);
  double var = std::max(0.0, s2 / params.n_paths - est.value * est.value);
  est.stderr_ = std::sqrt(var / params.n_paths);
  est.bias_bound =
      est.value * ((std::exp(tail) - 1.0) +
                   cone_exit_bound(params.kappa, params.sigma, t, T, x));
  if (params.T_max > 0) {
    double target = 0.1 * std::max(est.stderr_, est.value * 1e-6);
    if (est.bias_bound > target && est.stderr_ > 0)
      throw BiasExceedsToleranceError(
          "psi_q_mc: tail bound at T_max exceeds 0.1 x target stderr");
  }
  return est;
}

namespace {

// Lambda<s> at one modulus t and many angles xs.
//
// Psi<s>(t,x) = A(t) sum_m w_m(x) G_m,  G_m = hPsi_q(that, xhat_m),
// xhat_m = pi (x - 2 pi m)/t.  The weights w_m carry all the fast
// x-dependence and are differentiated analytically; only the smooth
// Monte-Carlo factor G is differenced (common random numbers, step h_x
// in x, i.e. pi h_x / t in the rescaled variable).  Minor period terms
// run with reduced path counts; families are independent, so the
// delta-method moments add.
std::vector<LambdaValue> lambda_s_row(const FkParams& params, RngSeed seed,
                                      double t,
                                      const std::vector<double>& xs) {
  params.validate();
  if (!(t > 0)) throw std::invalid_argument("lambda_s: t must be positive");
  const double kappa = params.kappa, sigma = params.sigma, s = params.s;
  const double tau = params.tau();
  const double that = kPi * kPi / t;
  const double hhat = kPi * params.h_x / t;
  // The tail factor is x-independent to leading order (the cone bound does
  // not see the start point), so it cancels in Lambda = kappa d/dx ln Psi;
  // a Psi-relative tail of 1e-4 keeps the Lambda effect far below stderr.
  const double T = params.T_max > 0
                       ? params.T_max
                       : auto_T_max(kappa, sigma, that, 1e-3);
  const double tail = tail_integral_bound(kappa, sigma, that, T);

  struct Family {
    int node;
    int m;
    double w, wprime;   // weight and its analytic x-derivative
    long n;             // path count for this family
    double xhat;
    // moments of (A - wprime, B - w) per path, centered at the
    // deterministic G = 1 baseline to keep the variances full-precision
    double sA = 0, sB = 0, sAA = 0, sBB = 0, sAB = 0;
  };
  struct Node {
    double x;
    double omitted_rel = 0.0;
    double exit_bound = 0.0;
    std::vector<std::size_t> fams;
  };

  std::vector<Family> fams;
  std::vector<Node> nodes;
  nodes.reserve(xs.size());

  for (double x : xs) {
    Node node;
    node.x = x;
    struct Cand { int m; double w, wp, act, xhat; };
    std::vector<Cand> cands;
    double act_sum = 0.0, w_sum = 0.0;
    for (int m = -params.m_trunc; m <= params.m_trunc; ++m) {
      double y = x - kTwoPi * m;
      double xh = kPi * y / t;
      double w = std::exp((kTwoPi / kappa) * m * s -
                          y * y / (2.0 * kappa * t) +
                          (2.0 * tau / kappa) * log_cosh2(xh));
      double wp = w * (-y / (kappa * t) +
                       (tau * kPi / (kappa * t)) * std::tanh(0.5 * xh));
      double act = w * std::min(psi_q_upper_bound(kappa, sigma, that, xh),
                                1e12);
      cands.push_back({m, w, wp, act, xh});
      act_sum += act;
      w_sum += w;
    }
    double act_kept = 0.0;
    for (const auto& c : cands)
      if (c.act >= 3e-8 * act_sum) act_kept += c.act;
    for (const auto& c : cands) {
      if (c.act >= 3e-8 * act_sum) {
        Family f;
        f.node = int(nodes.size());
        f.m = c.m;
        f.w = c.w;
        f.wprime = c.wp;
        f.xhat = c.xhat;
        // Monte-Carlo noise scales with w (never with the bias-oriented
        // activity), so low-weight terms run with far fewer paths.
        f.n = c.w >= 1e-3 * w_sum ? params.n_paths
                                  : std::max(params.n_paths / 64, 2000L);
        fams.push_back(f);
        node.fams.push_back(fams.size() - 1);
        // exit probability weighted by the family's relative share; the
        // bound saturates at 1 for starts outside the linear-growth cone.
        double share = c.act / act_kept;
        node.exit_bound +=
            share *
            std::min(cone_exit_bound(kappa, sigma, that, T, c.xhat), 1.0);
      } else {
        node.omitted_rel += c.act;
      }
    }
    if (node.fams.empty())
      throw std::runtime_error("lambda_s: no active period terms");
    double kept = 0.0;
    for (auto fi : node.fams) kept += fams[fi].w;  // lower bound on kept mass
    node.omitted_rel /= kept;
    nodes.push_back(std::move(node));
  }

  if (sigma == 0.0) {
    // exp(0 * integral) = 1 for every path: the estimate is deterministic
    // and the centered moments are identically zero.
    for (auto& f : fams) f.n = 1;
  } else {
    // group families by path count so each group shares one engine run
    std::vector<long> ns;
    for (auto& f : fams)
      if (std::find(ns.begin(), ns.end(), f.n) == ns.end()) ns.push_back(f.n);
    for (long n : ns) {
      std::vector<std::size_t> idx;
      std::vector<double> starts;
      for (std::size_t i = 0; i < fams.size(); ++i)
        if (fams[i].n == n) {
          idx.push_back(i);
          starts.push_back(fams[i].xhat - hhat);
          starts.push_back(fams[i].xhat);
          starts.push_back(fams[i].xhat + hhat);
        }
      run_fk(kappa, sigma, tau, that, params.dt, T, n, starts, seed,
             [&](const double* v) {
               for (std::size_t q = 0; q < idx.size(); ++q) {
                 Family& f = fams[idx[q]];
                 double gm = v[3 * q], g0 = v[3 * q + 1], gp = v[3 * q + 2];
                 double dA = f.wprime * (g0 - 1.0) +
                             f.w * (kPi / t) * (gp - gm) / (2.0 * hhat);
                 double dB = f.w * (g0 - 1.0);
                 f.sA += dA;
                 f.sB += dB;
                 f.sAA += dA * dA;
                 f.sBB += dB * dB;
                 f.sAB += dA * dB;
               }
             });
    }
  }

  // t-only common factor for the reported Psi
  double afac = std::pow(kPi / t, sigma + 0.5) *
                std::exp(-tau * tau * that / (2.0 * kappa));
  std::vector<LambdaValue> out(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    double Ab = 0, Bb = 0, varA = 0, varB = 0, covAB = 0;
    for (auto fi : nodes[j].fams) {
      const Family& f = fams[fi];
      double n = double(f.n);
      double am = f.sA / n, bm = f.sB / n;
      Ab += f.wprime + am;
      Bb += f.w + bm;
      varA += std::max(0.0, f.sAA / n - am * am) / n;
      varB += std::max(0.0, f.sBB / n - bm * bm) / n;
      covAB += (f.sAB / n - am * bm) / n;
    }
    double hi[1];
    sf::ha_i_real(t, nodes[j].x, 0, hi);
    LambdaValue lv;
    lv.n_paths = params.n_paths;
    double R = Ab / Bb;
    lv.value = kappa * R - hi[0];
    double varR = (varA - 2.0 * R * covAB + R * R * varB) / (Bb * Bb);
    lv.stderr_ = kappa * std::sqrt(std::max(varR, 0.0));
    lv.psi = afac * Bb;
    lv.psi_stderr = afac * std::sqrt(varB);
    lv.bias_rel =
        (std::exp(tail) - 1.0) + nodes[j].omitted_rel + nodes[j].exit_bound;
    out[j] = lv;
  }
  return out;
}

}  // namespace

LambdaValue lambda_s(const FkParams& params, RngSeed seed, double t,
                     double x) {
  return lambda_s_row(params, seed, t, {x})[0];
}

std::vector<LambdaValue> lambda_s_many(const FkParams& params, RngSeed seed,
                                       double t,
                                       const std::vector<double>& xs) {
  return lambda_s_row(params, seed, t, xs);
}

// ---------------------------------------------------------------------------
// Closed-form drifts.

double lambda_closed_k2(double t, double x) {
  double hi[3];
  sf::ha_i_real(t, x, 2, hi);
  return 2.0 * t * hi[2] / (t * hi[1] + 1.0);
}

double lambda_closed_k3(double t, double x) {
  using Cx = Complex;
  Cx z(x, t);
  Cx h[2], hi[2];
  sf::ha_fast(2.0 * t, z, 1, h);
  sf::ha_i_fast(2.0 * t, z, 1, hi);
  Cx g = h[0] - hi[0];
  Cx gp = h[1] - hi[1];
  return 3.0 * (gp / g).real();
}

double lambda_closed_k4(double t, double x) {
  double a[2], b[2];
  sf::ha_i_real(2.0 * t, x - kPi, 1, a);
  sf::ha_i_real(t, x, 1, b);
  return 2.0 * a[0] - b[0];
}

// ---------------------------------------------------------------------------
// Catalog.

namespace {

using Cx = Complex;

struct GJet {
  Cx f{}, fx{}, fxx{}, fxxx{}, ft{}, ftx{};
};

Cx ha_v(double t, Cx z, int o, int dto = 0) {
  return sf::eval_ha(t, z, o, dto).value;
}
Cx hi_v(double t, Cx z, int o, int dto = 0) {
  return sf::eval_ha_i(t, z, o, dto).value;
}

// Gamma_1 = H(2t,z) - H_I(2t,z); Gamma_2 = (H(t/2,z/2) - H(t/2,z/2+pi))/2;
// Gamma_3 = (H(t,z/2) - H_I(t,z/2) - H(t,z/2+pi) + H_I(t,z/2+pi))/2.
GJet jet_gamma_base(int j, double t, Cx z) {
  GJet g;
  if (j == 1) {
    double T = 2.0 * t;
    g.f = ha_v(T, z, 0) - hi_v(T, z, 0);
    g.fx = ha_v(T, z, 1) - hi_v(T, z, 1);
    g.fxx = ha_v(T, z, 2) - hi_v(T, z, 2);
    g.fxxx = ha_v(T, z, 3) - hi_v(T, z, 3);
    g.ft = 2.0 * (ha_v(T, z, 0, 1) - hi_v(T, z, 0, 1));
    g.ftx = 2.0 * (ha_v(T, z, 1, 1) - hi_v(T, z, 1, 1));
  } else if (j == 2) {
    double T = 0.5 * t;
    Cx a = 0.5 * z, b = 0.5 * z + kPi;
    g.f = 0.5 * (ha_v(T, a, 0) - ha_v(T, b, 0));
    g.fx = 0.25 * (ha_v(T, a, 1) - ha_v(T, b, 1));
    g.fxx = 0.125 * (ha_v(T, a, 2) - ha_v(T, b, 2));
    g.fxxx = 0.0625 * (ha_v(T, a, 3) - ha_v(T, b, 3));
    g.ft = 0.25 * (ha_v(T, a, 0, 1) - ha_v(T, b, 0, 1));
    g.ftx = 0.125 * (ha_v(T, a, 1, 1) - ha_v(T, b, 1, 1));
  } else {
    Cx a = 0.5 * z, b = 0.5 * z + kPi;
    auto d = [&](int o, int dto) {
      return ha_v(t, a, o, dto) - hi_v(t, a, o, dto) - ha_v(t, b, o, dto) +
             hi_v(t, b, o, dto);
    };
    g.f = 0.5 * d(0, 0);
    g.fx = 0.25 * d(1, 0);
    g.fxx = 0.125 * d(2, 0);
    g.fxxx = 0.0625 * d(3, 0);
    g.ft = 0.5 * d(0, 1);
    g.ftx = 0.25 * d(1, 1);
  }
  return g;
}

// Gamma_{j+3}(t,x) = Gamma_j(t, x + i t): the t-derivative picks up the
// chain term i * Gamma_j'.
GJet jet_gamma_shifted(int j, double t, double x) {
  GJet b = jet_gamma_base(j, t, Cx(x, t));
  GJet g;
  g.f = b.f;
  g.fx = b.fx;
  g.fxx = b.fxx;
  g.fxxx = b.fxxx;
  g.ft = b.ft + Cx(0, 1) * b.fx;
  g.ftx = b.ftx + Cx(0, 1) * b.fxx;
  return g;
}

// Lambda = kappa f'/f from a Gamma jet.
GJet jet_ratio_drift(const GJet& g, double kappa) {
  GJet o;
  Cx r1 = g.fx / g.f, r2 = g.fxx / g.f, r3 = g.fxxx / g.f;
  o.f = kappa * r1;
  o.fx = kappa * (r2 - r1 * r1);
  o.fxx = kappa * (r3 - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1);
  o.ft = kappa * (g.ftx / g.f - r1 * g.ft / g.f);
  return o;
}

GJet jet_k2_gamma_family(double t, double x) {  // Gamma = t H_I' + 1
  Cx z(x, 0);
  GJet g;
  g.f = t * hi_v(t, z, 1) + 1.0;
  g.fx = t * hi_v(t, z, 2);
  g.fxx = t * hi_v(t, z, 3);
  g.fxxx = t * hi_v(t, z, 4);
  g.ft = hi_v(t, z, 1) + t * hi_v(t, z, 1, 1);
  g.ftx = hi_v(t, z, 2) + t * hi_v(t, z, 2, 1);
  return g;
}

EntryJet jet_of(const CatalogEntry& e, double t, double x) {
  Cx z(x, 0);
  EntryJet j{};
  auto from_gjet = [&](const GJet& g) {
    j.f = g.f;
    j.fx = g.fx;
    j.fxx = g.fxx;
    j.ft = g.ft;
  };
  const std::string& id = e.id;
  if (id == "k2-lambda") {
    from_gjet(jet_ratio_drift(jet_k2_gamma_family(t, x), 2.0));
  } else if (id == "k3-lambda") {
    from_gjet(jet_ratio_drift(jet_gamma_shifted(1, t, x), 3.0));
  } else if (id == "k4-lambda") {
    double a0[3], b0[3];
    sf::ha_i_real(2.0 * t, x - kPi, 2, a0);
    sf::ha_i_real(t, x, 2, b0);
    j.f = 2.0 * a0[0] - b0[0];
    j.fx = 2.0 * a0[1] - b0[1];
    j.fxx = 2.0 * a0[2] - b0[2];
    j.ft = 4.0 * hi_v(2.0 * t, Cx(x - kPi, 0), 0, 1) - hi_v(t, z, 0, 1);
  } else if (id == "k2-gamma") {
    from_gjet(jet_k2_gamma_family(t, x));
  } else if (id == "k2-xi1") {
    j.f = hi_v(t, z, 0);
    j.fx = hi_v(t, z, 1);
    j.fxx = hi_v(t, z, 2);
    j.ft = hi_v(t, z, 0, 1);
  } else if (id == "k2-xi2") {
    j.f = ha_v(t, z, 0);
    j.fx = ha_v(t, z, 1);
    j.fxx = ha_v(t, z, 2);
    j.ft = ha_v(t, z, 0, 1);
  } else if (id == "k2-xi3") {
    j.f = t * hi_v(t, z, 0) + x;
    j.fx = t * hi_v(t, z, 1) + 1.0;
    j.fxx = t * hi_v(t, z, 2);
    j.ft = hi_v(t, z, 0) + t * hi_v(t, z, 0, 1);
  } else if (id == "k2-xi4") {
    j.f = t * ha_v(t, z, 0) + x;
    j.fx = t * ha_v(t, z, 1) + 1.0;
    j.fxx = t * ha_v(t, z, 2);
    j.ft = ha_v(t, z, 0) + t * ha_v(t, z, 0, 1);
  } else if (id.rfind("k2-gamma", 0) == 0 && id.size() == 9) {
    from_gjet(jet_gamma_base(id[8] - '0', t, z));
  } else if (id.rfind("k3-gamma", 0) == 0) {
    int n = id[8] - '0';
    from_gjet(n <= 3 ? jet_gamma_base(n, t, z)
                     : jet_gamma_shifted(n - 3, t, x));
  } else if (id == "k0-G" || id == "k16o3-F") {
    double sc = id[1] == '0' ? 1.0 : -1.0 / 3.0;
    j.f = sc * (ha_v(t, z, 0) - 2.0 * ha_v(t, 0.5 * z, 0));
    j.fx = sc * (ha_v(t, z, 1) - ha_v(t, 0.5 * z, 1));
    j.fxx = sc * (ha_v(t, z, 2) - 0.5 * ha_v(t, 0.5 * z, 2));
    j.ft = sc * (ha_v(t, z, 0, 1) - 2.0 * ha_v(t, 0.5 * z, 0, 1));
  } else if (id == "k0-GI" || id == "k16o3-FI") {
    // G_I = H(t,z) - 2 H_I(t, z/2): the factor 2 mirrors G = H - 2 H_2 and
    // is what the residue bookkeeping (-6 at the shared poles) requires.
    double sc = id[1] == '0' ? 1.0 : -1.0 / 3.0;
    j.f = sc * (ha_v(t, z, 0) - 2.0 * hi_v(t, 0.5 * z, 0));
    j.fx = sc * (ha_v(t, z, 1) - hi_v(t, 0.5 * z, 1));
    j.fxx = sc * (ha_v(t, z, 2) - 0.5 * hi_v(t, 0.5 * z, 2));
    j.ft = sc * (ha_v(t, z, 0, 1) - 2.0 * hi_v(t, 0.5 * z, 0, 1));
  } else if (id == "k4-heat-gauss") {
    double y = x - e.param_c;
    double v = std::exp(-y * y / (8.0 * t)) / std::sqrt(8.0 * kPi * t);
    j.f = v;
    j.fx = -y / (4.0 * t) * v;
    j.fxx = (-1.0 / (4.0 * t) + y * y / (16.0 * t * t)) * v;
    j.ft = (-0.5 / t + y * y / (8.0 * t * t)) * v;
  } else if (id == "k4-heat-exp") {
    double c = e.param_c;
    double v = std::exp(2.0 * c * c * t + c * x);
    j.f = v;
    j.fx = c * v;
    j.fxx = c * c * v;
    j.ft = 2.0 * c * c * v;
  } else if (id == "k4-heat-sin") {
    double y = 0.5 * (x - e.param_c);
    double em = std::exp(-0.5 * t);
    j.f = em * std::sin(y);
    j.fx = 0.5 * em * std::cos(y);
    j.fxx = -0.25 * em * std::sin(y);
    j.ft = -0.5 * em * std::sin(y);
  } else if (id == "k4-heat-theta" || id == "k4-heat-thetaI") {
    auto which = id.back() == 'I' ? sf::Theta::ThetaI : sf::Theta::Theta;
    Cx y(x - e.param_c, 0);
    j.f = sf::eval_theta(2.0 * t, y, which, 0).value;
    j.fx = sf::eval_theta(2.0 * t, y, which, 1).value;
    j.fxx = sf::eval_theta(2.0 * t, y, which, 2).value;
    j.ft = 2.0 * sf::eval_theta(2.0 * t, y, which, 0, 1).value;
  } else {
    throw std::invalid_argument("unknown catalog entry: " + id);
  }
  return j;
}

// x-points (mod period) the residual grid must avoid (poles and zeros).
std::vector<double> bad_points(const CatalogEntry& e) {
  const std::string& id = e.id;
  if (id == "k2-xi2" || id == "k2-xi4" || id == "k2-gamma1" ||
      id == "k3-gamma1" || id == "k3-lambda")
    return {0.0, kTwoPi};
  if (id == "k2-gamma2" || id == "k2-gamma3" || id == "k3-gamma2" ||
      id == "k3-gamma3" || id.rfind("k0-", 0) == 0 ||
      id.rfind("k16o3-", 0) == 0)
    return {0.0, kTwoPi, 2.0 * kTwoPi};
  if (id == "k3-gamma5" || id == "k3-gamma6")
    return {0.0, kTwoPi};  // zeros of the anti-periodic entries
  if (id == "k4-heat-theta") return {e.param_c, e.param_c + kTwoPi};
  return {};  // H_I-based entries are pole-free on the real line
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> v;
    auto add = [&](std::string id, double k, Pde p, bool hi, double cg,
                   double period, double c = 0.0) {
      CatalogEntry e;
      e.id = std::move(id);
      e.kappa = k;
      e.pde = p;
      e.uses_hi = hi;
      e.c_gamma = cg;
      e.period = period;
      e.param_c = c;
      v.push_back(e);
    };
    add("k2-lambda", 2.0, Pde::CrossingLambda, true, 0, kTwoPi);
    add("k3-lambda", 3.0, Pde::CrossingLambda, true, 0, kTwoPi);
    add("k4-lambda", 4.0, Pde::CrossingLambda, true, 0, kTwoPi);
    add("k2-gamma", 2.0, Pde::GammaCrossing, true, 1.0, kTwoPi);
    add("k2-xi1", 2.0, Pde::XiEq, true, 0, kTwoPi);
    add("k2-xi2", 2.0, Pde::XiEq, false, 0, kTwoPi);
    add("k2-xi3", 2.0, Pde::XiEq, true, 0, kTwoPi);
    add("k2-xi4", 2.0, Pde::XiEq, false, 0, kTwoPi);
    add("k2-gamma1", 2.0, Pde::XiWithC, false, 0, kTwoPi);
    add("k2-gamma2", 2.0, Pde::XiWithC, false, 0, 2 * kTwoPi);
    add("k2-gamma3", 2.0, Pde::XiWithC, false, 0, 2 * kTwoPi);
    for (int n = 1; n <= 6; ++n)
      add("k3-gamma" + std::to_string(n), 3.0, Pde::GammaWithC, n > 3, 0,
          (n == 1 || n == 4) ? kTwoPi : 2 * kTwoPi);
    add("k0-G", 0.0, Pde::ChordalLambda, false, 0, 2 * kTwoPi);
    add("k0-GI", 0.0, Pde::ChordalLambda, false, 0, 2 * kTwoPi);
    add("k16o3-F", 16.0 / 3.0, Pde::ChordalLambda, false, 0, 2 * kTwoPi);
    add("k16o3-FI", 16.0 / 3.0, Pde::ChordalLambda, false, 0, 2 * kTwoPi);
    add("k4-heat-gauss", 4.0, Pde::PsiHeat, true, 0, kTwoPi, 0.7);
    add("k4-heat-exp", 4.0, Pde::PsiHeat, true, 0, kTwoPi, 0.7);
    add("k4-heat-sin", 4.0, Pde::PsiHeat, true, 0, kTwoPi, 0.7);
    add("k4-heat-theta", 4.0, Pde::PsiHeat, true, 0, kTwoPi, 0.7);
    add("k4-heat-thetaI", 4.0, Pde::PsiHeat, true, 0, kTwoPi, 0.7);
    return v;
  }();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& id) {
  for (const auto& e : catalog())
    if (e.id == id) return e;
  throw std::invalid_argument("unknown catalog entry: " + id);
}

Complex catalog_eval(const CatalogEntry& entry, double t, double x) {
  return jet_of(entry, t, x).f;
}

EntryJet catalog_jet(const CatalogEntry& entry, double t, double x) {
  return jet_of(entry, t, x);
}

ResidualReport pde_residual(const CatalogEntry& e,
                            const std::vector<double>& ts, int nx) {
  ResidualReport rep;
  rep.entry_id = e.id;
  rep.constancy_form = e.pde == Pde::GammaWithC || e.pde == Pde::XiWithC;
  const auto bad = bad_points(e);
  const double margin = 0.3;
  for (double t : ts) {
    std::vector<double> xs;
    for (int i = 0; i < nx; ++i) {
      double x = e.period * (i + 0.5) / nx;
      bool ok = true;
      for (double b : bad)
        if (std::abs(std::remainder(x - b, e.period)) < margin) ok = false;
      if (ok) xs.push_back(x);
    }
    if (rep.constancy_form) {
      std::vector<Complex> ratio;  // J/f must be constant in x
      for (double x : xs) {
        EntryJet j = jet_of(e, t, x);
        Cx z(x, 0);
        Complex K0 = e.uses_hi ? hi_v(t, z, 0) : ha_v(t, z, 0);
        Complex K1 = e.uses_hi ? hi_v(t, z, 1) : ha_v(t, z, 1);
        Complex J;
        if (e.pde == Pde::GammaWithC)
          J = j.ft - 0.5 * e.kappa * j.fxx - K0 * j.fx - 0.5 * K1 * j.f;
        else
          J = j.ft - j.fxx - j.fx * K0;
        ratio.push_back(J / j.f);
      }
      Complex mn = 0.0;
      for (auto r : ratio) mn += r;
      mn /= double(ratio.size());
      for (auto r : ratio)
        rep.max_residual = std::max(rep.max_residual, std::abs(r - mn));
      rep.n_points += int(ratio.size());
    } else {
      for (double x : xs) {
        EntryJet j = jet_of(e, t, x);
        Complex r;
        Cx z(x, 0);
        switch (e.pde) {
          case Pde::PsiHeat:
            r = j.ft - 2.0 * j.fxx;
            break;
          case Pde::XiEq: {
            Complex K0 = e.uses_hi ? hi_v(t, z, 0) : ha_v(t, z, 0);
            r = j.ft - j.fxx - j.fx * K0;
            break;
          }
          case Pde::GammaCrossing: {
            Complex K0 = hi_v(t, z, 0), K1 = hi_v(t, z, 1);
            r = j.ft - 0.5 * e.kappa * j.fxx - K0 * j.fx -
                e.c_gamma * K1 * j.f;
            break;
          }
          case Pde::CrossingLambda:
          case Pde::ChordalLambda: {
            bool hi = e.pde == Pde::CrossingLambda;
            Complex K0 = hi ? hi_v(t, z, 0) : ha_v(t, z, 0);
            Complex K1 = hi ? hi_v(t, z, 1) : ha_v(t, z, 1);
            Complex K2 = hi ? hi_v(t, z, 2) : ha_v(t, z, 2);
            r = j.ft - 0.5 * e.kappa * j.fxx - (3.0 - 0.5 * e.kappa) * K2 -
                j.f * K1 - K0 * j.fx - j.f * j.fx;
            break;
          }
          default:
            r = 0.0;
        }
        rep.max_residual = std::max(rep.max_residual, std::abs(r));
        ++rep.n_points;
      }
    }
  }
  return rep;
}

McResidualReport mc_pde_residual(
    const FkParams& params, RngSeed seed,
    const std::vector<std::pair<double, double>>& points, int replicates) {
  McResidualReport rep;
  const double hx = 0.05, ht = 0.02;
  for (auto [t, x] : points) {
    std::vector<double> rs;
    for (int r = 0; r < replicates; ++r) {
      RngSeed sr{seed.seed + std::uint64_t(r) * 0x9e37ULL, seed.stream_id};
      auto row = lambda_s_row(params, sr, t, {x - hx, x, x + hx});
      auto rowp = lambda_s_row(params, sr, t + ht, {x});
      auto rowm = lambda_s_row(params, sr, t - ht, {x});
      double L = row[1].value;
      double Lx = (row[2].value - row[0].value) / (2 * hx);
      double Lxx =
          (row[2].value - 2 * row[1].value + row[0].value) / (hx * hx);
      double Lt = (rowp[0].value - rowm[0].value) / (2 * ht);
      double hi[3];
      sf::ha_i_real(t, x, 2, hi);
      double resid = Lt - (0.5 * params.kappa * Lxx +
                           (3.0 - 0.5 * params.kappa) * hi[2] + L * hi[1] +
                           hi[0] * Lx + L * Lx);
      rs.push_back(resid);
    }
    double m = stats::mean(rs);
    double se = std::sqrt(stats::sample_variance(rs) / rs.size());
    double zscore = se > 0 ? m / se : 0.0;
    rep.z_scores.push_back(zscore);
    rep.chi2 += zscore * zscore;
  }
  rep.p_value = stats::gammq(0.5 * rep.z_scores.size(), 0.5 * rep.chi2);
  return rep;
}

// ---------------------------------------------------------------------------
// DriftFunction.

struct DriftFunction::Surface {
  double p = 0.0, t_floor = 0.0;
  int nt = 0, nx = 0;
  std::vector<double> ts;
  std::vector<double> vals, errs;  // [it * nx + ix]
};

DriftFunction DriftFunction::closed_form(const std::string& id) {
  DriftFunction d;
  d.closed_ = true;
  d.id_ = id;
  if (id == "k2")
    d.fn_ = lambda_closed_k2;
  else if (id == "k3")
    d.fn_ = lambda_closed_k3;
  else if (id == "k4")
    d.fn_ = lambda_closed_k4;
  else
    throw std::invalid_argument("closed_form drift: unknown id " + id);
  return d;
}

DriftFunction DriftFunction::fk_surface(const FkParams& params, RngSeed seed,
                                        double p, double t_floor, int nt,
                                        int nx) {
  if (!(t_floor > 0) || !(p > t_floor))
    throw std::invalid_argument("fk_surface: need 0 < t_floor < p");
  DriftFunction d;
  d.closed_ = false;
  d.id_ = "fk";
  d.params_ = params;
  d.seed_ = seed;
  auto surf = std::make_shared<Surface>();
  surf->p = p;
  surf->t_floor = t_floor;
  surf->nt = nt;
  surf->nx = nx;
  surf->vals.resize(std::size_t(nt) * nx);
  surf->errs.resize(std::size_t(nt) * nx);
  for (int it = 0; it < nt; ++it) {
    double f = nt == 1 ? 0.0 : double(it) / (nt - 1);
    double t = t_floor * std::pow(p / t_floor, f);
    surf->ts.push_back(t);
    std::vector<double> xs(nx);
    for (int ix = 0; ix < nx; ++ix) xs[ix] = kTwoPi * ix / nx;
    RngSeed srow{seed.seed, seed.stream_id + std::uint64_t(it) * 1000003ULL};
    auto row = lambda_s_row(params, srow, t, xs);
    for (int ix = 0; ix < nx; ++ix) {
      surf->vals[std::size_t(it) * nx + ix] = row[ix].value;
      surf->errs[std::size_t(it) * nx + ix] = row[ix].stderr_;
    }
  }
  d.surf_ = surf;
  return d;
}

std::pair<double, double> DriftFunction::eval(double t, double x) const {
  if (closed_) return {fn_(t, x), 0.0};
  const Surface& s = *surf_;
  double tc = std::clamp(t, s.ts.front(), s.ts.back());
  double u =
      std::log(tc / s.t_floor) / std::log(s.p / s.t_floor) * (s.nt - 1);
  int it = std::min(int(u), s.nt - 2);
  double ft = u - it;
  double v = x / kTwoPi * s.nx;
  double fv = v - std::floor(v);
  long ix = long(std::floor(v));
  int i0 = int(((ix % s.nx) + s.nx) % s.nx);
  int i1 = (i0 + 1) % s.nx;
  auto at = [&](int a, int b) { return s.vals[std::size_t(a) * s.nx + b]; };
  auto er = [&](int a, int b) { return s.errs[std::size_t(a) * s.nx + b]; };
  double val = (1 - ft) * ((1 - fv) * at(it, i0) + fv * at(it, i1)) +
               ft * ((1 - fv) * at(it + 1, i0) + fv * at(it + 1, i1));
  double err = (1 - ft) * ((1 - fv) * er(it, i0) + fv * er(it, i1)) +
               ft * ((1 - fv) * er(it + 1, i0) + fv * er(it + 1, i1));
  return {val, err};
}

double DriftFunction::probe_check(RngSeed seed, int n_probes,
                                  double abs_floor) const {
  if (closed_) return 0.0;
  const Surface& s = *surf_;
  CounterRng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    double t = s.t_floor * std::pow(s.p / s.t_floor, rng.uniform(2 * i));
    double x = kTwoPi * rng.uniform(2 * i + 1);
    auto interp = eval(t, x);
    RngSeed sp{seed_.seed ^ 0xabcdULL, seed_.stream_id + 7777777ULL};
    auto direct = lambda_s(params_, sp, t, x);
    double denom = 3.0 * (direct.stderr_ + interp.second) + abs_floor;
    worst = std::max(worst, std::abs(interp.first - direct.value) / denom);
  }
  return worst;
}

}  // namespace slelab::drift
