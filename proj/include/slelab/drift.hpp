#pragma once

// The crossing annulus drift Lambda<s> built from the Feynman-Kac
// representation, the closed-form solution catalog, and PDE residual checks.
//
// Pipeline (rescaled coordinates carry hats):
//   hPsi_q(t,x)  = E exp(sigma int_0^inf hH'_{I,q}(t+s, X_x(s)) ds),
//                  dX = sqrt(kappa) dB + tau tanh(X/2) dt
//   hPsi_0       = hPsi_q * hPsi_inf,   hPsi_inf = e^{-tau^2 t/(2 kappa)}
//                  cosh(x/2)^{2 tau/kappa}
//   Psi_0(t,x)   = e^{-x^2/(2 kappa t)} (pi/t)^{sigma+1/2} hPsi_0(pi^2/t, pi x/t)
//   Psi<s>       = sum_m e^{(2 pi/kappa) m s} Psi_0(t, x - 2 pi m)
//   Lambda<s>    = kappa Psi<s>'/Psi<s> - H_I,  Psi' by common-random-number
//                  central differences in x.

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slelab/stochastic.hpp"

namespace slelab::drift {

using Complex = std::complex<double>;

struct FkParams {
  double kappa = 2.0;
  double sigma = 1.0;     // in [0, 4/kappa)
  double s = 0.0;         // average shift of Lambda<s>
  long n_paths = 100000;
  double T_max = 0.0;     // 0: auto from the certified tail rule
  double dt = 1e-3;       // Euler-Maruyama step
  int m_trunc = 8;        // period-sum truncation |m| <= m_trunc
  double h_x = 1e-3;      // CRN central-difference step in x

  double tau() const;     // kappa/4 - sqrt(kappa^2/16 + kappa sigma) <= 0
  void validate() const;
  // Preset sigma = 4/kappa - 1 (reversibility drift family).
  static FkParams reversibility(double kappa, double s = 0.0);
  // Preset sigma = 1/2 + 1/kappa (endpoint-density family, kappa in (0,6)).
  static FkParams decomposition(double kappa);
};

struct BiasExceedsToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  double bias_bound = 0.0;  // certified truncation bias (absolute)
  long n_paths = 0;
};

// hPsi_q at rescaled coordinates (t, x).
McEstimate psi_q_mc(const FkParams& params, stochastic::RngSeed seed, double t,
                    double x);

// Rigorous upper bound on hPsi_q from the linear-growth-cone estimate.
double psi_q_upper_bound(double kappa, double sigma, double t, double x);

struct LambdaValue {
  double value = 0.0;
  double stderr_ = 0.0;
  double psi = 0.0;       // Psi<s>(t, x)
  double psi_stderr = 0.0;
  double bias_rel = 0.0;  // relative certified truncation bias on Psi
  long n_paths = 0;
};

// Lambda<s>(t, x) at annulus coordinates, with the delta-method stderr.
LambdaValue lambda_s(const FkParams& params, stochastic::RngSeed seed,
                     double t, double x);
// Many angles at one modulus, sharing paths (common random numbers across
// the nodes; the per-node stderr is still exact).
std::vector<LambdaValue> lambda_s_many(const FkParams& params,
                                       stochastic::RngSeed seed, double t,
                                       const std::vector<double>& xs);

// ---------------------------------------------------------------------------
// Closed-form catalog.

enum class Pde {
  CrossingLambda,  // d_t L = k/2 L'' + (3-k/2) H_I'' + L H_I' + H_I L' + L L'
  ChordalLambda,   // same with H in place of H_I
  GammaCrossing,   // d_t G = k/2 G'' + H_I G' + c_gamma H_I' G
  PsiHeat,         // d_t P = 2 P''
  XiEq,            // d_t X = X'' + X' K, K = H_I or H (C(t) = 0)
  XiWithC,         // d_t X = X'' + X' K + C(t) X, C free (constancy check)
  GammaWithC,      // d_t G = k/2 G'' + K G' + 1/2 K' G + C(t) G, C free
};

struct CatalogEntry {
  std::string id;
  double kappa = 0.0;
  Pde pde = Pde::PsiHeat;
  bool uses_hi = true;   // kernel K in the PDE: H_I (true) or H (false)
  double c_gamma = 1.0;  // coefficient of K' G in GammaCrossing
  double period = 2.0 * 3.14159265358979323846;
  double param_c = 0.0;  // shift parameter of the kappa=4 heat solutions
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& id);

// Entry value at (t, x); complex because several kappa=3 entries take
// imaginary values on the real line.
Complex catalog_eval(const CatalogEntry& entry, double t, double x);

// Derivative jet of an entry: value, x-derivatives, t-derivative.
struct EntryJet {
  Complex f, fx, fxx;
  Complex ft;
};
EntryJet catalog_jet(const CatalogEntry& entry, double t, double x);

struct ResidualReport {
  std::string entry_id;
  double max_residual = 0.0;
  int n_points = 0;
  bool constancy_form = false;  // GammaWithC: deviation of J/Gamma from mean
};

// Closed-form residual over a pole-avoiding grid; analytic derivatives.
ResidualReport pde_residual(const CatalogEntry& entry,
                            const std::vector<double>& ts, int nx = 24);

// Statistical residual of the MC drift on given points: z-scores from
// seed replicates and a chi-square aggregate.
struct McResidualReport {
  std::vector<double> z_scores;
  double chi2 = 0.0;
  double p_value = 1.0;
};
McResidualReport mc_pde_residual(const FkParams& params,
                                 stochastic::RngSeed seed,
                                 const std::vector<std::pair<double, double>>&
                                     points,
                                 int replicates = 6);

// ---------------------------------------------------------------------------
// Drift functions for the SLE driving SDE.

// Closed forms: kappa=2: 2 t H_I''/(t H_I' + 1); kappa=3: 3 G4'/G4 with
// G4(t,x) = H(2t, x+it) - H_I(2t, x+it); kappa=4: 2 H_I(2t, x-pi) - H_I(t,x).
double lambda_closed_k2(double t, double x);
double lambda_closed_k3(double t, double x);
double lambda_closed_k4(double t, double x);

// Evaluatable drift Lambda(t, x) -> (value, stderr); closed forms have
// stderr 0.  MC-backed drifts interpolate a precomputed surface.
class DriftFunction {
 public:
  static DriftFunction closed_form(const std::string& id);  // "k2","k3","k4"
  // Grid surface on t in [t_floor, p] (log-spaced, nt nodes) x one period
  // (nx nodes), bilinear interpolation, built with the FK pipeline.
  static DriftFunction fk_surface(const FkParams& params,
                                  stochastic::RngSeed seed, double p,
                                  double t_floor, int nt = 20, int nx = 128);

  // (value, stderr) at modulus t and angle x.
  std::pair<double, double> eval(double t, double x) const;
  bool closed() const { return closed_; }
  const std::string& id() const { return id_; }

  // Interpolation check against direct evaluation at n random probes:
  // returns the max of |interp - direct| / (3 stderr_direct + abs_floor).
  double probe_check(stochastic::RngSeed seed, int n_probes = 20,
                     double abs_floor = 1e-3) const;

 private:
  bool closed_ = true;
  std::string id_;
  std::function<double(double, double)> fn_;
  // surface data
  struct Surface;
  std::shared_ptr<Surface> surf_;
  FkParams params_{};
  stochastic::RngSeed seed_{};
};

}  // namespace slelab::drift
