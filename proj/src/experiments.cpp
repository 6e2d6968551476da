#include "slelab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace slelab::stats {
namespace {

double gamma_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gammq(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammq: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cf(a, x);
}

double ks_tail(double lambda) {
  if (lambda < 1e-12) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

TwoSampleReport ks_two_sample(std::vector<double> a, std::vector<double> b,
                              const std::string& observable_name) {
  if (a.empty() || b.empty()) throw EmptyInputError("ks_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  double ne =
      double(a.size()) * double(b.size()) / double(a.size() + b.size());
  double sq = std::sqrt(ne);
  TwoSampleReport rep;
  rep.statistic = d;
  rep.p_value = ks_tail((sq + 0.12 + 0.11 / sq) * d);
  rep.n1 = a.size();
  rep.n2 = b.size();
  rep.observable_name = observable_name;
  return rep;
}

GofReport chi2_gof(const std::vector<double>& counts,
                   const std::vector<double>& expected) {
  if (counts.empty() || counts.size() != expected.size())
    throw EmptyInputError("chi2_gof: empty or mismatched inputs");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (expected[i] <= 0.0)
      throw std::invalid_argument("chi2_gof: nonpositive expected count");
    double d = counts[i] - expected[i];
    stat += d * d / expected[i];
  }
  GofReport rep;
  rep.statistic = stat;
  rep.n_bins = counts.size();
  rep.dof = double(counts.size() - 1);
  rep.p_value = stat == 0.0 ? 1.0 : gammq(0.5 * rep.dof, 0.5 * stat);
  return rep;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw EmptyInputError("mean");
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw EmptyInputError("sample_variance");
  double m = mean(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace slelab::stats

// ===========================================================================
// Experiments.

#include "slelab/experiments.hpp"
#include "slelab/specfun.hpp"

namespace slelab::experiments {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
namespace sf = slelab::specfun;
using loewner::Flow;
using stochastic::CounterRng;

double wrap_pi(double x) { return std::remainder(x, kTwoPi); }

// Crossing of Im beta~ = p/2 for one sample: scans a coarse trace, then
// bisects the bracketing interval.  first = take the first crossing (from
// the outer-circle end) or the last one.
std::optional<double> mid_circle_crossing(const sle::SleSample& s,
                                          bool first) {
  const double p = s.spec.p;
  const double target = 0.5 * p;
  Flow flow = sle::flow_of(s);
  const double tip = s.trace.tip_offset_eps;
  const auto& tr = s.trace;
  std::optional<double> result;
  for (std::size_t i = 1; i < tr.points.size(); ++i) {
    double a = tr.points[i - 1].imag() - target;
    double b = tr.points[i].imag() - target;
    if (a == 0.0) a = -1e-15;
    if ((a < 0) != (b < 0)) {
      double lo = tr.times[i - 1], hi = tr.times[i];
      std::complex<double> plo = tr.points[i - 1], phi = tr.points[i];
      for (int iter = 0; iter < 12 && hi - lo > 1e-5; ++iter) {
        double mid = 0.5 * (lo + hi);
        auto pm = flow.trace_point(mid, tip);
        if ((pm.imag() - target < 0) == (a < 0)) {
          lo = mid;
          plo = pm;
        } else {
          hi = mid;
          phi = pm;
        }
      }
      double fa = std::abs(plo.imag() - target);
      double fb = std::abs(phi.imag() - target);
      double arg = fa + fb > 0
                       ? (plo.real() * fb + phi.real() * fa) / (fa + fb)
                       : plo.real();
      result = arg;  // covering lift, anchored at the chord angle 0
      if (first) return result;
    }
  }
  return result;
}

}  // namespace

std::vector<double> mid_circle_observables(const ExperimentConfig& cfg,
                                           bool last_crossing) {
  std::vector<double> obs;
  obs.reserve(cfg.n_samples);
  const double t_stop = cfg.p - cfg.delta_stop;
  std::vector<double> times;
  const int n_times = 48;
  for (int i = 1; i <= n_times; ++i) times.push_back(t_stop * i / n_times);
  drift::DriftFunction lam = drift::DriftFunction::closed_form(cfg.drift_id);
  for (long i = 0; i < cfg.n_samples; ++i) {
    sle::SleSpec spec;
    spec.kind = sle::Kind::AnnulusMarked;
    spec.kappa = cfg.kappa;
    spec.p = cfg.p;
    spec.dt = cfg.dt;
    spec.t_horizon = t_stop;
    spec.lambda = &lam;
    spec.solver = cfg.solver;
    spec.seed = {cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(i)};
    auto s = sle::sample(spec, times);
    if (s.aborted) continue;
    auto c = mid_circle_crossing(s, !last_crossing);
    if (c) obs.push_back(*c);
  }
  return obs;
}

ReversibilityReport reversibility_experiment(const ExperimentConfig& cfg) {
  ReversibilityReport rep;
  rep.config = cfg;
  ExperimentConfig fwd = cfg;
  rep.forward_obs = mid_circle_observables(fwd, false);
  ExperimentConfig rev = cfg;
  rev.seed.stream_id += 1ULL << 40;  // independent ensemble
  rep.reversed_obs = mid_circle_observables(rev, true);
  rep.n_forward = long(rep.forward_obs.size());
  rep.n_reversed = long(rep.reversed_obs.size());
  if (rep.n_forward < 100 || rep.n_reversed < 100)
    throw InsufficientSamplesError("reversibility: fewer than 100 traces");
  rep.ks = stats::ks_two_sample(rep.forward_obs, rep.reversed_obs,
                                "mid-circle crossing argument");
  return rep;
}

std::vector<double> endpoint_bin_masses(double p, int n_bins) {
  std::vector<double> masses(n_bins);
  double hi_a[1], hi_b[1];
  for (int i = 0; i < n_bins; ++i) {
    double a = kTwoPi * i / n_bins, b = kTwoPi * (i + 1) / n_bins;
    sf::ha_i_real(p, a, 0, hi_a);
    sf::ha_i_real(p, b, 0, hi_b);
    masses[i] = (p * (hi_b[0] - hi_a[0]) + (b - a)) / kTwoPi;
  }
  return masses;
}

EndpointReport endpoint_decomposition_experiment(const ExperimentConfig& cfg,
                                                 int n_bins) {
  if (cfg.n_samples <= 0)
    throw InsufficientSamplesError("endpoint: no samples requested");
  EndpointReport rep;
  rep.config = cfg;
  const double t_stop = cfg.p - cfg.delta_stop;
  for (long i = 0; i < cfg.n_samples; ++i) {
    sle::SleSpec spec;
    spec.kind = sle::Kind::AnnulusPlain;
    spec.kappa = cfg.kappa;
    spec.p = cfg.p;
    spec.dt = cfg.dt;
    spec.t_horizon = t_stop;
    spec.solver = cfg.solver;
    spec.seed = {cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(i)};
    auto s = sle::sample(spec, {t_stop});
    try {
      auto ep = sle::endpoint(s, sle::EndpointTarget::InnerCircle);
      double arg = std::arg(ep.point);
      if (arg < 0) arg += kTwoPi;
      rep.endpoint_args.push_back(arg);
    } catch (const sle::NotConvergedError&) {
      ++rep.n_aborted;
    }
  }
  rep.n_used = long(rep.endpoint_args.size());
  if (rep.n_used < 100)
    throw InsufficientSamplesError("endpoint: fewer than 100 usable traces");
  rep.bin_masses = endpoint_bin_masses(cfg.p, n_bins);
  std::vector<double> counts(n_bins, 0.0), expected(n_bins);
  for (double a : rep.endpoint_args)
    counts[std::min(int(a / kTwoPi * n_bins), n_bins - 1)] += 1.0;
  for (int i = 0; i < n_bins; ++i)
    expected[i] = rep.bin_masses[i] * double(rep.n_used);
  rep.chi2 = stats::chi2_gof(counts, expected);
  return rep;
}

MartingaleReport martingale_unity_experiment(
    const ExperimentConfig& cfg, int n_nodes,
    std::function<double(double, double)> gamma) {
  if (cfg.n_samples <= 0)
    throw InsufficientSamplesError("martingale: no samples requested");
  if (!gamma)
    gamma = [](double tau, double x) {
      double hi[2];
      sf::ha_i_real(tau, x, 1, hi);
      return tau * hi[1] + 1.0;
    };
  MartingaleReport rep;
  rep.config = cfg;
  const double p = cfg.p;
  const double t_end = 0.5 * p;
  const double dt = cfg.dt;
  const std::size_t nsteps = std::size_t(std::ceil(t_end / dt));
  const double sk = std::sqrt(cfg.kappa * dt);

  // t = 0 node average is deterministic: (1/n) sum Gamma(p, x_j)
  double avg0 = 0.0;
  std::vector<double> nodes(n_nodes);
  for (int j = 0; j < n_nodes; ++j) {
    nodes[j] = kTwoPi * j / n_nodes;
    avg0 += gamma(p, nodes[j]);
  }
  avg0 /= n_nodes;
  rep.t0_average = avg0;

  std::vector<double> Ms, Ds;
  std::vector<double> q(n_nodes), Y(n_nodes);
  double hi[2];
  for (long i = 0; i < cfg.n_samples; ++i) {
    CounterRng rng({cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(i)});
    double xi = 0.0;
    for (int j = 0; j < n_nodes; ++j) {
      q[j] = nodes[j];
      Y[j] = 0.0;
    }
    for (std::size_t k = 0; k < nsteps; ++k) {
      double tau = p - double(k) * dt;
      for (int j = 0; j < n_nodes; ++j) {
        sf::ha_i_real(tau, q[j] - xi, 1, hi);
        q[j] += hi[0] * dt;
        Y[j] += hi[1] * dt;
      }
      xi += sk * rng.normal(k);
    }
    double m_avg = 0.0;
    double tau_end = p - double(nsteps) * dt;
    for (int j = 0; j < n_nodes; ++j)
      m_avg += gamma(tau_end, q[j] - xi) * std::exp(Y[j]);
    m_avg /= n_nodes;
    Ms.push_back(m_avg);
    Ds.push_back(m_avg - avg0);
  }
  rep.n_samples = long(Ms.size());
  rep.mean = stats::mean(Ms);
  rep.stderr_ = std::sqrt(stats::sample_variance(Ms) / double(Ms.size()));
  rep.drift_mean = stats::mean(Ds);
  rep.drift_stderr =
      std::sqrt(stats::sample_variance(Ds) / double(Ds.size()));
  return rep;
}

}  // namespace slelab::experiments
