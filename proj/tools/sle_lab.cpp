// sle-lab: command-line entry point wiring configs, seeds, and output files
// to the library's checkable surfaces.
//
// Exit codes: 0 all enabled checks pass; 1 check failure; 2 config error;
// 3 runtime error.

#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slelab/drift.hpp"
#include "slelab/experiments.hpp"
#include "slelab/loewner.hpp"
#include "slelab/sle.hpp"
#include "slelab/specfun.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace slelab;

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int max_threads() {
  if (const char* env = std::getenv("SLE_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

struct Manifest {
  std::string subcommand;
  json params;
  std::uint64_t seed = 0, stream = 0;
  fs::path out_dir;
  std::chrono::steady_clock::time_point t0 =
      std::chrono::steady_clock::now();

  void write() const {
    json m;
    m["subcommand"] = subcommand;
    m["params"] = params;
    m["seed"] = seed;
    m["stream"] = stream;
    m["version"] = "sle-lab 1.0";
    m["threads"] = max_threads();
    m["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ofstream f(out_dir / "manifest.json");
    f << m.dump(2) << "\n";
  }
};

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create out dir " + p.string());
}

// ---------------------------------------------------------------------------

int cmd_specfun_check(const fs::path& out_dir) {
  ensure_dir(out_dir);
  std::ofstream csv(out_dir / "specfun_check.csv");
  csv << "t,re_z,im_z,kernel,order,value_re,value_im,bound,pass\n";
  bool all_pass = true;
  auto row = [&](double t, std::complex<double> z, const char* kernel,
                 int order, std::complex<double> v, double bound, bool pass) {
    csv << fmt17(t) << ',' << fmt17(z.real()) << ',' << fmt17(z.imag()) << ','
        << kernel << ',' << order << ',' << fmt17(v.real()) << ','
        << fmt17(v.imag()) << ',' << fmt17(bound) << ',' << (pass ? 1 : 0)
        << "\n";
    all_pass = all_pass && pass;
  };

  // identity H = 2 Theta'/Theta, H_I = 2 Theta_I'/Theta_I
  for (double t : {0.8, 1.5, 3.0}) {
    for (double x = 0.4; x < 6.0; x += 0.7) {
      std::complex<double> z(x, 0.2);
      auto h = specfun::eval_ha(t, z).value;
      auto th0 = specfun::eval_theta(t, z, specfun::Theta::Theta, 0).value;
      auto th1 = specfun::eval_theta(t, z, specfun::Theta::Theta, 1).value;
      bool ok = std::abs(h - 2.0 * th1 / th0) < 1e-9;
      row(t, z, "H_vs_theta", 0, h, 1e-9, ok);
      auto hi = specfun::eval_ha_i(t, z).value;
      auto ti0 = specfun::eval_theta(t, z, specfun::Theta::ThetaI, 0).value;
      auto ti1 = specfun::eval_theta(t, z, specfun::Theta::ThetaI, 1).value;
      ok = std::abs(hi - 2.0 * ti1 / ti0) < 1e-9;
      row(t, z, "HI_vs_thetaI", 0, hi, 1e-9, ok);
    }
  }
  // estimation lemma bounds
  for (double imz : {0.0, 0.5}) {
    for (int h = 1; h <= 3; ++h) {
      for (double d = 2.0 + h; d <= 20.0; d += 4.5) {
        double t = imz + d;
        std::complex<double> z(0.8, imz);
        auto v = specfun::eval_ha_i(t, z, h, 0).value;
        double bound = 15.0 * std::sqrt(double(h)) * std::exp(imz - t);
        row(t, z, "HI_deriv_bound", h, v, bound, std::abs(v) < bound);
      }
    }
  }
  // est-ha-HA' bounds on t in [0.5, 10], |x| <= 3t
  for (double t : {0.5, 2.0, 6.0, 10.0}) {
    for (double f : {-1.0, -0.3, 0.4, 1.0}) {
      double x = 3.0 * t * f;
      double al = 2.0 * std::exp(-t) / (1.0 - std::exp(-2.0 * t));
      auto q =
          specfun::eval_ha_rescaled(t, {x, 0}, specfun::Rescaled::HIq, 0, 0)
              .value;
      double b1 = std::abs(x) / t + 3.0 + al;
      row(t, {x, 0}, "hHIq_bound", 0, q, b1, std::abs(q) <= b1 + 1e-12);
      auto q1 =
          specfun::eval_ha_rescaled(t, {x, 0}, specfun::Rescaled::HIq, 1, 0)
              .value;
      double b2 = 0.5 + 2.0 * al;
      row(t, {x, 0}, "hHIq_bound", 1, q1, b2, std::abs(q1) <= b2 + 1e-12);
    }
  }
  json verdict;
  verdict["check"] = "specfun";
  verdict["pass"] = all_pass;
  std::ofstream vf(out_dir / "verdict.json");
  vf << verdict.dump(2) << "\n";
  std::cout << (all_pass ? "specfun-check: pass\n" : "specfun-check: FAIL\n");
  return all_pass ? 0 : 1;
}

int cmd_pde_check(const std::string& kappa_sel, const fs::path& out_dir,
                  bool mc, long n_paths, std::uint64_t seed) {
  ensure_dir(out_dir);
  json verdict;
  verdict["check"] = "pde-residuals";
  json entries = json::array();
  bool all_pass = true;
  std::vector<double> ts{1.0, 1.7, 2.6};
  for (const auto& e : drift::catalog()) {
    std::string ek = e.id.substr(1, e.id.find('-') - 1);
    if (kappa_sel != "all" && ek != kappa_sel) continue;
    auto rep = drift::pde_residual(e, ts, 24);
    bool pass = rep.max_residual < 1e-7;
    all_pass = all_pass && pass;
    json je;
    je["id"] = e.id;
    je["max_residual"] = rep.max_residual;
    je["constancy_form"] = rep.constancy_form;
    je["n_points"] = rep.n_points;
    je["pass"] = pass;
    entries.push_back(je);
  }
  if (entries.empty()) {
    std::cerr << "pde-check: no catalog entries match kappa " << kappa_sel
              << "\n";
    return 2;
  }
  verdict["entries"] = entries;
  if (mc) {
    drift::FkParams p = drift::FkParams::reversibility(2.0);
    p.n_paths = n_paths;
    p.dt = 8e-3;
    auto mcrep = drift::mc_pde_residual(p, {seed, 0}, {{1.2, 0.7}, {1.8, 2.0}},
                                        5);
    json jm;
    jm["chi2"] = mcrep.chi2;
    jm["p_value"] = mcrep.p_value;
    jm["z_scores"] = mcrep.z_scores;
    bool mc_pass = mcrep.p_value > 0.01;
    jm["pass"] = mc_pass;
    all_pass = all_pass && mc_pass;
    verdict["mc_drift"] = jm;
  }
  verdict["pass"] = all_pass;
  std::ofstream vf(out_dir / "verdict.json");
  vf << verdict.dump(2) << "\n";
  std::cout << (all_pass ? "pde-check: pass\n" : "pde-check: FAIL\n");
  return all_pass ? 0 : 1;
}

int cmd_fk_solve(double kappa, std::string preset, double sigma, double s,
                 double t, std::vector<double> xs, long n_paths, double dt,
                 std::uint64_t seed, std::uint64_t stream,
                 const fs::path& out_dir) {
  ensure_dir(out_dir);
  drift::FkParams params;
  params.kappa = kappa;
  if (preset == "reversibility")
    params.sigma = 4.0 / kappa - 1.0;
  else if (preset == "decomposition")
    params.sigma = 0.5 + 1.0 / kappa;
  else
    params.sigma = sigma;
  params.s = s;
  params.n_paths = n_paths;
  params.dt = dt;
  auto rows = drift::lambda_s_many(params, {seed, stream}, t, xs);
  std::ofstream csv(out_dir / "fk_solve.csv");
  csv << "t,x,lambda,stderr,psi,psi_stderr\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    csv << fmt17(t) << ',' << fmt17(xs[i]) << ',' << fmt17(rows[i].value)
        << ',' << fmt17(rows[i].stderr_) << ',' << fmt17(rows[i].psi) << ','
        << fmt17(rows[i].psi_stderr) << "\n";
  }
  std::cout << "fk-solve: wrote " << xs.size() << " rows\n";
  return 0;
}

int cmd_sample_trace(const std::string& kind, double kappa, double p,
                     double x0, double y0, double s, double dt,
                     double horizon, double t_start, int n_times,
                     std::uint64_t seed, std::uint64_t stream,
                     const fs::path& out_dir) {
  ensure_dir(out_dir);
  sle::SleSpec spec;
  if (kind == "annulus-plain")
    spec.kind = sle::Kind::AnnulusPlain;
  else if (kind == "annulus-marked")
    spec.kind = sle::Kind::AnnulusMarked;
  else if (kind == "disc")
    spec.kind = sle::Kind::DiscMarked;
  else if (kind == "radial")
    spec.kind = sle::Kind::Radial;
  else if (kind == "whole-plane")
    spec.kind = sle::Kind::WholePlane;
  else {
    std::cerr << "unknown trace kind: " << kind << "\n";
    return 2;
  }
  spec.kappa = kappa;
  spec.p = p;
  spec.x0 = x0;
  spec.y0 = y0;
  spec.s = s;
  spec.dt = dt;
  spec.t_start = t_start;
  spec.t_horizon = horizon;
  spec.seed = {seed, stream};
  drift::DriftFunction lam = drift::DriftFunction::closed_form(
      kappa == 3.0 ? "k3" : (kappa == 4.0 ? "k4" : "k2"));
  if (spec.kind == sle::Kind::AnnulusMarked ||
      spec.kind == sle::Kind::DiscMarked)
    spec.lambda = &lam;
  std::vector<double> times;
  double lo = spec.kind == sle::Kind::WholePlane ||
                      spec.kind == sle::Kind::DiscMarked
                  ? t_start + 0.5
                  : 0.0;
  for (int i = 1; i <= n_times; ++i)
    times.push_back(lo + (horizon - lo) * i / n_times);
  auto smp = sle::sample(spec, times);
  std::string echo = "variant=" + kind + " kappa=" + fmt17(kappa) +
                     " p=" + fmt17(p) + " dt=" + fmt17(dt);
  loewner::write_trace_csv(smp.trace, (out_dir / "trace.csv").string(), echo);
  json side;
  side["kind"] = kind;
  side["kappa"] = kappa;
  side["p"] = p;
  side["x0"] = x0;
  side["y0"] = y0;
  side["s"] = s;
  side["dt"] = dt;
  side["horizon"] = horizon;
  side["t_start"] = t_start;
  side["seed"] = seed;
  side["stream"] = stream;
  side["tip_eps"] = smp.trace.tip_offset_eps;
  if (smp.aborted) {
    side["aborted"] = {{"time", smp.aborted->time},
                       {"drift", smp.aborted->drift_value}};
  } else {
    side["aborted"] = nullptr;
  }
  std::ofstream sf(out_dir / "trace.json");
  sf << side.dump(2) << "\n";
  std::cout << "sample-trace: wrote " << smp.trace.points.size()
            << " points\n";
  return 0;
}

int cmd_experiment(const std::string& kind, double kappa, double p, long n,
                   double delta_stop, std::uint64_t seed,
                   std::uint64_t stream, const fs::path& out_dir) {
  ensure_dir(out_dir);
  experiments::ExperimentConfig cfg;
  cfg.kappa = kappa;
  cfg.p = p;
  cfg.n_samples = n;
  cfg.seed = {seed, stream};
  cfg.delta_stop = delta_stop > 0 ? delta_stop : p / 100.0;
  cfg.drift_id = kappa == 3.0 ? "k3" : (kappa == 4.0 ? "k4" : "k2");
  json verdict;
  verdict["experiment"] = kind;
  verdict["kappa"] = kappa;
  verdict["p"] = p;
  verdict["n_samples"] = n;
  verdict["seed"] = seed;
  bool pass = false;
  if (kind == "reversibility") {
    auto rep = experiments::reversibility_experiment(cfg);
    std::ofstream csv(out_dir / "observables.csv");
    csv << "ensemble,value\n";
    for (double v : rep.forward_obs) csv << "forward," << fmt17(v) << "\n";
    for (double v : rep.reversed_obs) csv << "reversed," << fmt17(v) << "\n";
    verdict["ks_statistic"] = rep.ks.statistic;
    verdict["p_value"] = rep.ks.p_value;
    pass = rep.ks.p_value > 0.01;
  } else if (kind == "endpoint") {
    auto rep = experiments::endpoint_decomposition_experiment(cfg);
    std::ofstream csv(out_dir / "observables.csv");
    csv << "endpoint_arg\n";
    for (double v : rep.endpoint_args) csv << fmt17(v) << "\n";
    verdict["chi2"] = rep.chi2.statistic;
    verdict["p_value"] = rep.chi2.p_value;
    verdict["n_used"] = rep.n_used;
    pass = rep.chi2.p_value > 0.01;
  } else if (kind == "martingale") {
    auto rep = experiments::martingale_unity_experiment(cfg);
    std::ofstream csv(out_dir / "observables.csv");
    csv << "martingale_average\n";
    csv << fmt17(rep.mean) << "\n";
    verdict["mean"] = rep.mean;
    verdict["stderr"] = rep.stderr_;
    verdict["t0_average"] = rep.t0_average;
    pass = std::abs(rep.mean - 1.0) <= 3.0 * rep.stderr_;
  } else {
    std::cerr << "unknown experiment kind: " << kind << "\n";
    return 2;
  }
  verdict["pass"] = pass;
  std::ofstream vf(out_dir / "verdict.json");
  vf << verdict.dump(2) << "\n";
  std::cout << "experiment " << kind << ": " << (pass ? "pass" : "FAIL")
            << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sle-lab: annulus and whole-plane SLE numerical laboratory"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::uint64_t seed = 1, stream = 0;
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--seed", seed, "rng seed");
  app.add_option("--stream", stream, "rng stream id");

  auto* sc_spec = app.add_subcommand("specfun-check",
                                     "kernel identity and bound checks");

  auto* sc_pde = app.add_subcommand("pde-check", "catalog PDE residuals");
  std::string kappa_sel = "all";
  bool mc = false;
  long mc_paths = 4000;
  sc_pde->add_option("--kappa", kappa_sel,
                     "0, 2, 3, 4, 16o3 or all");
  sc_pde->add_flag("--mc", mc, "also run the MC drift residual test");
  sc_pde->add_option("--n-paths", mc_paths, "paths for the MC residual");

  auto* sc_fk = app.add_subcommand("fk-solve", "Feynman-Kac drift values");
  double fk_kappa = 2.0, fk_sigma = -1.0, fk_s = 0.0, fk_t = 1.5,
         fk_dt = 1e-3;
  std::string preset;
  long fk_n = 100000;
  std::vector<double> fk_xs;
  int fk_nx = 0;
  sc_fk->add_option("--kappa", fk_kappa, "kappa")->required();
  sc_fk->add_option("--sigma", fk_sigma, "sigma (omit with --preset)");
  sc_fk->add_option("--preset", preset, "reversibility | decomposition");
  sc_fk->add_option("--s", fk_s, "average shift");
  sc_fk->add_option("--t", fk_t, "modulus t")->required();
  sc_fk->add_option("--x", fk_xs, "x values");
  sc_fk->add_option("--x-grid", fk_nx, "n equally spaced x over one period");
  sc_fk->add_option("--n-paths", fk_n, "Monte Carlo paths");
  sc_fk->add_option("--dt", fk_dt, "Euler step");

  auto* sc_tr = app.add_subcommand("sample-trace", "sample one SLE trace");
  std::string tr_kind = "annulus-plain";
  double tr_kappa = 2.0, tr_p = 1.0, tr_x0 = 0.0, tr_y0 = 0.0, tr_s = 0.0,
         tr_dt = 1e-4, tr_h = 0.9, tr_tstart = -8.0;
  int tr_n = 50;
  sc_tr->add_option("--kind", tr_kind,
                    "annulus-plain|annulus-marked|disc|radial|whole-plane");
  sc_tr->add_option("--kappa", tr_kappa, "kappa");
  sc_tr->add_option("--p", tr_p, "annulus modulus");
  sc_tr->add_option("--x0", tr_x0, "start angle");
  sc_tr->add_option("--y0", tr_y0, "marked angle");
  sc_tr->add_option("--s", tr_s, "skew rate");
  sc_tr->add_option("--dt", tr_dt, "driving step");
  sc_tr->add_option("--horizon", tr_h, "integration horizon");
  sc_tr->add_option("--t-start", tr_tstart, "surrogate -infinity");
  sc_tr->add_option("--n-times", tr_n, "trace sample count");

  auto* sc_ex = app.add_subcommand("experiment", "desk-scale experiments");
  std::string ex_kind = "endpoint";
  std::string ex_config;
  double ex_kappa = 2.0, ex_p = 1.0, ex_delta = 0.0;
  long ex_n = 500;
  sc_ex->add_option("--kind", ex_kind,
                    "reversibility|endpoint|martingale")->required();
  sc_ex->add_option("--config", ex_config, "JSON config file");
  sc_ex->add_option("--kappa", ex_kappa, "kappa");
  sc_ex->add_option("--p", ex_p, "annulus modulus");
  sc_ex->add_option("--n", ex_n, "sample count");
  sc_ex->add_option("--delta-stop", ex_delta, "stop distance (default p/100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  Manifest man;
  man.out_dir = out_dir;
  man.seed = seed;
  man.stream = stream;

  try {
    int rc = 3;
    if (sc_spec->parsed()) {
      man.subcommand = "specfun-check";
      rc = cmd_specfun_check(out_dir);
    } else if (sc_pde->parsed()) {
      man.subcommand = "pde-check";
      man.params["kappa"] = kappa_sel;
      man.params["mc"] = mc;
      rc = cmd_pde_check(kappa_sel, out_dir, mc, mc_paths, seed);
    } else if (sc_fk->parsed()) {
      man.subcommand = "fk-solve";
      if (fk_xs.empty()) {
        int n = fk_nx > 0 ? fk_nx : 8;
        for (int i = 0; i < n; ++i) fk_xs.push_back(kTwoPi * i / n);
      }
      man.params = {{"kappa", fk_kappa}, {"preset", preset},
                    {"sigma", fk_sigma},  {"s", fk_s},
                    {"t", fk_t},          {"n_paths", fk_n},
                    {"dt", fk_dt}};
      if (preset.empty() && fk_sigma < 0) {
        std::cerr << "fk-solve: give --sigma or --preset\n";
        return 2;
      }
      rc = cmd_fk_solve(fk_kappa, preset, fk_sigma, fk_s, fk_t, fk_xs, fk_n,
                        fk_dt, seed, stream, out_dir);
    } else if (sc_tr->parsed()) {
      man.subcommand = "sample-trace";
      man.params = {{"kind", tr_kind}, {"kappa", tr_kappa}, {"p", tr_p},
                    {"x0", tr_x0},     {"y0", tr_y0},       {"s", tr_s},
                    {"dt", tr_dt},     {"horizon", tr_h},
                    {"t_start", tr_tstart}};
      rc = cmd_sample_trace(tr_kind, tr_kappa, tr_p, tr_x0, tr_y0, tr_s,
                            tr_dt, tr_h, tr_tstart, tr_n, seed, stream,
                            out_dir);
    } else if (sc_ex->parsed()) {
      man.subcommand = "experiment";
      if (!ex_config.empty()) {
        std::ifstream cf(ex_config);
        if (!cf) {
          std::cerr << "cannot open config " << ex_config << "\n";
          return 2;
        }
        json j = json::parse(cf, nullptr, false);
        if (j.is_discarded()) {
          std::cerr << "config is not valid JSON\n";
          return 2;
        }
        for (auto& [k, v] : j.items()) {
          if (k == "kind") ex_kind = v.get<std::string>();
          else if (k == "kappa") ex_kappa = v.get<double>();
          else if (k == "p") ex_p = v.get<double>();
          else if (k == "n") ex_n = v.get<long>();
          else if (k == "delta_stop") ex_delta = v.get<double>();
          else if (k == "seed") man.seed = seed = v.get<std::uint64_t>();
          else if (k == "stream") man.stream = stream = v.get<std::uint64_t>();
          else {
            std::cerr << "unknown config key: " << k << "\n";
            return 2;
          }
        }
      }
      man.params = {{"kind", ex_kind}, {"kappa", ex_kappa}, {"p", ex_p},
                    {"n", ex_n},       {"delta_stop", ex_delta}};
      rc = cmd_experiment(ex_kind, ex_kappa, ex_p, ex_n, ex_delta, seed,
                          stream, out_dir);
    }
    man.write();
    return rc;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
