// mathieu-cli: sweeps, maps, gate suite and chain experiments from one JSON
// run config. Exit status 0 on success, 1 on a computational failure, 2 on a
// usage or config error.

#include <CLI11.hpp>

#include <mathieu/mathieu.hpp>
#include <mathieu/validate.hpp>

#include "run_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace mathieu;
using namespace mathieu::cli;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  unsigned threads = 0;  // 0 = from config
  bool truncation_check = false;
};

std::string f17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string tag(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// write-then-rename so a crash never leaves a truncated output
void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    if (!os.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

unsigned threads_of(const Options& o, const RunConfig& c) { return o.threads ? o.threads : c.threads; }

SystemSpec with_extra_level(SystemSpec s) {
  for (auto& m : s.modes) ++m.dim;
  return s;
}

double coupling_at(const SystemSpec& s, const DriveSpec& d, CouplingKind kind) {
  auto spec = driven_spectrum(s, d, kind == CouplingKind::TwoQubit ? two_qubit_labels() : qcq_labels());
  return kind == CouplingKind::TwoQubit ? jzz_two_qubit(spec) : qcq_couplings(spec).jzz;
}

void check_drive_fits(const SystemSpec& s, const DriveSpec& d) {
  if (d.target_mode >= s.modes.size()) throw ConfigError("drive.mode: no such mode in device");
}

// ---------------------------------------------------------------- zz-sweep

int cmd_zz_sweep(const Options& o, const RunConfig& c) {
  SystemSpec sys = c.device.value_or(ref_pair_device());
  DriveSpec drive = c.drive.value_or(ref_pair_drive());
  check_drive_fits(sys, drive);
  const auto kind = c.zz_sweep.kind;
  if (kind == CouplingKind::TwoQubit && sys.modes.size() != 2) throw ConfigError("zz_sweep.kind two_qubit needs a two-mode device");
  if (kind == CouplingKind::Qcq && sys.modes.size() != 3) throw ConfigError("zz_sweep.kind qcq needs a three-mode device");
  const auto eps = c.zz_sweep.eps.values();

  SweepOptions so;
  so.kind = kind;
  so.threads = threads_of(o, c);
  auto curve = zz_sweep(sys, drive, eps, so);

  // closed form only for the driven two-transmon pair
  std::optional<SWParams> sw;
  if (kind == CouplingKind::TwoQubit && drive.target_mode == 1) {
    double g = 0.0;
    for (const auto& cp : sys.couplings) g += cp.g;
    const auto& m = sys.modes;
    sw = SWParams::from_device(m[0].omega, m[1].omega, m[0].alpha, m[1].alpha, g, drive.omega_d);
  }
  std::ostringstream csv;
  csv << "epsilon,jzz_numeric,jzz_analytic" << (kind == CouplingKind::Qcq ? ",jxx_numeric" : "")
      << ",flagged,min_overlap\n";
  for (const auto& s : curve.samples) {
    double ana = std::nan("");
    if (sw) {
      SWParams p = *sw;
      p.epsilon = s.epsilon;
      try {
        ana = jzz_sw(p);
      } catch (const AnalyticError&) {
      }
    }
    csv << f17(s.epsilon) << ',' << f17(s.jzz) << ',' << f17(ana);
    if (kind == CouplingKind::Qcq) csv << ',' << f17(s.jxx.value_or(std::nan("")));
    csv << ',' << (s.flagged ? 1 : 0) << ',' << f17(s.min_overlap) << '\n';
  }
  write_atomic(fs::path(o.out) / "zz_sweep.csv", csv.str());

  json rep;
  rep["sign_changes"] = curve.sign_changes;
  rep["roots"] = curve.roots;
  json kinds = json::array();
  for (auto k : curve.root_kinds) kinds.push_back(k == ZZCurve::RootKind::Zero ? "zero" : "level-crossing");
  rep["root_kinds"] = kinds;
  rep["eps0_numeric"] = curve.root() ? json(*curve.root()) : json(nullptr);
  rep["eps0_analytic"] = nullptr;
  if (sw) {
    rep["analytic_warnings"] = sw->warnings();
    try {
      rep["eps0_analytic"] = epsilon_zero(*sw);
    } catch (const AnalyticError& e) {
      rep["eps0_analytic_error"] = e.what();
    }
  }
  write_json(fs::path(o.out) / "zz_roots.json", rep);

  std::printf("zz-sweep: %zu samples, %d sign change(s)", curve.samples.size(), curve.sign_changes);
  if (curve.root()) std::printf(", eps0 = %.6g GHz", *curve.root());
  std::printf("\n");

  if (o.truncation_check) {
    SystemSpec big = with_extra_level(sys);
    std::ostringstream t;
    t << "epsilon,jzz,jzz_plus_one_level,difference\n";
    double worst = 0.0;
    for (const auto& s : curve.samples) {
      DriveSpec d = drive;
      d.epsilon = s.epsilon;
      const double a = coupling_at(sys, d, kind), b = coupling_at(big, d, kind);
      worst = std::max(worst, std::abs(a - b));
      t << f17(s.epsilon) << ',' << f17(a) << ',' << f17(b) << ',' << f17(a - b) << '\n';
    }
    write_atomic(fs::path(o.out) / "truncation.csv", t.str());
    std::printf("truncation check: max |dJ_zz| = %.3g GHz with one more level per mode\n", worst);
  }
  return 0;
}

// ---------------------------------------------------------------- qcq-map

int cmd_qcq_map(const Options& o, const RunConfig& c) {
  SystemSpec sys = c.device.value_or(qcq_device());
  if (sys.modes.size() != 3) throw ConfigError("qcq-map needs a three-mode Q-C-Q device");
  DriveSpec drive = c.drive.value_or(DriveSpec{kQcqCouplerMode, 0.0, 5.0, 0.0});
  if (drive.target_mode != kQcqCouplerMode) throw ConfigError("qcq-map: drive.mode must be 1 (the coupler)");
  const auto eps = c.qcq_map.eps.values();
  const auto wds = c.qcq_map.omega_d.values();
  const auto& m = sys.modes;

  struct Cell {
    QcqCouplings k;
    double min_overlap;
  };
  auto rows = parallel_map(wds.size(), threads_of(o, c), [&](std::size_t r) {
    std::vector<Cell> row;
    for (double e : eps) {
      DriveSpec d = drive;
      d.epsilon = e;
      d.omega_d = wds[r];
      auto spec = driven_spectrum(sys, d, qcq_labels());
      double mo = 1.0;
      for (const auto& l : qcq_labels()) mo = std::min(mo, spec.overlaps.at(l));
      row.push_back({qcq_couplings(spec), mo});
    }
    return row;
  });

  std::ostringstream csv;
  csv << "omega_d,epsilon,jzz,jxx,min_overlap,regime,static_sign,epsilon_c,on_boundary\n";
  double zmin = INFINITY, zmax = -INFINITY, xmin = INFINITY, xmax = -INFINITY;
  for (std::size_t r = 0; r < wds.size(); ++r) {
    auto reg = qcq_regime(m[1].omega, wds[r], m[0].omega, m[2].omega, m[1].alpha);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const auto& cell = rows[r][i];
      zmin = std::min(zmin, cell.k.jzz);
      zmax = std::max(zmax, cell.k.jzz);
      xmin = std::min(xmin, std::abs(cell.k.jxx));
      xmax = std::max(xmax, std::abs(cell.k.jxx));
      csv << f17(wds[r]) << ',' << f17(eps[i]) << ',' << f17(cell.k.jzz) << ',' << f17(cell.k.jxx) << ','
          << f17(cell.min_overlap) << ',' << to_string(reg.regime) << ',' << reg.static_sign << ','
          << f17(reg.epsilon_c.value_or(std::nan(""))) << ',' << (reg.on_boundary ? 1 : 0) << '\n';
    }
  }
  write_atomic(fs::path(o.out) / "qcq_map.csv", csv.str());

  json rep;
  rep["jzz_min"] = zmin;
  rep["jzz_max"] = zmax;
  rep["jxx_abs_min"] = xmin;
  rep["jxx_abs_max"] = xmax;
  rep["jxx_relative_variation"] = (xmax - xmin) / (0.5 * (xmax + xmin));
  write_json(fs::path(o.out) / "qcq_map.json", rep);
  std::printf("qcq-map: %zu x %zu points, J_zz in [%.4g, %.4g] MHz, J_xx variation %.3g%%\n", wds.size(), eps.size(),
              zmin * 1e3, zmax * 1e3, 100.0 * rep["jxx_relative_variation"].get<double>());

  if (o.truncation_check) {
    SystemSpec big = with_extra_level(sys);
    double worst = 0.0;
    for (double wd : {wds.front(), wds.back()})
      for (double e : {eps.front(), eps.back()}) {
        DriveSpec d = drive;
        d.epsilon = e;
        d.omega_d = wd;
        worst = std::max(worst, std::abs(coupling_at(sys, d, CouplingKind::Qcq) - coupling_at(big, d, CouplingKind::Qcq)));
      }
    std::printf("truncation check: max |dJ_zz| at the map corners = %.3g GHz\n", worst);
  }
  return 0;
}

// ---------------------------------------------------------------- gates

int cmd_gates(const Options& o, const RunConfig& c) {
  GateSuiteConfig g;
  g.system = c.device.value_or(ref_pair_device());
  g.drive = c.drive.value_or(ref_pair_drive());
  if (g.system.modes.size() != 2) throw ConfigError("gates needs a two-mode device");
  check_drive_fits(g.system, g.drive);
  if (g.system.couplings.size() != 1) throw ConfigError("gates needs exactly one coupling");
  const auto& s = c.gates;
  if (s.eps_search.min != 0.0 || s.eps_profile.min != 0.0) throw ConfigError("gates: eps grids must start at 0");
  g.sample_rate = s.sample_rate;
  g.xy_sigma = s.xy_sigma;
  g.xy_duration = s.xy_duration;
  g.trim_xy = s.trim_xy;
  g.ramp_k = s.ramp_k;
  g.ramp_window = s.ramp_window;
  g.cz_hold = s.cz_hold;
  g.cz_eps_guess = s.cz_eps_guess;
  g.eps_sweep_max = s.eps_search.max;
  g.eps_sweep_step = s.eps_search.step;
  g.eps_profile_max = s.eps_profile.max;
  g.eps_profile_step = s.eps_profile.step;
  g.threads = threads_of(o, c);

  GateSuite suite = run_gate_suite(g);
  const auto& cal = suite.calibration;
  const fs::path out(o.out);

  std::ostringstream table;
  table << "gate,fidelity,purity,leakage,mean_population_leakage,conditional_phase,duration_ns\n";
  for (const auto& r : suite.gates) {
    table << r.name << ',' << f17(r.metrics.fidelity) << ',' << f17(r.metrics.purity) << ',' << f17(r.metrics.leakage)
          << ',' << f17(r.mean_leakage) << ',' << f17(r.conditional_phase.value_or(std::nan(""))) << ','
          << f17(r.map.duration) << '\n';
    std::ostringstream chi, mag;
    write_chi_csv(chi, r.chi);
    write_chi_magnitude(mag, r.chi);
    write_atomic(out / ("chi_" + r.name + ".csv"), chi.str());
    write_atomic(out / ("chi_" + r.name + "_magnitude.csv"), mag.str());
    std::printf("%-3s F_chi %.6f  Tr(chi^2) %.6f  leakage %.2e\n", r.name.c_str(), r.metrics.fidelity, r.metrics.purity,
                r.mean_leakage);
  }
  write_atomic(out / "gate_metrics.csv", table.str());
  write_atomic(out / "schedule_XI.txt", serialize_schedule(xy_schedule(g, cal, true, false)));
  write_atomic(out / "schedule_IX.txt", serialize_schedule(xy_schedule(g, cal, false, true)));
  write_atomic(out / "schedule_XX.txt", serialize_schedule(xy_schedule(g, cal, true, true)));
  write_atomic(out / "schedule_CZ.txt", serialize_schedule(cz_schedule(g, cal, cal.cz_plateau)));

  json j;
  j["eps0"] = cal.eps0;
  j["eps0_analytic"] = num(cal.eps0_analytic);
  j["xy_frequency"] = {cal.freq1, cal.freq2};
  j["xy_matrix_element"] = {cal.elem1, cal.elem2};
  j["xy_amplitude_trim"] = {cal.amp1, cal.amp2};
  j["cz_plateau"] = cal.cz_plateau;
  j["cz_ramp_ns"] = cal.cz_ramp;
  j["cz_secant_iterations"] = cal.secant_iterations;
  write_json(out / "calibration.json", j);

  if (o.truncation_check) {
    DriveSpec d = g.drive;
    d.epsilon = cal.eps0;
    const double a = coupling_at(g.system, d, CouplingKind::TwoQubit);
    const double b = coupling_at(with_extra_level(g.system), d, CouplingKind::TwoQubit);
    std::printf("truncation check: J_zz(eps0) %.3g -> %.3g GHz with one more level\n", a, b);
  }
  return 0;
}

// ---------------------------------------------------------------- chain

json fit_json(const FitResult& f) {
  return {{"t0", f.t0}, {"n", f.n}, {"t_min", f.t_min}, {"t_max", f.t_max}, {"rms", f.rms},
          {"converged", f.converged}, {"points", f.points}};
}

std::string series_csv(const CorrelatorSeries& s) {
  std::ostringstream os;
  os << "t_ns,C_raw,C_norm\n";
  for (std::size_t i = 0; i < s.t.size(); ++i)
    os << f17(s.t[i]) << ',' << f17(s.raw[i]) << ',' << (s.normalized ? f17(s.norm[i]) : std::string("nan")) << '\n';
  return os.str();
}

int cmd_chain(const Options& o, const RunConfig& c) {
  const auto& ch = c.chain;
  ProgramGrid pg = ch.program;
  pg.threads = threads_of(o, c);
  QcqUnit unit{ch.layout.qubit, ch.layout.coupler, ch.layout.g_qc, ch.layout.g_qq};
  unit.qubit.dim = unit.coupler.dim = ch.unit_dim;
  const ProgramMap map = program_map(unit, pg);

  ChainConfig cfg;
  cfg.layout = ch.layout;
  cfg.horizon = ch.horizon;
  cfg.sample_step = ch.sample_step;
  cfg.threads = threads_of(o, c);
  FitOptions fo;
  fo.smoothing = ch.smoothing.value_or(exchange_period(ch.layout));

  const fs::path out(o.out);
  json runs = json::array();
  bool failed = false;
  std::ostringstream table;
  table << "delta_target,delta,reachable,epsilon,omega_d,chain_t0,chain_n,chain_rms,ref_t0,ref_n,ref_rms\n";
  for (double target : ch.deltas) {
    const ProgramResult pr = program_delta(map, target);
    json r;
    r["target"] = target;
    r["program"] = {{"epsilon", pr.epsilon}, {"omega_d", pr.omega_d}, {"jxx", pr.jxx}, {"jzz", pr.jzz},
                    {"delta", pr.delta}, {"residual", pr.residual}, {"overlap_101", pr.overlap_101},
                    {"reachable", pr.reachable}};
    cfg.drive = {0, pr.epsilon, pr.omega_d, 0.0};
    const auto neel = dressed_neel(cfg);
    const auto series = evolve_chain(cfg, neel.state);
    const auto ref = xxz_reference(std::abs(pr.jxx), pr.jzz, series.t);
    r["segment_overlaps"] = neel.segment_overlaps;
    r["norm_drift"] = series.norm_drift;
    write_atomic(out / ("chain_delta_" + tag(target) + ".csv"), series_csv(series));
    write_atomic(out / ("reference_delta_" + tag(target) + ".csv"), series_csv(ref.series));
    FitResult fc, fr;
    try {
      fc = fit_stretched(series.t, series.norm, fo);
      fr = fit_stretched(ref.series.t, ref.series.norm);
      r["chain_fit"] = fit_json(fc);
      r["reference_fit"] = fit_json(fr);
    } catch (const std::exception& e) {
      r["fit_error"] = e.what();
      failed = true;
    }
    table << f17(target) << ',' << f17(pr.delta) << ',' << (pr.reachable ? 1 : 0) << ',' << f17(pr.epsilon) << ','
          << f17(pr.omega_d) << ',' << f17(fc.t0) << ',' << f17(fc.n) << ',' << f17(fc.rms) << ',' << f17(fr.t0) << ','
          << f17(fr.n) << ',' << f17(fr.rms) << '\n';
    std::printf("Delta %6.2f%s: eps %.5f omega_d %.3f | chain t0 %.2f n %.3f | exact t0 %.2f n %.3f\n", target,
                pr.reachable ? "" : " (unreachable)", pr.epsilon, pr.omega_d, fc.t0, fc.n, fr.t0, fr.n);
    if (o.truncation_check) {
      QcqUnit big = unit;
      ++big.qubit.dim;
      ++big.coupler.dim;
      const auto p2 = qcq_point(big, pr.epsilon, pr.omega_d);
      r["truncation_check"] = {{"jxx", p2.jxx}, {"jzz", p2.jzz}, {"delta", p2.delta}};
      std::printf("  truncation check: Delta %.4f -> %.4f with one more level\n", pr.delta, p2.delta);
    }
    runs.push_back(r);
  }
  write_atomic(out / "chain_fits.csv", table.str());
  json rep;
  rep["smoothing_ns"] = fo.smoothing;
  rep["runs"] = runs;
  write_json(out / "chain.json", rep);
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------- analytic

int cmd_analytic(const Options& o, const RunConfig& c) {
  SystemSpec sys = c.device.value_or(ref_pair_device());
  DriveSpec drive = c.drive.value_or(ref_pair_drive());
  if (sys.modes.size() != 2 || sys.couplings.size() != 1) throw ConfigError("analytic needs a two-mode device with one coupling");
  if (drive.target_mode != 1) throw ConfigError("analytic: drive.mode must be 1");
  const auto& m = sys.modes;
  SWParams p = SWParams::from_device(m[0].omega, m[1].omega, m[0].alpha, m[1].alpha, sys.couplings[0].g, drive.omega_d,
                                     drive.epsilon);
  json j;
  j["params"] = {{"g", p.g}, {"delta", p.delta}, {"alpha1", p.alpha1}, {"alpha2", p.alpha2},
                 {"delta_d", p.delta_d}, {"epsilon", p.epsilon}};
  j["valid"] = p.valid();
  j["warnings"] = p.warnings();
  auto guarded = [&](const char* key, auto fn) {
    try {
      j[key] = fn();
    } catch (const AnalyticError& e) {
      j[key] = nullptr;
      j[std::string(key) + "_error"] = e.what();
    }
  };
  guarded("jzz_sw", [&] { return jzz_sw(p); });
  guarded("epsilon_zero", [&] { return epsilon_zero(p); });
  guarded("driven_levels", [&] {
    auto l = driven_levels(p.alpha2, p.delta_d, p.epsilon);
    return json{{"e0", l.e0}, {"e1", l.e1}, {"e2", l.e2}, {"e3", l.e3}, {"r", l.r},
                {"u2", l.u2}, {"v2", l.v2}, {"u3", l.u3}, {"v3", l.v3}};
  });
  if (c.qcq_regime) {
    const auto& q = *c.qcq_regime;
    auto r = qcq_regime(q.omega_c, q.omega_d, q.omega1, q.omega2, q.alpha_c);
    j["qcq_regime"] = {{"case", to_string(r.regime)},          {"static_sign", r.static_sign},
                       {"epsilon_c", r.epsilon_c ? json(*r.epsilon_c) : json(nullptr)},
                       {"on_boundary", r.on_boundary},         {"static_threshold", r.static_threshold},
                       {"drive_threshold", r.drive_threshold}};
  }
  write_json(fs::path(o.out) / "analytic.json", j);
  std::printf("%s", j.dump(2).c_str());
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Options& o, const RunConfig&) {
  auto checks = run_property_suite();
  std::ostringstream csv;
  csv << "check,pass,value,limit,detail\n";
  bool ok = true;
  for (const auto& k : checks) {
    ok = ok && k.pass;
    csv << k.name << ',' << (k.pass ? 1 : 0) << ',' << f17(k.value) << ',' << f17(k.limit) << ",\"" << k.detail << "\"\n";
    std::printf("%-14s %s  %.3e (limit %.1e)  %s\n", k.name.c_str(), k.pass ? "PASS" : "FAIL", k.value, k.limit,
                k.detail.c_str());
  }
  write_atomic(fs::path(o.out) / "validate.csv", csv.str());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mathieu control of coupled transmons: spectra, gates and chain dynamics"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "JSON run config (defaults apply when omitted)");
  app.add_option("--out", opt.out, "output directory")->capture_default_str();
  app.add_option("--threads", opt.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app.add_flag("--truncation-check", opt.truncation_check, "repeat key quantities with one more level per mode");

  using Handler = int (*)(const Options&, const RunConfig&);
  std::map<CLI::App*, Handler> handlers{
      {app.add_subcommand("zz-sweep", "J_zz against drive amplitude, numeric and closed form"), cmd_zz_sweep},
      {app.add_subcommand("qcq-map", "J_zz / J_xx over (epsilon, omega_d) for a Q-C-Q unit"), cmd_qcq_map},
      {app.add_subcommand("gates", "calibrate and simulate XI, IX, XX, CZ with process tomography"), cmd_gates},
      {app.add_subcommand("chain", "programmed-anisotropy chain dynamics against the exact XXZ chain"), cmd_chain},
      {app.add_subcommand("analytic", "closed-form couplings, decoupling point and regimes"), cmd_analytic},
      {app.add_subcommand("validate", "run the invariant suite"), cmd_validate},
  };
  for (auto& [sub, _] : handlers) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    cfg = opt.config.empty() ? parse_config(json{{"version", kConfigVersion}}) : load_config(opt.config);
    fs::create_directories(opt.out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  for (auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    try {
      return fn(opt, cfg);
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "%s failed: %s\n", sub->get_name().c_str(), e.what());
      return 1;
    }
  }
  return 2;
}
