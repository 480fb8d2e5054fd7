#pragma once

// Subcommand implementations. Each reads its inputs from a Config, writes
// CSV/JSON files into the output directory and throws on failure; the exit
// code mapping lives in main().

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "latticeqo/latticeqo.hpp"

namespace latticeqo::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunContext {
  Config config;
  fs::path out_dir;
  OutputMeta meta;
};

inline bool verbose() {
  const char* v = std::getenv("LATTICEQO_LOG");
  return v && *v && std::string(v) != "0";
}

inline void log(const std::string& msg) {
  if (verbose()) std::cerr << "[latticeqo] " << msg << '\n';
}

template <class F>
void write_file(const RunContext& ctx, const std::string& name, F&& body) {
  const fs::path p = ctx.out_dir / name;
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw fs::filesystem_error("cannot open output file", p, std::make_error_code(std::errc::permission_denied));
  body(os);
  if (!os) throw fs::filesystem_error("write failed", p, std::make_error_code(std::errc::io_error));
  log("wrote " + p.string());
}

inline json meta_json(const OutputMeta& meta) {
  return {{"tool", "latticeqo"}, {"version", std::string(kVersion)}, {"config_hash", meta.config_hash}};
}

inline void write_json(const RunContext& ctx, const std::string& name, json body) {
  json doc;
  doc["_meta"] = meta_json(ctx.meta);
  for (auto& [k, v] : body.items()) doc[k] = v;
  write_file(ctx, name, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

// Non-finite values are not representable in JSON.
inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// --- config -> domain objects ----------------------------------------------

inline Sublattice parse_sublattice(const std::string& s) {
  if (s == "S") return Sublattice::S;
  if (s == "A") return Sublattice::A;
  if (s == "B") return Sublattice::B;
  if (s == "C") return Sublattice::C;
  throw ConfigError("config: unknown sublattice '" + s + "' (expected S, A, B or C)");
}

inline LatticeSpec read_lattice(const Config& c, bool need_size) {
  LatticeSpec s;
  const auto kind = c.require_string("lattice.kind");
  if (kind == "square")
    s.kind = LatticeKind::Square;
  else if (kind == "lieb")
    s.kind = LatticeKind::Lieb;
  else
    throw ConfigError("config: lattice.kind must be 'square' or 'lieb', got '" + kind + "'");
  if (need_size) {
    s.nx = static_cast<int>(c.require_int("lattice.nx"));
    s.ny = static_cast<int>(c.require_int("lattice.ny"));
  } else {
    s.nx = static_cast<int>(c.get_int("lattice.nx", 1));
    s.ny = static_cast<int>(c.get_int("lattice.ny", 1));
  }
  const double v1 = c.get_double("lattice.v1", 1.0);
  s.vx = c.get_double("lattice.vx", v1);
  s.vy = c.get_double("lattice.vy", v1);
  s.onsite = c.get_double("lattice.onsite", 0.0);
  const auto boundary = c.get_string("lattice.boundary", "open");
  if (boundary == "open")
    s.boundary = Boundary::Open;
  else if (boundary == "periodic")
    s.boundary = Boundary::Periodic;
  else
    throw ConfigError("config: lattice.boundary must be 'open' or 'periodic', got '" + boundary + "'");
  s.dx = c.get_double("lattice.dx", 1.0);
  s.dy = c.get_double("lattice.dy", 1.0);
  s.trim_dangling = c.get_bool("lattice.trim_dangling", false);
  s.validate();
  return s;
}

inline Sublattice default_sublattice(const LatticeSpec& s) {
  return s.kind == LatticeKind::Square ? Sublattice::S : Sublattice::A;
}

// "default" (boundary midpoint), "bulk" (array centre), "emitter"/"E", or an
// explicit label such as "A(0,4)". The sublattice key selects the
// sublattice for the first two forms.
inline SiteLabel resolve_site(const std::string& token, const LatticeSpec& s, const std::string& sub_token) {
  const Sublattice sub = sub_token.empty() ? default_sublattice(s) : parse_sublattice(sub_token);
  if (token == "default") return default_attachment(s, sub);
  if (token == "bulk") return bulk_site(s, sub);
  return parse_site_label(token);
}

inline bool emitter_enabled(const Config& c) {
  return c.has_section("emitter") && c.get_bool("emitter.enabled", true);
}

inline SiteLabel read_attachment(const Config& c, const LatticeSpec& s) {
  const auto l = resolve_site(c.get_string("emitter.attachment", "default"), s, c.get_string("emitter.sublattice", ""));
  if (l.is_emitter()) throw ConfigError("config: emitter.attachment must be a lattice site");
  return l;
}

inline std::optional<EmitterSpec> read_emitter(const Config& c, const LatticeSpec& s) {
  if (!emitter_enabled(c)) return std::nullopt;
  EmitterSpec e;
  if (auto v2 = c.find_double("emitter.v2"))
    e.v2 = *v2;
  else if (auto r = c.find_double("emitter.ratio"))
    e.v2 = *r * s.vx;
  else
    throw ConfigError("config: [emitter] needs v2 or ratio");
  e.attachment = read_attachment(c, s);
  e.omega0 = c.find_double("emitter.omega0");
  return e;
}

inline PropagatorKind read_propagator(const std::string& s) {
  if (s == "exact") return PropagatorKind::Exact;
  if (s == "chebyshev") return PropagatorKind::Chebyshev;
  throw ConfigError("config: propagator must be 'exact' or 'chebyshev', got '" + s + "'");
}

inline SiteLabel read_initial(const Config& c, const std::string& section, const LatticeSpec& s, bool has_emitter) {
  const auto token = c.get_string(section + ".initial", has_emitter ? "emitter" : "");
  if (token.empty()) throw ConfigError("config: " + section + ".initial is required when there is no emitter");
  return resolve_site(token, s, c.get_string(section + ".sublattice", ""));
}

inline CouplingModel read_coupling(const Config& c) {
  const auto kind = c.get_string("coupling.model", "synthetic");
  CouplingModel m;
  if (kind == "synthetic") {
    m = CouplingModel::synthetic_default();
  } else if (kind == "quadratic") {
    m.a = c.require_double("coupling.a");
    m.b = c.require_double("coupling.b");
    m.c = c.require_double("coupling.c");
  } else {
    throw ConfigError("config: coupling.model must be 'synthetic' or 'quadratic', got '" + kind + "'");
  }
  m.lambda_min = c.get_double("coupling.lambda_min", m.lambda_min);
  m.lambda_max = c.get_double("coupling.lambda_max", m.lambda_max);
  m.validate();
  return m;
}

// --- bands -------------------------------------------------------------------

inline void cmd_bands(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto spec = read_lattice(c, false);
  const long n = c.get_int("bands.kgrid", 64);
  if (n < 1 || n > 4096) throw ConfigError("config: bands.kgrid must be in [1, 4096]");
  write_file(ctx, "bands.csv",
             [&](std::ostream& os) { write_band_csv(os, BandModel::from(spec), static_cast<int>(n), ctx.meta); });
}

// --- dos ---------------------------------------------------------------------

inline void cmd_dos(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto spec = read_lattice(c, true);
  const auto g = build_lattice(spec);
  const auto h = assemble_hamiltonian(g);
  EigenOptions opt;
  opt.dense_threshold = static_cast<std::size_t>(c.get_int("dos.dense_threshold", static_cast<long>(opt.dense_threshold)));
  log("diagonalising " + std::to_string(h.dim()) + " sites");
  const auto eigs = eigendecompose(h, false, opt).eigenvalues;

  auto rule = DOSBinning::for_lattice(spec);
  rule.width = c.get_double("dos.bin_width", rule.width);
  if (auto bins = c.find_int("dos.bins")) rule.count = static_cast<int>(*bins);
  const auto hist = dos_histogram(eigs, rule);

  const double tol = c.get_double("dos.zero_tol", default_zero_tolerance(h));
  const auto fb = flat_band_count(eigs, tol, spec.onsite);

  write_file(ctx, "eigenvalues.csv", [&](std::ostream& os) { write_eigenvalues_csv(os, eigs, ctx.meta); });
  write_file(ctx, "dos.csv", [&](std::ostream& os) { write_dos_csv(os, hist, ctx.meta); });
  write_json(ctx, "summary.json",
             {{"lattice", std::string(to_string(spec.kind))},
              {"boundary", std::string(to_string(spec.boundary))},
              {"sites", g.size()},
              {"eigenvalue_min", eigs.minCoeff()},
              {"eigenvalue_max", eigs.maxCoeff()},
              {"zero_tolerance", tol},
              {"flat_band_count", fb},
              {"flat_band_fraction", static_cast<double>(fb) / static_cast<double>(g.size())},
              {"bin_width", rule.count ? json(nullptr) : json(rule.width)},
              {"bins", hist.bins()}});
}

// --- evolve ------------------------------------------------------------------

inline std::string snapshot_name(double z) { return "profile_z" + format_double(z) + ".csv"; }

inline void cmd_evolve(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto spec = read_lattice(c, true);
  const auto em = read_emitter(c, spec);
  SystemGraph g = build_lattice(spec);
  if (em) g = attach_emitter(g, *em);
  const auto h = assemble_hamiltonian(g);
  const auto initial = read_initial(c, "evolve", spec, em.has_value());

  const double z_max = c.require_double("evolve.z_max");
  const long samples = c.get_int("evolve.samples", 201);
  if (samples < 2) throw ConfigError("config: evolve.samples must be >= 2");
  const ZGrid grid(z_max, static_cast<std::size_t>(samples));
  const auto kind = read_propagator(c.get_string("evolve.propagator", "exact"));
  const double tol = c.get_double("evolve.tol", 1e-10);

  log("evolving " + std::to_string(h.dim()) + " sites to z=" + format_double(z_max));
  const auto traj = evolve(h, single_site_excitation(g, initial), grid, kind, tol);

  double norm_dev = 0.0;
  for (const auto& s : traj.states) norm_dev = std::max(norm_dev, std::abs(s.norm_squared() - 1.0));

  if (c.get_bool("evolve.write_trajectory", true))
    write_file(ctx, "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj, g, ctx.meta); });
  const auto pr = participation_series(traj);
  write_file(ctx, "participation.csv", [&](std::ostream& os) { write_series_csv(os, pr, "R", ctx.meta); });

  json summary{{"sites", g.size()},
               {"initial", to_string(initial)},
               {"propagator", traj.info.id},
               {"z_max", z_max},
               {"samples", grid.size()},
               {"max_norm_deviation", norm_dev},
               {"final_participation", pr.values.back()}};
  if (kind == PropagatorKind::Chebyshev) {
    summary["tolerance"] = traj.info.tolerance;
    summary["chebyshev_order"] = traj.info.chebyshev_order;
  }

  if (em) {
    const auto qe = qe_population(traj, g);
    write_file(ctx, "qe_population.csv", [&](std::ostream& os) { write_series_csv(os, qe, "qe_population", ctx.meta); });
    RevivalThresholds th;
    th.decay = c.get_double("evolve.decay_threshold", th.decay);
    th.revival = c.get_double("evolve.revival_threshold", th.revival);
    const auto rep = detect_revivals(qe, th);
    json revs = json::array();
    for (const auto& r : rep.revivals) revs.push_back({{"z", r.z}, {"peak", r.peak}});
    write_json(ctx, "revivals.json",
               {{"emitter_v2", em->v2},
                {"attachment", to_string(em->attachment)},
                {"decay_threshold", th.decay},
                {"revival_threshold", th.revival},
                {"decayed", rep.decayed},
                {"decay_z", number_or_null(rep.decay_z)},
                {"revivals", revs},
                {"max_revival", rep.max_revival}});
    summary["final_qe_population"] = qe.values.back();
  }

  for (double z : c.get_double_list("evolve.snapshots")) {
    if (z < 0.0 || z > z_max) throw ConfigError("config: snapshot z=" + format_double(z) + " outside [0, z_max]");
    const auto j = grid.nearest(z);
    write_file(ctx, snapshot_name(z),
               [&](std::ostream& os) { write_profile_csv(os, traj.states[j], g, grid[j], ctx.meta); });
  }

  if (c.get_bool("evolve.dump_amplitudes", false)) {
    json states = json::array();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      json re = json::array(), im = json::array();
      for (const auto& a : traj.states[j].amplitudes) {
        re.push_back(a.real());
        im.push_back(a.imag());
      }
      states.push_back({{"z", grid[j]}, {"re", re}, {"im", im}});
    }
    json labels = json::array();
    for (const auto& l : g.sites()) labels.push_back(to_string(l));
    write_json(ctx, "amplitudes.json", {{"sites", labels}, {"states", states}});
  }

  write_json(ctx, "summary.json", summary);
}

// --- sweep -------------------------------------------------------------------

inline std::vector<double> read_lambda_grid(const Config& c) {
  if (c.has("sweep.lambdas")) return c.get_double_list("sweep.lambdas");
  const long points = c.get_int("sweep.points", 21);
  if (points < 0) throw ConfigError("config: sweep.points must be >= 0");
  return linear_lambda_grid(c.get_double("sweep.lambda_min", 600.0), c.get_double("sweep.lambda_max", 800.0),
                            static_cast<std::size_t>(points));
}

inline SweepConfig read_sweep(const Config& c) {
  SweepConfig cfg;
  cfg.lambdas = read_lambda_grid(c);
  if (cfg.lambdas.empty()) throw ConfigError("config: the wavelength grid is empty");
  cfg.lattice = read_lattice(c, true);
  if (emitter_enabled(c)) {
    EmitterTemplate t;
    t.ratio = c.require_double("emitter.ratio");
    t.attachment = read_attachment(c, cfg.lattice);
    t.omega0 = c.find_double("emitter.omega0");
    cfg.emitter = t;
  }
  cfg.initial = read_initial(c, "sweep", cfg.lattice, cfg.emitter.has_value());
  const auto mode = c.get_string("sweep.mode", "coupling");
  if (mode == "coupling")
    cfg.mode = SweepMode::Coupling;
  else if (mode == "distance")
    cfg.mode = SweepMode::Distance;
  else
    throw ConfigError("config: sweep.mode must be 'coupling' or 'distance', got '" + mode + "'");
  cfg.length = c.get_double("sweep.length", cfg.length);
  cfg.reference_lambda = c.get_double("sweep.reference_lambda", cfg.reference_lambda);
  cfg.propagator = read_propagator(c.get_string("sweep.propagator", "exact"));
  cfg.tolerance = c.get_double("sweep.tol", cfg.tolerance);
  return cfg;
}

inline ZLambdaMap read_map(const Config& c, const CouplingModel& m, const SweepConfig& cfg) {
  if (c.has("map.lambda0") || c.has("map.alpha")) {
    ZLambdaMap map{c.require_double("map.lambda0"), c.require_double("map.alpha"), cfg.length, m.lambda_min,
                   m.lambda_max};
    map.validate();
    return map;
  }
  return ZLambdaMap::from_coupling(m, cfg.reference_lambda, cfg.length);
}

inline void run_one_sweep(const RunContext& ctx, const Config& c, const std::string& file) {
  const auto cfg = read_sweep(c);
  const auto model = read_coupling(c);
  const auto map = read_map(c, model, cfg);
  log("sweep " + file + ": " + std::to_string(cfg.lambdas.size()) + " wavelengths");
  const auto rows = run_sweep(cfg, model, map);
  const bool synthetic = c.get_string("coupling.model", "synthetic") == "synthetic";
  write_file(ctx, file, [&](std::ostream& os) {
    write_meta_comment(os, ctx.meta);
    os << "# coupling_model=" << (synthetic ? "synthetic" : "quadratic") << " a=" << format_double(model.a)
       << " b=" << format_double(model.b) << " c=" << format_double(model.c)
       << " lambda0=" << format_double(map.lambda0) << " alpha=" << format_double(map.alpha) << '\n';
    // header and rows without a second meta line
    std::ostringstream body;
    write_sweep_csv(body, rows, ctx.meta);
    const auto text = body.str();
    os << text.substr(text.find('\n') + 1);
  });
}

inline void cmd_sweep(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto series = split_list(c.get_string("sweep.series", ""));
  if (series.empty()) {
    run_one_sweep(ctx, c, "sweep.csv");
    return;
  }
  for (const auto& name : series) run_one_sweep(ctx, c.with_section_overrides("series_" + name), "sweep_" + name + ".csv");
}

// --- fit ---------------------------------------------------------------------

// Two numeric columns (lambda_nm, V_cm-1). Blank lines and '#' comments are
// skipped; a single non-numeric header line is allowed before the data.
inline std::vector<std::pair<double, double>> read_fit_csv(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("fit: cannot open data file '" + path.string() + "'");
  std::vector<std::pair<double, double>> pts;
  std::string line;
  bool header_allowed = true;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_list(t);
    auto parse = [](const std::string& s, double& x) {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      return ec == std::errc() && p == s.data() + s.size() && std::isfinite(x);
    };
    double l = 0.0, v = 0.0;
    const bool ok = fields.size() == 2 && parse(fields[0], l) && parse(fields[1], v);
    if (!ok) {
      if (header_allowed && fields.size() == 2) {
        header_allowed = false;
        continue;
      }
      throw ConfigError("fit: " + path.filename().string() + " line " + std::to_string(lineno) +
                        ": expected two numeric fields, got '" + t + "'");
    }
    header_allowed = false;
    pts.emplace_back(l, v);
  }
  return pts;
}

inline void cmd_fit(const RunContext& ctx, const std::string& data_flag) {
  const auto& c = ctx.config;
  const auto data = data_flag.empty() ? c.resolve_path(c.require_string("fit.data")) : fs::path(data_flag);
  const auto pts = read_fit_csv(data);
  const auto f = fit_quadratic(pts);
  const long curve_points = c.get_int("fit.curve_points", 101);
  if (curve_points < 2) throw ConfigError("config: fit.curve_points must be >= 2");

  json report{{"data", data.filename().string()},
              {"synthetic", c.get_bool("fit.synthetic", false)},
              {"points", f.points},
              {"coefficients", {{"a", f.model.a}, {"b", f.model.b}, {"c", f.model.c}}},
              {"model", "V(lambda) = a + b*lambda + c*lambda^2, lambda in nm, V in cm^-1"},
              {"rms_residual", f.rms_residual},
              {"range_nm", {f.model.lambda_min, f.model.lambda_max}},
              {"monotone", f.monotone}};
  const double ref = c.get_double("fit.reference_lambda", 730.0);
  if (f.model.in_range(ref)) report["value_at_reference"] = {{"lambda", ref}, {"V", f.model.value(ref)}};
  write_json(ctx, "fit_report.json", report);

  write_file(ctx, "fit_curve.csv", [&](std::ostream& os) {
    write_meta_comment(os, ctx.meta);
    os << "lambda_nm,V_fit_cm-1\n";
    for (double l : linear_lambda_grid(f.model.lambda_min, f.model.lambda_max, static_cast<std::size_t>(curve_points)))
      os << format_double(l) << ',' << format_double(f.model.value(l)) << '\n';
  });
}

}  // namespace latticeqo::cli
