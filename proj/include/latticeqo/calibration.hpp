#pragma once

// Wavelength-scan analogy: coupling constants grow with the excitation
// wavelength, so a scan over lambda at fixed device length L behaves like a
// scan over propagation distance. V(lambda) is modelled as a quadratic and the
// lambda <-> z correspondence as the line lambda = lambda0 + alpha z.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "latticeqo/dynamics.hpp"
#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"
#include "latticeqo/lattice.hpp"
#include "latticeqo/observables.hpp"

namespace latticeqo {

// V(lambda) = a + b lambda + c lambda^2, lambda in nm, V in cm^-1.
struct CouplingModel {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double lambda_min = 600.0;
  double lambda_max = 800.0;

  double value(double lambda) const { return a + (b + c * lambda) * lambda; }
  double slope(double lambda) const { return b + 2.0 * c * lambda; }
  bool in_range(double lambda) const { return lambda >= lambda_min && lambda <= lambda_max; }

  // Positive and increasing over the valid range. The slope is linear in
  // lambda, so checking both ends is enough.
  bool monotone_positive() const {
    return value(lambda_min) > 0.0 && slope(lambda_min) >= 0.0 && slope(lambda_max) >= 0.0;
  }

  void validate() const {
    if (!(lambda_min < lambda_max)) throw ValidationError("coupling model: empty wavelength range");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
      throw ValidationError("coupling model: non-finite coefficients");
    if (!monotone_positive())
      throw ValidationError("coupling model: V(lambda) must be positive and increasing on [" +
                            format_double(lambda_min) + ", " + format_double(lambda_max) + "] nm");
  }

  // Synthetic default: the quadratic through (600, 0.70), (730, 0.90) and
  // (800, 1.04). Only the 730 nm anchor is a measured value; the other two
  // points are placeholders that give a mildly convex, increasing curve.
  static CouplingModel synthetic_default() {
    Eigen::Matrix3d m;
    Eigen::Vector3d v;
    const double l[3] = {600.0, 730.0, 800.0};
    const double y[3] = {0.70, 0.90, 1.04};
    for (int i = 0; i < 3; ++i) {
      m.row(i) << 1.0, l[i], l[i] * l[i];
      v[i] = y[i];
    }
    const Eigen::Vector3d p = m.fullPivLu().solve(v);
    return {p[0], p[1], p[2], 600.0, 800.0};
  }
};

inline double coupling_at(const CouplingModel& m, double lambda) {
  if (!m.in_range(lambda))
    throw ValidationError("coupling_at: lambda " + format_double(lambda) + " nm outside [" + format_double(m.lambda_min) +
                          ", " + format_double(m.lambda_max) + "]");
  return m.value(lambda);
}

struct QuadraticFit {
  CouplingModel model;
  double rms_residual = 0.0;
  bool monotone = false;
  std::size_t points = 0;
};

// Least-squares quadratic through (lambda, V) points. The valid range is the
// span of the data. Solved in a centred, scaled variable for conditioning.
inline QuadraticFit fit_quadratic(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3) throw ValidationError("fit_quadratic: need at least 3 points, got " + std::to_string(pts.size()));
  std::set<double> distinct;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
  for (const auto& [l, v] : pts) {
    if (!std::isfinite(l) || !std::isfinite(v)) throw ValidationError("fit_quadratic: non-finite data");
    distinct.insert(l);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
    mean += l;
  }
  if (distinct.size() < 3) throw ValidationError("fit_quadratic: need at least 3 distinct wavelengths");
  mean /= static_cast<double>(pts.size());
  const double scale = 0.5 * (hi - lo);

  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (pts[i].first - mean) / scale;
    x.row(i) << 1.0, t, t * t;
    y[i] = pts[i].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3) throw ValidationError("fit_quadratic: design matrix is rank deficient");
  const Eigen::Vector3d p = qr.solve(y);

  // back to powers of lambda
  QuadraticFit f;
  f.model.c = p[2] / (scale * scale);
  f.model.b = p[1] / scale - 2.0 * p[2] * mean / (scale * scale);
  f.model.a = p[0] - p[1] * mean / scale + p[2] * mean * mean / (scale * scale);
  f.model.lambda_min = lo;
  f.model.lambda_max = hi;
  f.rms_residual = std::sqrt((x * p - y).squaredNorm() / static_cast<double>(n));
  f.monotone = f.model.monotone_positive();
  f.points = pts.size();
  return f;
}

// lambda = lambda0 + alpha z over the wavelength window [lambda_min, lambda_max].
struct ZLambdaMap {
  double lambda0 = 0.0;  // nm
  double alpha = 1.0;    // nm / cm
  double length = 5.0;   // device length L, cm
  double lambda_min = 600.0;
  double lambda_max = 800.0;

  void validate() const {
    if (!(alpha != 0.0) || !std::isfinite(alpha) || !std::isfinite(lambda0))
      throw ValidationError("z-lambda map: alpha must be finite and non-zero");
    if (!(length > 0.0)) throw ValidationError("z-lambda map: length must be positive");
  }

  // Linearisation of the effective distance z(lambda) = L V(lambda) / V(ref)
  // around the reference wavelength, where z(ref) = L.
  static ZLambdaMap from_coupling(const CouplingModel& m, double reference_lambda, double length) {
    const double v = coupling_at(m, reference_lambda);
    const double dv = m.slope(reference_lambda);
    if (!(dv > 0.0)) throw ValidationError("z-lambda map: coupling model has no positive slope at the reference");
    ZLambdaMap map{reference_lambda - v / dv, v / (length * dv), length, m.lambda_min, m.lambda_max};
    map.validate();
    return map;
  }
};

inline double lambda_to_z(const ZLambdaMap& map, double lambda) {
  if (lambda < map.lambda_min || lambda > map.lambda_max)
    throw ValidationError("lambda_to_z: lambda " + format_double(lambda) + " nm outside the map window");
  return (lambda - map.lambda0) / map.alpha;
}

inline double z_to_lambda(const ZLambdaMap& map, double z) {
  const double lambda = map.lambda0 + map.alpha * z;
  // tolerate rounding at the window edges
  const double slack = 1e-9 * std::max(1.0, std::abs(lambda));
  if (lambda < map.lambda_min - slack || lambda > map.lambda_max + slack)
    throw ValidationError("z_to_lambda: z " + format_double(z) + " cm maps outside the wavelength window");
  return lambda;
}

enum class SweepMode {
  Coupling,  // V1 = V(lambda), V2 = ratio V1, fixed length L
  Distance,  // V1 = V(reference), z = lambda_to_z(lambda)
};

struct EmitterTemplate {
  double ratio = 0.5;  // V2 / V1
  SiteLabel attachment;
  std::optional<double> omega0;
};

struct SweepConfig {
  std::vector<double> lambdas;
  LatticeSpec lattice;
  std::optional<EmitterTemplate> emitter;
  SiteLabel initial = SiteLabel::emitter();
  SweepMode mode = SweepMode::Coupling;
  double length = 5.0;
  double reference_lambda = 730.0;
  PropagatorKind propagator = PropagatorKind::Exact;
  double tolerance = 1e-10;
};

struct SweepRow {
  double lambda = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double z = 0.0;
  double qe_population = std::nan("");
  double participation = 0.0;
};

struct SweepPoint {
  SystemGraph graph;
  Hamiltonian hamiltonian;
  double v1;
  double v2;
  double z;
};

// System and propagation distance for one wavelength.
inline SweepPoint sweep_point(const SweepConfig& cfg, const CouplingModel& model, const ZLambdaMap& map,
                              double lambda) {
  double v1 = 0.0, z = 0.0;
  if (cfg.mode == SweepMode::Coupling) {
    v1 = coupling_at(model, lambda);
    z = cfg.length;
  } else {
    v1 = coupling_at(model, cfg.reference_lambda);
    z = lambda_to_z(map, lambda);
  }
  LatticeSpec spec = cfg.lattice;
  spec.vx = v1;
  spec.vy = v1;
  SystemGraph g = build_lattice(spec);
  double v2 = 0.0;
  if (cfg.emitter) {
    v2 = cfg.emitter->ratio * v1;
    g = attach_emitter(g, {v2, cfg.emitter->attachment, cfg.emitter->omega0});
  }
  Hamiltonian h = assemble_hamiltonian(g);
  return {std::move(g), std::move(h), v1, v2, z};
}

inline SweepRow sweep_evaluate(const SweepConfig& cfg, const CouplingModel& model, const ZLambdaMap& map,
                               double lambda) {
  try {
    const auto pt = sweep_point(cfg, model, map, lambda);
    const auto psi0 = single_site_excitation(pt.graph, cfg.initial);
    StateVector psi;
    if (pt.z == 0.0) {
      psi = psi0;
    } else if (cfg.propagator == PropagatorKind::Exact) {
      psi = ExactPropagator(pt.hamiltonian).apply(psi0, pt.z);
    } else {
      if (pt.z < 0.0) throw ValidationError("chebyshev propagation needs a positive distance");
      psi = evolve_chebyshev(pt.hamiltonian, psi0, ZGrid(pt.z, 2), cfg.tolerance).states.back();
    }
    SweepRow row{lambda, pt.v1, pt.v2, pt.z, std::nan(""), participation_ratio(psi)};
    if (const auto em = pt.graph.emitter_index()) row.qe_population = std::norm(psi.amplitudes[static_cast<Eigen::Index>(*em)]);
    return row;
  } catch (const ValidationError& e) {
    throw ValidationError("sweep at lambda=" + format_double(lambda) + " nm: " + e.what());
  } catch (const SolverError& e) {
    throw SolverError("sweep at lambda=" + format_double(lambda) + " nm: " + e.what());
  }
}

// Rows ordered by lambda. Each point is independent of the others.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const CouplingModel& model, const ZLambdaMap& map) {
  if (cfg.lambdas.empty()) throw ValidationError("run_sweep: empty wavelength grid");
  model.validate();
  map.validate();
  if (cfg.mode == SweepMode::Coupling && !(cfg.length > 0.0)) throw ValidationError("run_sweep: length must be positive");
  std::vector<double> lambdas = cfg.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  for (double l : lambdas) rows.push_back(sweep_evaluate(cfg, model, map, l));
  return rows;
}

inline std::vector<double> linear_lambda_grid(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> out(points);
  for (std::size_t k = 0; k < points; ++k)
    out[k] = k + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  return out;
}

// Centred moving average over `window` points; the output is shorter by window - 1.
inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
  if (window == 0 || v.size() < window) return {};
  std::vector<double> out;
  for (std::size_t k = 0; k + window <= v.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < window; ++j) s += v[k + j];
    out.push_back(s / static_cast<double>(window));
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "lambda_nm,V1_cm-1,V2_cm-1,qe_population,R,z_cm\n";
  for (const auto& r : rows)
    os << format_double(r.lambda) << ',' << format_double(r.v1) << ',' << format_double(r.v2) << ','
       << format_double(r.qe_population) << ',' << format_double(r.participation) << ',' << format_double(r.z) << '\n';
}

}  // namespace latticeqo
