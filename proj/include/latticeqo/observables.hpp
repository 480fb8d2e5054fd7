#pragma once

// Diagnostics computed from trajectories: emitter population, participation
// ratio, intensity profiles, population revivals, and the flat-band oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <vector>

#include "latticeqo/dynamics.hpp"
#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"
#include "latticeqo/lattice.hpp"
#include "latticeqo/spectrum.hpp"

namespace latticeqo {

struct ObservableSeries {
  std::vector<double> z;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

inline ObservableSeries qe_population(const StateTrajectory& t, const SystemGraph& g) {
  const auto em = g.emitter_index();
  if (!em) throw ValidationError("qe_population: system has no emitter");
  ObservableSeries s{t.grid.values(), {}};
  s.values.reserve(t.states.size());
  for (const auto& st : t.states) s.values.push_back(std::norm(st.amplitudes[static_cast<Eigen::Index>(*em)]));
  return s;
}

// R = (sum P_n)^2 / sum P_n^2 with P_n = |c_n|^2: the effective number of
// excited sites.
inline double participation_ratio(const StateVector& psi) {
  double s1 = 0.0, s2 = 0.0;
  for (const auto& c : psi.amplitudes) {
    const double p = std::norm(c);
    s1 += p;
    s2 += p * p;
  }
  if (s2 == 0.0) throw ValidationError("participation_ratio: zero state");
  return s1 * s1 / s2;
}

inline ObservableSeries participation_series(const StateTrajectory& t) {
  ObservableSeries s{t.grid.values(), {}};
  for (const auto& st : t.states) s.values.push_back(participation_ratio(st));
  return s;
}

inline std::vector<double> intensity_profile(const StateVector& psi) {
  std::vector<double> p(psi.dim());
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = std::norm(psi.amplitudes[static_cast<Eigen::Index>(n)]);
  return p;
}

struct Revival {
  double z;
  double peak;
};

struct RevivalReport {
  bool decayed = false;
  double decay_z = std::nan("");  // first grid point below the decay threshold
  std::vector<Revival> revivals;
  double max_revival = 0.0;
};

struct RevivalThresholds {
  double decay = 0.1;     // fraction of the initial value
  double revival = 0.05;  // fraction of the initial value
};

// Decay is the first sample strictly below decay * initial. Revivals are
// discrete 3-point local maxima after that sample that exceed
// revival * initial. No interpolation between grid points.
inline RevivalReport detect_revivals(const ObservableSeries& s, const RevivalThresholds& th = {}) {
  if (!(th.decay > 0.0 && th.decay < 1.0) || !(th.revival > 0.0 && th.revival < 1.0))
    throw ValidationError("detect_revivals: thresholds must lie in (0, 1)");
  RevivalReport r;
  const auto& v = s.values;
  if (v.empty()) return r;
  const double initial = v.front();
  std::size_t first = v.size();
  for (std::size_t j = 0; j < v.size(); ++j)
    if (v[j] < th.decay * initial) {
      first = j;
      break;
    }
  if (first == v.size()) return r;
  r.decayed = true;
  r.decay_z = s.z[first];
  for (std::size_t j = std::max<std::size_t>(first, 1); j + 1 < v.size(); ++j) {
    if (v[j] > v[j - 1] && v[j] >= v[j + 1] && v[j] > th.revival * initial) {
      r.revivals.push_back({s.z[j], v[j]});
      r.max_revival = std::max(r.max_revival, v[j]);
    }
  }
  return r;
}

// Emitter population for an emitter coupled only to an ideal flat band:
// amplitude cos(V2 z / (2 sqrt(N))), squared.
inline double fb_oracle_population(double v2, double n, double z) {
  if (!(n >= 1.0)) throw ValidationError("fb_oracle_population: N must be >= 1");
  const double c = std::cos(v2 * z / (2.0 * std::sqrt(n)));
  return c * c;
}

// Orthonormal basis (columns) of the eigenspace of the lattice Hamiltonian
// with |E - energy| <= tol.
inline Eigen::MatrixXd flat_band_subspace(const Hamiltonian& lattice, double energy, double tol) {
  const auto spec = eigendecompose(lattice, true);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k)
    if (std::abs(spec.eigenvalues[k] - energy) <= tol) cols.push_back(k);
  Eigen::MatrixXd basis(lattice.matrix.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = spec.eigenvectors->col(cols[c]);
  return basis;
}

struct ProjectedCoupling {
  double v2 = 0.0;
  std::size_t attachment = 0;   // lattice site index n0
  double omega0 = 0.0;
  double flat_band_energy = 0.0;
};

// Emitter coupled to the reservoir through P_FB H_int P_FB only: the
// Hamiltonian in the basis {emitter, flat-band states} is
//   [[omega0, g^T], [g, E_FB 1]],   g_k = V2 <phi_k | n0>.
// Returns the emitter population on the grid, starting fully excited.
inline ObservableSeries fb_projected_evolution(const Eigen::MatrixXd& fb_basis, const ProjectedCoupling& pc,
                                               const ZGrid& grid) {
  const auto m = fb_basis.cols();
  if (m == 0) throw ValidationError("fb_projected_evolution: empty flat-band subspace");
  if (static_cast<Eigen::Index>(pc.attachment) >= fb_basis.rows())
    throw ValidationError("fb_projected_evolution: attachment index out of range");
  std::vector<Eigen::Triplet<double>> trip;
  trip.emplace_back(0, 0, pc.omega0);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double g = pc.v2 * fb_basis(static_cast<Eigen::Index>(pc.attachment), k);
    trip.emplace_back(0, k + 1, g);
    trip.emplace_back(k + 1, 0, g);
    trip.emplace_back(k + 1, k + 1, pc.flat_band_energy);
  }
  Hamiltonian h;
  h.matrix.resize(m + 1, m + 1);
  h.matrix.setFromTriplets(trip.begin(), trip.end());
  StateVector psi0{Eigen::VectorXcd::Zero(m + 1)};
  psi0.amplitudes[0] = 1.0;
  const auto traj = evolve_exact(h, psi0, grid);
  ObservableSeries s{grid.values(), {}};
  for (const auto& st : traj.states) s.values.push_back(std::norm(st.amplitudes[0]));
  return s;
}

struct Cos2Fit {
  double omega = 0.0;  // best fit of cos^2(omega z)
  double r_squared = 0.0;
  double period() const { return std::numbers::pi / omega; }
};

// Least-squares fit of values ~ cos^2(omega z): coarse scan over omega up to
// the grid Nyquist limit, then golden-section refinement of the best bracket.
inline Cos2Fit fit_cos2(const ObservableSeries& s) {
  if (s.size() < 4) throw ValidationError("fit_cos2: need at least 4 samples");
  const double z_span = s.z.back() - s.z.front();
  if (!(z_span > 0.0)) throw ValidationError("fit_cos2: degenerate z range");
  auto sse = [&](double w) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double c = std::cos(w * s.z[j]);
      const double d = s.values[j] - c * c;
      acc += d * d;
    }
    return acc;
  };
  const double dz = z_span / static_cast<double>(s.size() - 1);
  const double w_max = std::numbers::pi / (2.0 * dz);
  const int scan = 20 * static_cast<int>(s.size());
  double best_w = 0.0, best = sse(0.0);
  for (int k = 1; k <= scan; ++k) {
    const double w = w_max * k / scan;
    const double e = sse(w);
    if (e < best) {
      best = e;
      best_w = w;
    }
  }
  double a = std::max(0.0, best_w - w_max / scan), b = best_w + w_max / scan;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = sse(x1), f2 = sse(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = sse(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = sse(x2);
    }
  }
  Cos2Fit fit;
  fit.omega = 0.5 * (a + b);
  double mean = 0.0;
  for (double v : s.values) mean += v;
  mean /= static_cast<double>(s.size());
  double sst = 0.0;
  for (double v : s.values) sst += (v - mean) * (v - mean);
  fit.r_squared = sst > 0.0 ? 1.0 - sse(fit.omega) / sst : 0.0;
  return fit;
}

// N for which cos^2(V2 z / (2 sqrt(N))) oscillates at the fitted frequency.
inline double effective_normalization(double v2, double omega) {
  const double r = v2 / (2.0 * omega);
  return r * r;
}

// --- CSV emitters ----------------------------------------------------------

inline void write_series_csv(std::ostream& os, const ObservableSeries& s, const char* value_name,
                             const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "z," << value_name << '\n';
  for (std::size_t j = 0; j < s.size(); ++j) os << format_double(s.z[j]) << ',' << format_double(s.values[j]) << '\n';
}

// One row per site: label, position (um), intensity.
inline void write_profile_csv(std::ostream& os, const StateVector& psi, const SystemGraph& g, double z,
                              const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "# z=" << format_double(z) << '\n';
  os << "index,site,sublattice,ix,iy,x_um,y_um,intensity\n";
  const auto p = intensity_profile(psi);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto& l = g.sites()[n];
    const auto [x, y] = site_position(g, l);
    os << n << ",\"" << to_string(l) << "\"," << sublattice_char(l.sub) << ',' << l.ix << ',' << l.iy << ','
       << format_double(x) << ',' << format_double(y) << ',' << format_double(p[n]) << '\n';
  }
}

}  // namespace latticeqo
