#pragma once

// Analytic bands of the infinite lattices, numerical spectra of finite ones,
// and the density-of-states histogram.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"
#include "latticeqo/lattice.hpp"

namespace latticeqo {

struct KPoint {
  double kx = 0.0;  // rad/um
  double ky = 0.0;
};

struct BandModel {
  LatticeKind kind = LatticeKind::Square;
  double vx = 1.0;
  double vy = 1.0;
  double dx = 1.0;
  double dy = 1.0;

  static BandModel from(const LatticeSpec& s) { return {s.kind, s.vx, s.vy, s.dx, s.dy}; }
  int band_count() const { return kind == LatticeKind::Square ? 1 : 3; }
};

inline double square_dispersion(const KPoint& k, const BandModel& m) {
  if (m.kind != LatticeKind::Square) throw ValidationError("square_dispersion: model is not a square lattice");
  return 2.0 * m.vx * std::cos(k.kx * m.dx) + 2.0 * m.vy * std::cos(k.ky * m.dy);
}

// (E-, 0, E+); the middle band is exactly zero.
inline std::array<double, 3> lieb_dispersion(const KPoint& k, const BandModel& m) {
  if (m.kind != LatticeKind::Lieb) throw ValidationError("lieb_dispersion: model is not a Lieb lattice");
  const double cx = m.vx * std::cos(k.kx * m.dx);
  const double cy = m.vy * std::cos(k.ky * m.dy);
  const double e = 2.0 * std::sqrt(cx * cx + cy * cy);
  return {-e, 0.0, e};
}

inline std::vector<double> band_energies(const KPoint& k, const BandModel& m) {
  if (m.kind == LatticeKind::Square) return {square_dispersion(k, m)};
  const auto e = lieb_dispersion(k, m);
  return {e.begin(), e.end()};
}

// Analytic gradient dE/dk (cm^-1 um) of one band. Returns nullopt where the
// band is not differentiable: the Lieb dispersive bands at the point where
// they touch the flat band.
inline std::optional<std::array<double, 2>> group_velocity(const BandModel& m, int band, const KPoint& k) {
  if (band < 0 || band >= m.band_count())
    throw ValidationError("group_velocity: band index " + std::to_string(band) + " out of range");
  const double sx = std::sin(k.kx * m.dx);
  const double sy = std::sin(k.ky * m.dy);
  if (m.kind == LatticeKind::Square) return std::array<double, 2>{-2.0 * m.vx * m.dx * sx, -2.0 * m.vy * m.dy * sy};
  if (band == 1) return std::array<double, 2>{0.0, 0.0};
  const double cx = std::cos(k.kx * m.dx);
  const double cy = std::cos(k.ky * m.dy);
  const double q = m.vx * m.vx * cx * cx + m.vy * m.vy * cy * cy;
  // cos(pi/2) is ~6e-17 in floating point, so the touching point needs a floor
  if (q <= 1e-28 * (m.vx * m.vx + m.vy * m.vy)) return std::nullopt;
  // E+ = 2 sqrt(q)  =>  dE+/dk = q' / sqrt(q)
  const double sign = band == 2 ? 1.0 : -1.0;
  const double root = std::sqrt(q);
  return std::array<double, 2>{sign * (-2.0 * m.vx * m.vx * m.dx * cx * sx) / root,
                               sign * (-2.0 * m.vy * m.vy * m.dy * cy * sy) / root};
}

// Allowed Bloch vectors of a periodic lattice. The Lieb cell is two
// nearest-neighbour spacings wide.
inline std::vector<KPoint> periodic_k_grid(const LatticeSpec& s) {
  s.validate();
  if (s.boundary != Boundary::Periodic) throw ValidationError("periodic_k_grid: lattice is not periodic");
  const double cell = s.kind == LatticeKind::Square ? 1.0 : 2.0;
  std::vector<KPoint> ks;
  ks.reserve(static_cast<std::size_t>(s.nx) * s.ny);
  for (int my = 0; my < s.ny; ++my)
    for (int mx = 0; mx < s.nx; ++mx)
      ks.push_back({2.0 * std::numbers::pi * mx / (s.nx * cell * s.dx), 2.0 * std::numbers::pi * my / (s.ny * cell * s.dy)});
  return ks;
}

// Sorted multiset of analytic band energies on the periodic k-grid, shifted by
// the onsite energy. Same length as the numerical spectrum of build_lattice(s).
inline std::vector<double> analytic_periodic_spectrum(const LatticeSpec& s) {
  const auto model = BandModel::from(s);
  std::vector<double> out;
  for (const auto& k : periodic_k_grid(s))
    for (double e : band_energies(k, model)) out.push_back(e + s.onsite);
  std::sort(out.begin(), out.end());
  return out;
}

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;                 // ascending
  std::optional<Eigen::MatrixXd> eigenvectors; // columns, orthonormal
};

struct EigenOptions {
  // Dense diagonalisation above this size is refused; large systems are
  // meant to go through the Chebyshev propagator instead.
  std::size_t dense_threshold = 4096;
};

inline SpectrumResult eigendecompose(const Hamiltonian& h, bool keep_vectors, const EigenOptions& opt = {}) {
  if (h.dim() == 0) throw ValidationError("eigendecompose: empty Hamiltonian");
  if (h.dim() > opt.dense_threshold)
    throw SolverError("eigendecompose: dimension " + std::to_string(h.dim()) + " exceeds the dense threshold " +
                      std::to_string(opt.dense_threshold));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.dense(),
                                                        keep_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw SolverError("eigendecompose: self-adjoint solver failed (Eigen info " + std::to_string(int(solver.info())) +
                      ", dim " + std::to_string(h.dim()) + ")");
  SpectrumResult r;
  r.eigenvalues = solver.eigenvalues();
  if (keep_vectors) r.eigenvectors = solver.eigenvectors();
  return r;
}

inline double default_zero_tolerance(const Hamiltonian& h) { return 1e-8 * h.max_abs(); }

inline std::size_t flat_band_count(const Eigen::VectorXd& eigs, double tol, double center = 0.0) {
  if (!(tol > 0.0)) throw ValidationError("flat_band_count: tolerance must be positive");
  std::size_t n = 0;
  for (double e : eigs)
    if (std::abs(e - center) <= tol) ++n;
  return n;
}

struct DOSHistogram {
  std::vector<double> bin_edges;
  std::vector<long> counts;

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
  long total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
  }
};

// Either a fixed width with one bin centred on `center`, or a fixed number of
// equal bins spanning [min, max].
struct DOSBinning {
  double width = 0.1;
  double center = 0.0;
  std::optional<int> count;

  // 0.1 max(|Vx|, |Vy|), one bin symmetric about omega_B.
  static DOSBinning for_lattice(const LatticeSpec& s) {
    const double v = std::max(std::abs(s.vx), std::abs(s.vy));
    return {0.1 * (v > 0.0 ? v : 1.0), s.onsite, std::nullopt};
  }
};

inline DOSHistogram dos_histogram(const Eigen::VectorXd& eigs, const DOSBinning& rule) {
  if (eigs.size() == 0) throw ValidationError("dos_histogram: empty eigenvalue list");
  const double lo = eigs.minCoeff();
  const double hi = eigs.maxCoeff();
  DOSHistogram h;

  if (rule.count) {
    const int nb = *rule.count;
    if (nb < 1) throw ValidationError("dos_histogram: bin count must be >= 1");
    if (hi == lo) {
      h.bin_edges = {lo - 0.5 * rule.width, lo + 0.5 * rule.width};
      h.counts = {static_cast<long>(eigs.size())};
      return h;
    }
    const double w = (hi - lo) / nb;
    for (int b = 0; b <= nb; ++b) h.bin_edges.push_back(b == nb ? hi : lo + b * w);
    h.counts.assign(nb, 0);
    for (double e : eigs) {
      int b = static_cast<int>(std::floor((e - lo) / w));
      h.counts[std::clamp(b, 0, nb - 1)]++;
    }
    return h;
  }

  if (!(rule.width > 0.0)) throw ValidationError("dos_histogram: bin width must be positive");
  // Bin k covers [center + (k - 1/2) w, center + (k + 1/2) w).
  auto bin_of = [&](double e) { return static_cast<long>(std::floor((e - rule.center) / rule.width + 0.5)); };
  const long klo = bin_of(lo);
  const long khi = bin_of(hi);
  for (long k = klo; k <= khi + 1; ++k) h.bin_edges.push_back(rule.center + (static_cast<double>(k) - 0.5) * rule.width);
  h.counts.assign(static_cast<std::size_t>(khi - klo + 1), 0);
  for (double e : eigs) h.counts[static_cast<std::size_t>(bin_of(e) - klo)]++;
  return h;
}

// --- CSV emitters ----------------------------------------------------------

// Band surface on an n x n grid with k_x d_x, k_y d_y in [-pi, pi).
inline void write_band_csv(std::ostream& os, const BandModel& m, int n, const OutputMeta& meta = {}) {
  if (n < 1) throw ValidationError("write_band_csv: k-grid size must be >= 1");
  write_meta_comment(os, meta);
  os << "kx,ky";
  for (int b = 0; b < m.band_count(); ++b) os << ",E" << b;
  os << '\n';
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const KPoint k{(-std::numbers::pi + 2.0 * std::numbers::pi * ix / n) / m.dx,
                     (-std::numbers::pi + 2.0 * std::numbers::pi * iy / n) / m.dy};
      os << format_double(k.kx) << ',' << format_double(k.ky);
      for (double e : band_energies(k, m)) os << ',' << format_double(e);
      os << '\n';
    }
  }
}

inline void write_eigenvalues_csv(std::ostream& os, const Eigen::VectorXd& eigs, const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "index,E\n";
  for (Eigen::Index k = 0; k < eigs.size(); ++k) os << k << ',' << format_double(eigs[k]) << '\n';
}

inline void write_dos_csv(std::ostream& os, const DOSHistogram& h, const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.bins(); ++b)
    os << format_double(h.bin_edges[b]) << ',' << format_double(h.bin_edges[b + 1]) << ',' << h.counts[b] << '\n';
}

}  // namespace latticeqo
