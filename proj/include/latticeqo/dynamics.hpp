#pragma once

// Evolution of the single-excitation amplitudes along the propagation
// coordinate z, i dpsi/dz = H psi, so psi(z) = exp(-i H z) psi(0).
// H is in cm^-1 and z in cm.
//
// Two independent propagators are provided so that each can check the other:
// a full eigendecomposition (exact up to the dense solver) and a Chebyshev
// expansion of the step operator that only needs sparse matrix-vector products.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "latticeqo/error.hpp"
#include "latticeqo/io.hpp"
#include "latticeqo/lattice.hpp"
#include "latticeqo/spectrum.hpp"

namespace latticeqo {

using cplx = std::complex<double>;

struct StateVector {
  Eigen::VectorXcd amplitudes;

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes.size()); }
  double norm_squared() const { return amplitudes.squaredNorm(); }
};

// Uniform grid over [0, z_max], endpoints included.
class ZGrid {
 public:
  explicit ZGrid(double z_max, std::size_t samples = 201) : z_max_(z_max), samples_(samples) {
    if (!(z_max > 0.0) || !std::isfinite(z_max)) throw ValidationError("ZGrid: z_max must be positive");
    if (samples < 2) throw ValidationError("ZGrid: need at least 2 samples");
    values_.resize(samples);
    for (std::size_t j = 0; j < samples; ++j)
      values_[j] = j + 1 == samples ? z_max : z_max * static_cast<double>(j) / static_cast<double>(samples - 1);
  }

  double z_max() const { return z_max_; }
  std::size_t size() const { return samples_; }
  double step() const { return z_max_ / static_cast<double>(samples_ - 1); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }

  // Grid index closest to z.
  std::size_t nearest(double z) const {
    const double j = std::round(z / step());
    if (j <= 0.0) return 0;
    return std::min(samples_ - 1, static_cast<std::size_t>(j));
  }

 private:
  double z_max_;
  std::size_t samples_;
  std::vector<double> values_;
};

struct PropagatorInfo {
  std::string id;               // "exact" or "chebyshev"
  double tolerance = 0.0;       // requested max-norm accuracy (chebyshev)
  int chebyshev_order = 0;      // terms per step (chebyshev)
  double spectral_center = 0.0;
  double spectral_half_width = 0.0;
};

struct StateTrajectory {
  ZGrid grid;
  std::vector<StateVector> states;
  PropagatorInfo info;
};

inline StateVector single_site_excitation(const SystemGraph& g, const SiteLabel& label) {
  StateVector s;
  s.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g.size()));
  s.amplitudes[static_cast<Eigen::Index>(g.index_of(label))] = 1.0;
  return s;
}

namespace detail {

inline void check_state(const Hamiltonian& h, const StateVector& psi) {
  if (psi.dim() != h.dim())
    throw ValidationError("propagator: state dimension " + std::to_string(psi.dim()) +
                          " does not match Hamiltonian dimension " + std::to_string(h.dim()));
}

}  // namespace detail

// exp(-i H z) through the eigenbasis of H. Usable for any real z, including
// negative ones.
class ExactPropagator {
 public:
  explicit ExactPropagator(const Hamiltonian& h, const EigenOptions& opt = {})
      : spectrum_(eigendecompose(h, true, opt)), dim_(h.dim()) {}

  const SpectrumResult& spectrum() const { return spectrum_; }

  StateVector apply(const StateVector& psi, double z) const {
    if (psi.dim() != dim_) throw ValidationError("ExactPropagator: state dimension mismatch");
    const auto& v = *spectrum_.eigenvectors;
    const auto& e = spectrum_.eigenvalues;
    // coefficients in the eigenbasis, V real
    const Eigen::VectorXd cr = v.transpose() * psi.amplitudes.real();
    const Eigen::VectorXd ci = v.transpose() * psi.amplitudes.imag();
    Eigen::VectorXd re(e.size()), im(e.size());
    for (Eigen::Index k = 0; k < e.size(); ++k) {
      const double ph = -e[k] * z;
      const double c = std::cos(ph), s = std::sin(ph);
      re[k] = c * cr[k] - s * ci[k];
      im[k] = s * cr[k] + c * ci[k];
    }
    StateVector out;
    out.amplitudes.resize(static_cast<Eigen::Index>(dim_));
    out.amplitudes.real() = v * re;
    out.amplitudes.imag() = v * im;
    return out;
  }

 private:
  SpectrumResult spectrum_;
  std::size_t dim_;
};

inline StateTrajectory evolve_exact(const Hamiltonian& h, const StateVector& psi0, const ZGrid& grid,
                                    const EigenOptions& opt = {}) {
  detail::check_state(h, psi0);
  const ExactPropagator prop(h, opt);
  StateTrajectory t{grid, {}, {"exact"}};
  t.states.reserve(grid.size());
  t.states.push_back(psi0);
  for (std::size_t j = 1; j < grid.size(); ++j) t.states.push_back(prop.apply(psi0, grid[j]));
  return t;
}

// Chebyshev expansion of exp(-i H dz):
//   exp(-i H dz) = exp(-i c dz) sum_n (2 - delta_n0) (-i)^n J_n(a dz) T_n((H - c) / a)
// with [c - a, c + a] a padded Gershgorin enclosure of the spectrum.
class ChebyshevPropagator {
 public:
  static constexpr double kBoundSafety = 1.05;

  ChebyshevPropagator(const Hamiltonian& h, double dz, double step_tol) : h_(&h), dz_(dz) {
    if (!(step_tol > 0.0)) throw ValidationError("ChebyshevPropagator: tolerance must be positive");
    const auto [lo, hi] = h.gershgorin();
    center_ = 0.5 * (lo + hi);
    half_width_ = kBoundSafety * 0.5 * (hi - lo);
    if (half_width_ == 0.0) return;  // H = c I, pure phase
    const double x = half_width_ * dz;
    coeffs_.push_back(std::cyl_bessel_j(0.0, x));
    cplx minus_i_pow = 1.0;
    for (int n = 1;; ++n) {
      minus_i_pow *= cplx(0.0, -1.0);
      const double jn = std::cyl_bessel_j(static_cast<double>(n), x);
      if (n > x && 2.0 * std::abs(jn) < step_tol) break;
      coeffs_.push_back(2.0 * minus_i_pow * jn);
      if (n > 100000) throw SolverError("ChebyshevPropagator: expansion did not converge");
    }
  }

  int order() const { return static_cast<int>(coeffs_.size()); }
  double center() const { return center_; }
  double half_width() const { return half_width_; }

  // One step of length dz, in place.
  void step(Eigen::VectorXcd& psi) {
    const cplx global = std::exp(cplx(0.0, -center_ * dz_));
    if (half_width_ == 0.0) {
      psi *= global;
      return;
    }
    prev_ = psi;
    acc_ = coeffs_[0] * prev_;
    if (coeffs_.size() > 1) {
      apply_scaled(prev_, cur_);
      acc_ += coeffs_[1] * cur_;
    }
    for (std::size_t n = 2; n < coeffs_.size(); ++n) {
      apply_scaled(cur_, next_);
      next_ = 2.0 * next_ - prev_;
      acc_ += coeffs_[n] * next_;
      std::swap(prev_, cur_);
      std::swap(cur_, next_);
    }
    psi = global * acc_;
  }

 private:
  // out = (H - c) in / a
  void apply_scaled(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    const auto& m = h_->matrix;
    out = (-center_) * in;
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) out[it.row()] += it.value() * in[k];
    out /= half_width_;
  }

  const Hamiltonian* h_;
  double dz_;
  double center_ = 0.0;
  double half_width_ = 0.0;
  std::vector<cplx> coeffs_;
  Eigen::VectorXcd prev_, cur_, next_, acc_;
};

// Steps through the grid. The per-step truncation budget is tol / (2 steps),
// so the accumulated max-norm deviation from the exact evolution stays below tol.
inline StateTrajectory evolve_chebyshev(const Hamiltonian& h, const StateVector& psi0, const ZGrid& grid,
                                        double tol = 1e-10) {
  detail::check_state(h, psi0);
  const std::size_t steps = grid.size() - 1;
  const double attainable = 1e-15 * static_cast<double>(steps + 10);
  if (!(tol >= attainable))
    throw SolverError("evolve_chebyshev: tolerance " + format_double(tol) + " is below the attainable precision " +
                      format_double(attainable));
  ChebyshevPropagator prop(h, grid.step(), tol / (2.0 * static_cast<double>(steps)));
  StateTrajectory t{grid, {}, {"chebyshev", tol, prop.order(), prop.center(), prop.half_width()}};
  t.states.reserve(grid.size());
  t.states.push_back(psi0);
  Eigen::VectorXcd psi = psi0.amplitudes;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    prop.step(psi);
    t.states.push_back({psi});
  }
  return t;
}

enum class PropagatorKind { Exact, Chebyshev };

inline StateTrajectory evolve(const Hamiltonian& h, const StateVector& psi0, const ZGrid& grid, PropagatorKind kind,
                              double tol = 1e-10) {
  return kind == PropagatorKind::Exact ? evolve_exact(h, psi0, grid) : evolve_chebyshev(h, psi0, grid, tol);
}

// Row per grid point: z, then |c_n|^2 for every site in site order.
inline void write_trajectory_csv(std::ostream& os, const StateTrajectory& t, const SystemGraph& g,
                                 const OutputMeta& meta = {}) {
  write_meta_comment(os, meta);
  os << "z";
  for (const auto& l : g.sites()) os << ",\"" << to_string(l) << '"';
  os << '\n';
  for (std::size_t j = 0; j < t.grid.size(); ++j) {
    os << format_double(t.grid[j]);
    for (Eigen::Index n = 0; n < t.states[j].amplitudes.size(); ++n)
      os << ',' << format_double(std::norm(t.states[j].amplitudes[n]));
    os << '\n';
  }
}

}  // namespace latticeqo
