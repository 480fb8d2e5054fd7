#pragma once

// Square and Lieb lattice reservoirs, the emitter site, and the
// single-excitation Hamiltonian they define.
//
// Site ordering is cell-major and row-major: cell (ix, iy) has rank
// iy * nx + ix, and inside a Lieb cell the sublattices come in the order
// A < B < C. The emitter, when attached, is always the last site.
//
// Lieb cell convention (lengths in units of the nearest-neighbour spacing):
//
//      A (0, 1)
//      |            A-B bonds are vertical   (weight Vy)
//      B (0, 0) -- C (1, 0)   B-C bonds are horizontal (weight Vx)
//
// Neighbouring cells are joined by A(ix, iy) - B(ix, iy + 1) and
// C(ix, iy) - B(ix + 1, iy).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latticeqo/error.hpp"

namespace latticeqo {

enum class LatticeKind { Square, Lieb };
enum class Boundary { Open, Periodic };
enum class Sublattice : std::uint8_t { S, A, B, C, Emitter };

inline std::string_view to_string(LatticeKind k) { return k == LatticeKind::Square ? "square" : "lieb"; }
inline std::string_view to_string(Boundary b) { return b == Boundary::Open ? "open" : "periodic"; }

inline char sublattice_char(Sublattice s) {
  switch (s) {
    case Sublattice::S: return 'S';
    case Sublattice::A: return 'A';
    case Sublattice::B: return 'B';
    case Sublattice::C: return 'C';
    case Sublattice::Emitter: return 'E';
  }
  return '?';
}

struct LatticeSpec {
  LatticeKind kind = LatticeKind::Square;
  int nx = 1;
  int ny = 1;
  double vx = 1.0;      // cm^-1
  double vy = 1.0;      // cm^-1
  double onsite = 0.0;  // omega_B, cm^-1
  Boundary boundary = Boundary::Open;
  double dx = 1.0;  // nearest-neighbour spacing, um
  double dy = 1.0;
  // Lieb + Open only: drop the degree-1 A sites of the top row and C sites of
  // the right column so that every boundary corner is a B site. A 10x10 cell
  // lattice trimmed this way has 280 sites.
  bool trim_dangling = false;

  int sites_per_cell() const { return kind == LatticeKind::Square ? 1 : 3; }

  void validate() const {
    if (nx < 1 || ny < 1) throw ValidationError("lattice: nx and ny must be >= 1");
    if (!std::isfinite(vx) || !std::isfinite(vy)) throw ValidationError("lattice: couplings must be finite");
    if (!std::isfinite(onsite)) throw ValidationError("lattice: onsite energy must be finite");
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
      throw ValidationError("lattice: spacings dx, dy must be positive");
    if (boundary == Boundary::Periodic) {
      // Shorter rings would need merged or self bonds.
      const int min_cells = kind == LatticeKind::Square ? 3 : 2;
      if (nx < min_cells || ny < min_cells)
        throw ValidationError("lattice: periodic " + std::string(to_string(kind)) + " needs at least " +
                              std::to_string(min_cells) + " cells per direction");
      if (trim_dangling) throw ValidationError("lattice: trim_dangling requires an open boundary");
    }
    if (trim_dangling && kind != LatticeKind::Lieb)
      throw ValidationError("lattice: trim_dangling only applies to the Lieb lattice");
  }
};

struct SiteLabel {
  int ix = 0;
  int iy = 0;
  Sublattice sub = Sublattice::S;

  static constexpr SiteLabel emitter() { return {0, 0, Sublattice::Emitter}; }
  constexpr bool is_emitter() const { return sub == Sublattice::Emitter; }

  friend constexpr auto operator<=>(const SiteLabel&, const SiteLabel&) = default;
};

inline std::string to_string(const SiteLabel& l) {
  if (l.is_emitter()) return "E";
  return std::string(1, sublattice_char(l.sub)) + "(" + std::to_string(l.ix) + "," + std::to_string(l.iy) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const SiteLabel& l) { return os << to_string(l); }

// Accepts "E"/"emitter" or "X(ix,iy)" with X in {S, A, B, C}.
inline SiteLabel parse_site_label(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text == "E" || text == "emitter") return SiteLabel::emitter();
  auto bad = [&] { return ValidationError("cannot parse site label '" + std::string(text) + "'"); };
  if (text.size() < 6 || text[1] != '(' || text.back() != ')') throw bad();
  SiteLabel l;
  switch (text[0]) {
    case 'S': l.sub = Sublattice::S; break;
    case 'A': l.sub = Sublattice::A; break;
    case 'B': l.sub = Sublattice::B; break;
    case 'C': l.sub = Sublattice::C; break;
    default: throw bad();
  }
  const std::string inner(text.substr(2, text.size() - 3));
  const auto comma = inner.find(',');
  if (comma == std::string::npos) throw bad();
  try {
    std::size_t used = 0;
    const std::string xs(trim(std::string_view(inner).substr(0, comma)));
    const std::string ys(trim(std::string_view(inner).substr(comma + 1)));
    l.ix = std::stoi(xs, &used);
    if (used != xs.size()) throw bad();
    l.iy = std::stoi(ys, &used);
    if (used != ys.size()) throw bad();
  } catch (const std::logic_error&) {
    throw bad();
  }
  return l;
}

struct EmitterSpec {
  double v2 = 0.0;  // cm^-1
  SiteLabel attachment;
  std::optional<double> omega0;  // defaults to the lattice onsite energy (resonant)
};

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
};

// Explicit site list plus weighted nearest-neighbour bonds. Immutable once
// built; every constructor path checks the structural invariants.
class SystemGraph {
 public:
  SystemGraph(LatticeSpec spec, std::vector<SiteLabel> sites, std::vector<double> onsite, std::vector<Edge> edges)
      : spec_(spec), sites_(std::move(sites)), onsite_(std::move(onsite)), edges_(std::move(edges)) {
    if (sites_.size() != onsite_.size()) throw ValidationError("graph: onsite list does not match site list");
    for (std::size_t k = 0; k < sites_.size(); ++k) {
      if (!index_.emplace(sites_[k], k).second)
        throw ValidationError("graph: duplicate site label " + to_string(sites_[k]));
      if (sites_[k].is_emitter()) {
        if (emitter_) throw ValidationError("graph: more than one emitter site");
        emitter_ = k;
      }
      if (!std::isfinite(onsite_[k])) throw ValidationError("graph: non-finite onsite energy");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto& e : edges_) {
      if (e.i == e.j) throw ValidationError("graph: self edge on site " + std::to_string(e.i));
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.j >= sites_.size()) throw ValidationError("graph: edge references a missing site");
      if (!std::isfinite(e.weight)) throw ValidationError("graph: non-finite edge weight");
      if (!seen.emplace(e.i, e.j).second)
        throw ValidationError("graph: duplicate edge " + std::to_string(e.i) + "-" + std::to_string(e.j));
    }
  }

  const LatticeSpec& spec() const { return spec_; }
  const std::vector<SiteLabel>& sites() const { return sites_; }
  const std::vector<double>& onsite() const { return onsite_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return sites_.size(); }

  bool has_emitter() const { return emitter_.has_value(); }
  std::optional<std::size_t> emitter_index() const { return emitter_; }

  bool contains(const SiteLabel& l) const { return index_.count(l) != 0; }

  std::size_t index_of(const SiteLabel& l) const {
    const auto it = index_.find(l);
    if (it == index_.end()) throw ValidationError("graph: no site labelled " + to_string(l));
    return it->second;
  }

  const SiteLabel& label_of(std::size_t index) const {
    if (index >= sites_.size())
      throw ValidationError("graph: site index " + std::to_string(index) + " out of range");
    return sites_[index];
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(sites_.size(), 0);
    for (const auto& e : edges_) {
      ++deg[e.i];
      ++deg[e.j];
    }
    return deg;
  }

 private:
  LatticeSpec spec_;
  std::vector<SiteLabel> sites_;
  std::vector<double> onsite_;
  std::vector<Edge> edges_;
  std::map<SiteLabel, std::size_t> index_;
  std::optional<std::size_t> emitter_;
};

inline std::size_t site_index(const SystemGraph& g, const SiteLabel& l) { return g.index_of(l); }
inline SiteLabel label_of(const SystemGraph& g, std::size_t index) { return g.label_of(index); }

namespace detail {

inline bool lieb_site_present(const LatticeSpec& s, int ix, int iy, Sublattice sub) {
  if (!s.trim_dangling) return true;
  if (sub == Sublattice::A && iy == s.ny - 1) return false;
  if (sub == Sublattice::C && ix == s.nx - 1) return false;
  return true;
}

}  // namespace detail

inline SystemGraph build_lattice(const LatticeSpec& spec) {
  spec.validate();
  const bool periodic = spec.boundary == Boundary::Periodic;
  std::vector<SiteLabel> sites;
  sites.reserve(static_cast<std::size_t>(spec.nx) * spec.ny * spec.sites_per_cell());

  if (spec.kind == LatticeKind::Square) {
    for (int iy = 0; iy < spec.ny; ++iy)
      for (int ix = 0; ix < spec.nx; ++ix) sites.push_back({ix, iy, Sublattice::S});
  } else {
    for (int iy = 0; iy < spec.ny; ++iy)
      for (int ix = 0; ix < spec.nx; ++ix)
        for (Sublattice sub : {Sublattice::A, Sublattice::B, Sublattice::C})
          if (detail::lieb_site_present(spec, ix, iy, sub)) sites.push_back({ix, iy, sub});
  }

  std::map<SiteLabel, std::size_t> index;
  for (std::size_t k = 0; k < sites.size(); ++k) index.emplace(sites[k], k);

  std::vector<Edge> edges;
  auto bond = [&](SiteLabel a, SiteLabel b, double w) {
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) return;  // trimmed site
    edges.push_back({std::min(ia->second, ib->second), std::max(ia->second, ib->second), w});
  };

  for (int iy = 0; iy < spec.ny; ++iy) {
    for (int ix = 0; ix < spec.nx; ++ix) {
      const bool has_right = ix + 1 < spec.nx || periodic;
      const bool has_up = iy + 1 < spec.ny || periodic;
      const int xr = (ix + 1) % spec.nx;
      const int yu = (iy + 1) % spec.ny;
      if (spec.kind == LatticeKind::Square) {
        if (has_right) bond({ix, iy, Sublattice::S}, {xr, iy, Sublattice::S}, spec.vx);
        if (has_up) bond({ix, iy, Sublattice::S}, {ix, yu, Sublattice::S}, spec.vy);
      } else {
        bond({ix, iy, Sublattice::A}, {ix, iy, Sublattice::B}, spec.vy);
        bond({ix, iy, Sublattice::B}, {ix, iy, Sublattice::C}, spec.vx);
        if (has_up) bond({ix, iy, Sublattice::A}, {ix, yu, Sublattice::B}, spec.vy);
        if (has_right) bond({ix, iy, Sublattice::C}, {xr, iy, Sublattice::B}, spec.vx);
      }
    }
  }

  std::vector<double> onsite(sites.size(), spec.onsite);
  return SystemGraph(spec, std::move(sites), std::move(onsite), std::move(edges));
}

inline SystemGraph attach_emitter(const SystemGraph& g, const EmitterSpec& em) {
  if (g.has_emitter()) throw ValidationError("attach_emitter: graph already has an emitter");
  if (em.attachment.is_emitter()) throw ValidationError("attach_emitter: attachment must be a lattice site");
  if (!std::isfinite(em.v2)) throw ValidationError("attach_emitter: V2 must be finite");
  const double omega0 = em.omega0.value_or(g.spec().onsite);
  if (!std::isfinite(omega0)) throw ValidationError("attach_emitter: omega0 must be finite");
  const std::size_t n0 = g.index_of(em.attachment);

  auto sites = g.sites();
  auto onsite = g.onsite();
  auto edges = g.edges();
  sites.push_back(SiteLabel::emitter());
  onsite.push_back(omega0);
  edges.push_back({n0, sites.size() - 1, em.v2});
  return SystemGraph(g.spec(), std::move(sites), std::move(onsite), std::move(edges));
}

// Midpoint of an open boundary, where an emitter waveguide sits next to the
// array. Square and Lieb A/B sites use the left column (ix = 0); Lieb C sites
// only reach the bottom row, so they use that one.
inline SiteLabel default_attachment(const LatticeSpec& spec, Sublattice sub) {
  spec.validate();
  if (spec.kind == LatticeKind::Square) {
    if (sub != Sublattice::S) throw ValidationError("default_attachment: square lattice only has sublattice S");
    return {0, (spec.ny - 1) / 2, Sublattice::S};
  }
  const int a_rows = spec.ny - (spec.trim_dangling ? 1 : 0);
  const int c_cols = spec.nx - (spec.trim_dangling ? 1 : 0);
  switch (sub) {
    case Sublattice::A:
      if (a_rows < 1) throw ValidationError("default_attachment: lattice has no A sites");
      return {0, (a_rows - 1) / 2, Sublattice::A};
    case Sublattice::B: return {0, (spec.ny - 1) / 2, Sublattice::B};
    case Sublattice::C:
      if (c_cols < 1) throw ValidationError("default_attachment: lattice has no C sites");
      return {(c_cols - 1) / 2, 0, Sublattice::C};
    default: throw ValidationError("default_attachment: Lieb sublattice must be A, B or C");
  }
}

// Site of the requested sublattice closest to the centre of the array.
inline SiteLabel bulk_site(const LatticeSpec& spec, Sublattice sub) {
  spec.validate();
  if (spec.kind == LatticeKind::Square) {
    if (sub != Sublattice::S) throw ValidationError("bulk_site: square lattice only has sublattice S");
    return {(spec.nx - 1) / 2, (spec.ny - 1) / 2, Sublattice::S};
  }
  const int a_rows = spec.ny - (spec.trim_dangling ? 1 : 0);
  const int c_cols = spec.nx - (spec.trim_dangling ? 1 : 0);
  switch (sub) {
    case Sublattice::A: return {(spec.nx - 1) / 2, (a_rows - 1) / 2, Sublattice::A};
    case Sublattice::B: return {(spec.nx - 1) / 2, (spec.ny - 1) / 2, Sublattice::B};
    case Sublattice::C: return {(c_cols - 1) / 2, (spec.ny - 1) / 2, Sublattice::C};
    default: throw ValidationError("bulk_site: Lieb sublattice must be A, B or C");
  }
}

// Transverse position in um. The emitter has no cell of its own and is
// reported one spacing outside its attachment site.
inline std::pair<double, double> site_position(const SystemGraph& g, const SiteLabel& l) {
  const auto& s = g.spec();
  if (l.is_emitter()) {
    for (const auto& e : g.edges()) {
      const auto em = g.emitter_index().value();
      if (e.i == em || e.j == em) {
        const auto n0 = g.label_of(e.i == em ? e.j : e.i);
        auto [x, y] = site_position(g, n0);
        if (n0.ix == 0 && n0.sub != Sublattice::C) return {x - s.dx, y};
        return {x, y - s.dy};
      }
    }
    return {std::nan(""), std::nan("")};
  }
  if (s.kind == LatticeKind::Square) return {l.ix * s.dx, l.iy * s.dy};
  const double x = 2.0 * l.ix * s.dx + (l.sub == Sublattice::C ? s.dx : 0.0);
  const double y = 2.0 * l.iy * s.dy + (l.sub == Sublattice::A ? s.dy : 0.0);
  return {x, y};
}

// Real symmetric single-excitation Hamiltonian in site order.
struct Hamiltonian {
  Eigen::SparseMatrix<double> matrix;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }

  // Largest absolute entry; the scale used for zero-mode tolerances.
  double max_abs() const {
    double m = 0.0;
    for (int k = 0; k < matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  // Gershgorin interval [lo, hi] containing the spectrum.
  std::pair<double, double> gershgorin() const {
    const auto n = matrix.rows();
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd radius = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
        if (it.row() == it.col())
          diag[it.row()] += it.value();
        else
          radius[it.row()] += std::abs(it.value());
      }
    return {(diag - radius).minCoeff(), (diag + radius).maxCoeff()};
  }
};

inline Hamiltonian assemble_hamiltonian(const SystemGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(g.size() + 2 * g.edges().size());
  for (Eigen::Index k = 0; k < n; ++k)
    if (g.onsite()[k] != 0.0) triplets.emplace_back(k, k, g.onsite()[k]);
  for (const auto& e : g.edges()) {
    triplets.emplace_back(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j), e.weight);
    triplets.emplace_back(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i), e.weight);
  }
  Hamiltonian h;
  h.matrix.resize(n, n);
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  h.matrix.makeCompressed();
  return h;
}

// Lattice-only block of a graph: the same graph with the emitter removed.
inline SystemGraph without_emitter(const SystemGraph& g) {
  if (!g.has_emitter()) return g;
  const auto em = *g.emitter_index();
  std::vector<SiteLabel> sites;
  std::vector<double> onsite;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (k != em) {
      sites.push_back(g.sites()[k]);
      onsite.push_back(g.onsite()[k]);
    }
  auto shift = [em](std::size_t k) { return k > em ? k - 1 : k; };
  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (e.i != em && e.j != em) edges.push_back({shift(e.i), shift(e.j), e.weight});
  return SystemGraph(g.spec(), std::move(sites), std::move(onsite), std::move(edges));
}

}  // namespace latticeqo
