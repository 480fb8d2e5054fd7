#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "latticeqo/observables.hpp"

using namespace latticeqo;

namespace {

StateVector random_state(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  StateVector s{Eigen::VectorXcd(static_cast<Eigen::Index>(n))};
  for (auto& c : s.amplitudes) c = {nd(rng), nd(rng)};
  s.amplitudes.normalize();
  return s;
}

ObservableSeries sample(const ZGrid& g, auto f) {
  ObservableSeries s{g.values(), {}};
  for (double z : g.values()) s.values.push_back(f(z));
  return s;
}

LatticeSpec lieb280() {
  LatticeSpec s{LatticeKind::Lieb, 10, 10, 0.9, 0.9};
  s.trim_dangling = true;
  return s;
}

}  // namespace

TEST(ParticipationRatio, Bounds) {
  std::mt19937 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto psi = random_state(1 + rng() % 40, rng);
    const double r = participation_ratio(psi);
    EXPECT_GE(r, 1.0 - 1e-12);
    EXPECT_LE(r, static_cast<double>(psi.dim()) + 1e-12);
  }
}

TEST(ParticipationRatio, Extremes) {
  StateVector delta{Eigen::VectorXcd::Zero(7)};
  delta.amplitudes[3] = cplx(0.0, 1.0);
  EXPECT_DOUBLE_EQ(participation_ratio(delta), 1.0);
  StateVector uniform{Eigen::VectorXcd::Constant(16, cplx(0.25, 0.0))};
  EXPECT_NEAR(participation_ratio(uniform), 16.0, 1e-12);
  // two sites with weights 1/4, 3/4: 1 / (1/16 + 9/16)
  StateVector two{Eigen::VectorXcd::Zero(2)};
  two.amplitudes << 0.5, std::sqrt(0.75);
  EXPECT_NEAR(participation_ratio(two), 1.6, 1e-12);
  EXPECT_THROW(participation_ratio(StateVector{Eigen::VectorXcd::Zero(4)}), ValidationError);
}

TEST(ParticipationRatio, PhaseScaleAndPermutationInvariant) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  for (int t = 0; t < 20; ++t) {
    const auto psi = random_state(12, rng);
    const double r = participation_ratio(psi);
    StateVector rotated = psi;
    for (auto& c : rotated.amplitudes) c *= std::polar(1.0, ph(rng));
    EXPECT_NEAR(participation_ratio(rotated), r, 1e-12);
    StateVector scaled{psi.amplitudes * 3.0};
    EXPECT_NEAR(participation_ratio(scaled), r, 1e-12);
    StateVector perm = psi;
    std::shuffle(perm.amplitudes.begin(), perm.amplitudes.end(), rng);
    EXPECT_NEAR(participation_ratio(perm), r, 1e-12);
  }
}

TEST(QePopulation, RequiresEmitter) {
  const auto g = build_lattice(LatticeSpec{LatticeKind::Square, 3, 3});
  const auto h = assemble_hamiltonian(g);
  const auto t = evolve_exact(h, single_site_excitation(g, g.label_of(4)), ZGrid(1.0, 5));
  EXPECT_THROW(qe_population(t, g), ValidationError);
}

TEST(QePopulation, DecoupledEmitterStaysExcited) {
  const LatticeSpec s{LatticeKind::Square, 5, 5};
  const auto g = attach_emitter(build_lattice(s), {0.0, default_attachment(s, Sublattice::S), 0.3});
  const auto h = assemble_hamiltonian(g);
  const auto t = evolve_exact(h, single_site_excitation(g, SiteLabel::emitter()), ZGrid(5.0, 51));
  for (double p : qe_population(t, g).values) EXPECT_NEAR(p, 1.0, 1e-12);
  EXPECT_FALSE(detect_revivals(qe_population(t, g)).decayed);
}

TEST(QePopulation, ComplementIsLatticeWeight) {
  const LatticeSpec s = lieb280();
  const auto g = attach_emitter(build_lattice(s), {0.45, default_attachment(s, Sublattice::A), {}});
  const auto h = assemble_hamiltonian(g);
  const auto t = evolve_exact(h, single_site_excitation(g, SiteLabel::emitter()), ZGrid(5.0, 21));
  const auto qe = qe_population(t, g);
  for (std::size_t j = 0; j < t.states.size(); ++j) {
    const auto p = intensity_profile(t.states[j]);
    const double lattice = std::accumulate(p.begin(), p.end() - 1, 0.0);
    EXPECT_NEAR(qe.values[j] + lattice, 1.0, 1e-10);
    EXPECT_DOUBLE_EQ(qe.values[j], p.back());
  }
}

TEST(QePopulation, SquareWeakCouplingDecaysMonotonically) {
  const LatticeSpec s{LatticeKind::Square, 19, 19, 0.9, 0.9};
  const auto g = attach_emitter(build_lattice(s), {0.45, default_attachment(s, Sublattice::S), {}});
  const auto t = evolve_exact(assemble_hamiltonian(g), single_site_excitation(g, SiteLabel::emitter()), ZGrid(5.0));
  const auto qe = qe_population(t, g);
  EXPECT_EQ(qe.values.front(), 1.0);
  for (std::size_t j = 1; j < qe.size(); ++j) EXPECT_LE(qe.values[j], qe.values[j - 1] + 1e-12);
  EXPECT_LT(qe.values.back(), 0.3);  // V1 z = 4.5
}

TEST(IntensityProfile, SquareCentreExcitationIsFourFoldSymmetric) {
  const LatticeSpec s{LatticeKind::Square, 19, 19, 1.0, 1.0};
  const auto g = build_lattice(s);
  const auto psi = ExactPropagator(assemble_hamiltonian(g)).apply(single_site_excitation(g, bulk_site(s, Sublattice::S)), 4.5);
  const auto p = intensity_profile(psi);
  double total = 0.0;
  for (double x : p) total += x;
  EXPECT_NEAR(total, 1.0, 1e-10);
  auto at = [&](int ix, int iy) { return p[g.index_of({ix, iy, Sublattice::S})]; };
  for (int iy = 0; iy < 19; ++iy) {
    for (int ix = 0; ix < 19; ++ix) {
      EXPECT_NEAR(at(ix, iy), at(18 - ix, iy), 1e-12);
      EXPECT_NEAR(at(ix, iy), at(ix, 18 - iy), 1e-12);
      EXPECT_NEAR(at(ix, iy), at(iy, ix), 1e-12);
    }
  }
}

TEST(IntensityProfile, LiebBulkAStaysLocalised) {
  // Bulk A excitation overlaps the compact flat-band states and spreads far
  // less than the same excitation on a square lattice.
  const LatticeSpec lieb = lieb280();
  const LatticeSpec sq{LatticeKind::Square, 19, 19, 0.9, 0.9};
  const auto gl = build_lattice(lieb), gs = build_lattice(sq);
  const auto pl = ExactPropagator(assemble_hamiltonian(gl)).apply(single_site_excitation(gl, bulk_site(lieb, Sublattice::A)), 5.0);
  const auto ps = ExactPropagator(assemble_hamiltonian(gs)).apply(single_site_excitation(gs, bulk_site(sq, Sublattice::S)), 5.0);
  EXPECT_LT(participation_ratio(pl), 0.5 * participation_ratio(ps));
  EXPECT_GT(intensity_profile(pl)[gl.index_of(bulk_site(lieb, Sublattice::A))], 0.1);
}

TEST(DetectRevivals, Cos2PeaksAtMultiplesOfHalfPeriod) {
  const double w = 1.3;
  const ZGrid g(10.0, 2001);
  const auto r = detect_revivals(sample(g, [&](double z) { return std::pow(std::cos(w * z), 2); }));
  ASSERT_TRUE(r.decayed);
  EXPECT_NEAR(r.decay_z, std::acos(std::sqrt(0.1)) / w, g.step());
  // peaks at m pi / w for m = 1..4 inside (0, 10)
  ASSERT_EQ(r.revivals.size(), 4u);
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_NEAR(r.revivals[m].z, (m + 1) * std::numbers::pi / w, g.step());
    EXPECT_NEAR(r.revivals[m].peak, 1.0, 1e-4);
  }
  EXPECT_NEAR(r.max_revival, 1.0, 1e-4);
}

TEST(DetectRevivals, MonotoneDecayHasNone) {
  const ZGrid g(10.0, 501);
  const auto r = detect_revivals(sample(g, [](double z) { return std::exp(-z); }));
  EXPECT_TRUE(r.decayed);
  EXPECT_TRUE(r.revivals.empty());
  EXPECT_EQ(r.max_revival, 0.0);
  const auto flat = detect_revivals(sample(g, [](double) { return 0.5; }));
  EXPECT_FALSE(flat.decayed);
}

TEST(DetectRevivals, ThresholdsRelativeToInitialValue) {
  const ZGrid g(10.0, 1001);
  // scaled copy: same decay point and peaks as the unscaled series
  const auto a = detect_revivals(sample(g, [](double z) { return std::pow(std::cos(z), 2) * std::exp(-0.2 * z); }));
  const auto b = detect_revivals(sample(g, [](double z) { return 0.4 * std::pow(std::cos(z), 2) * std::exp(-0.2 * z); }));
  EXPECT_EQ(a.decay_z, b.decay_z);
  ASSERT_EQ(a.revivals.size(), b.revivals.size());
  // small revivals below threshold are ignored
  const auto c = detect_revivals(sample(g, [](double z) { return z < 1.0 ? 1.0 - z : 0.01 * std::pow(std::sin(z), 2); }));
  EXPECT_TRUE(c.decayed);
  EXPECT_TRUE(c.revivals.empty());
  EXPECT_THROW(detect_revivals(ObservableSeries{}, {0.0, 0.05}), ValidationError);
  EXPECT_THROW(detect_revivals(ObservableSeries{}, {0.1, 1.5}), ValidationError);
}

TEST(FlatBandOracle, Values) {
  EXPECT_DOUBLE_EQ(fb_oracle_population(1.0, 4.0, 0.0), 1.0);
  // cos^2(v2 z / (2 sqrt N)) vanishes at z = pi sqrt(N) / v2
  EXPECT_NEAR(fb_oracle_population(0.45, 280.0, std::numbers::pi * std::sqrt(280.0) / 0.45), 0.0, 1e-20);
  EXPECT_NEAR(fb_oracle_population(0.45, 280.0, 2.0 * std::numbers::pi * std::sqrt(280.0) / 0.45), 1.0, 1e-14);
  EXPECT_NEAR(fb_oracle_population(2.0, 1.0, 0.5), std::pow(std::cos(0.5), 2), 1e-15);
  EXPECT_THROW(fb_oracle_population(1.0, 0.5, 1.0), ValidationError);
}

TEST(FlatBandSubspace, LiebHasCompactFlatBand) {
  const auto g = build_lattice(lieb280());
  const auto h = assemble_hamiltonian(g);
  const auto basis = flat_band_subspace(h, 0.0, default_zero_tolerance(h));
  EXPECT_EQ(basis.cols(), 82);
  const Eigen::MatrixXd hd = h.dense();
  EXPECT_LE((hd * basis).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((basis.transpose() * basis - Eigen::MatrixXd::Identity(82, 82)).cwiseAbs().maxCoeff(), 1e-10);
  // Chiral symmetry splits the zero modes into A/C-supported and B-supported
  // parts: 180 - rank(M) + 100 - rank(M) with M the B <-> A/C block. The
  // B weight of the projector is therefore an integer, here 100 - 99.
  double b_weight = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.sites()[n].sub == Sublattice::B) b_weight += basis.row(static_cast<Eigen::Index>(n)).squaredNorm();
  EXPECT_NEAR(b_weight, 1.0, 1e-8);
}

TEST(FlatBandProjected, EmptySubspaceThrows) {
  // isotropic open square lattices have zero modes (j + k = n + 1); an
  // anisotropic one has none
  const auto h = assemble_hamiltonian(build_lattice(LatticeSpec{LatticeKind::Square, 4, 4, 1.0, 0.7}));
  const auto basis = flat_band_subspace(h, 0.0, default_zero_tolerance(h));
  EXPECT_EQ(basis.cols(), 0);
  EXPECT_THROW(fb_projected_evolution(basis, {0.5, 0, 0.0, 0.0}, ZGrid(1.0)), ValidationError);
}

TEST(FlatBandProjected, PureCos2AtProjectedNorm) {
  // Resonant emitter coupled to a degenerate manifold oscillates with the
  // collective coupling V2 |P n0|.
  const LatticeSpec s = lieb280();
  const auto g = build_lattice(s);
  const auto h = assemble_hamiltonian(g);
  const auto basis = flat_band_subspace(h, 0.0, default_zero_tolerance(h));
  const auto n0 = g.index_of(default_attachment(s, Sublattice::A));
  const double proj = basis.row(static_cast<Eigen::Index>(n0)).norm();
  const double v2 = 0.45;
  const ZGrid grid(40.0, 801);
  const auto pop = fb_projected_evolution(basis, {v2, n0, 0.0, 0.0}, grid);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_NEAR(pop.values[j], std::pow(std::cos(v2 * proj * grid[j]), 2), 1e-10);
  const auto fit = fit_cos2(pop);
  EXPECT_NEAR(fit.omega, v2 * proj, 1e-8);
  EXPECT_GT(fit.r_squared, 1.0 - 1e-12);
  EXPECT_NEAR(effective_normalization(v2, fit.omega), 1.0 / (4.0 * proj * proj), 1e-6);
}

TEST(FitCos2, RecoversFrequency) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> wd(0.05, 3.0);
  for (int t = 0; t < 20; ++t) {
    const double w = wd(rng);
    const ZGrid g(12.0, 401);
    const auto f = fit_cos2(sample(g, [&](double z) { return std::pow(std::cos(w * z), 2); }));
    EXPECT_NEAR(f.omega, w, 1e-7) << "w=" << w;
    EXPECT_NEAR(f.period(), std::numbers::pi / w, 1e-5);
    EXPECT_GT(f.r_squared, 0.999999);
  }
  const ZGrid g(5.0, 3);
  EXPECT_THROW(fit_cos2(sample(g, [](double) { return 1.0; })), ValidationError);
}

TEST(FitCos2, PoorFitHasLowRSquared) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ZGrid g(10.0, 201);
  const auto f = fit_cos2(sample(g, [&](double) { return u(rng); }));
  EXPECT_LT(f.r_squared, 0.5);
}

TEST(Csv, SeriesAndProfile) {
  ObservableSeries s{{0.0, 0.5}, {1.0, 0.25}};
  std::ostringstream os;
  write_series_csv(os, s, "qe_population");
  EXPECT_EQ(os.str(), "# latticeqo 0.1.0 config_hash=none\nz,qe_population\n0,1\n0.5,0.25\n");

  const auto g = attach_emitter(build_lattice(LatticeSpec{LatticeKind::Square, 2, 1}), {1.0, {0, 0, Sublattice::S}, {}});
  StateVector psi{Eigen::VectorXcd::Zero(3)};
  psi.amplitudes[2] = 1.0;
  std::ostringstream ps;
  write_profile_csv(ps, psi, g, 1.5);
  std::istringstream is(ps.str());
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  EXPECT_EQ(line, "# z=1.5");
  std::getline(is, line);
  EXPECT_EQ(line, "index,site,sublattice,ix,iy,x_um,y_um,intensity");
  std::getline(is, line);
  EXPECT_EQ(line, "0,\"S(0,0)\",S,0,0,0,0,0");
  std::getline(is, line);
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 6), "2,\"E\",");
  EXPECT_EQ(line.back(), '1');
}
