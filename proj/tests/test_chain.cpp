#include <gtest/gtest.h>

#include <mathieu/chain.hpp>

using namespace mathieu;

namespace {

ChainLayout ref_chain(int qubit_dim = 3) {
  return {5, {"Q", qubit_dim, 4.2, 0.2}, {"C", 5, 4.67, 0.8}, 0.08, 0.01};
}

std::vector<double> uniform(double step, double end) {
  std::vector<double> t;
  for (int i = 0; i * step <= end + 1e-12; ++i) t.push_back(i * step);
  return t;
}

}  // namespace

TEST(Chain, XxzReferenceMatchesOracle) {
  std::vector<double> t{0.0, 10.0, 20.0, 40.0};
  auto r = xxz_reference(0.004, 0.002, t);
  ASSERT_TRUE(r.series.normalized);
  EXPECT_NEAR(r.series.norm[0], 1.0, 1e-15);
  EXPECT_NEAR(r.series.raw[1], 0.7302125478889931, 1e-11);
  EXPECT_NEAR(r.series.raw[2], 0.23936108935008316, 1e-11);
  EXPECT_NEAR(r.series.raw[3], 0.09395546689155551, 1e-11);
}

TEST(Chain, XxzReferenceConservesMagnetisationAndEnergy) {
  auto t = uniform(5.0, 100.0);
  auto r = xxz_reference(0.004, 0.006, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(r.total_sz[i], -1.0, 1e-12);  // three excitations out of five
    EXPECT_NEAR(r.energy[i], r.energy[0], 1e-12);
  }
}

TEST(Chain, NeelCorrelatorStartsAtOne) {
  std::vector<int> dims(5, 2);
  std::vector<std::size_t> q{0, 1, 2, 3, 4};
  auto w = staggered_weights(dims, q);
  EXPECT_DOUBLE_EQ(w(0b10101), 1.0);
  EXPECT_DOUBLE_EQ(w(0b01010), 1.0);
  EXPECT_LT(w(0b11100), 1.0);
}

TEST(Chain, SegmentProjectionMatchesOracle) {
  ChainConfig cfg{ref_chain(), DriveSpec{0, 0.0, 5.6, 0.0}};
  SystemSpec left = subsystem(chain_system(cfg.layout), 0, 4);
  std::vector<double> ov;
  StateVector v = detail::project_segment(left, cfg.drive, 0, {"1000", "0010"}, "1000", ov);
  EXPECT_NEAR(v.squaredNorm(), 0.9742561771949277, 1e-10);
  const double bare = std::norm(v(basis_index(left.dims(), parse_fock_label("1000"))));
  EXPECT_NEAR(bare / v.squaredNorm(), 0.9742561771949391, 1e-10);
  ASSERT_EQ(ov.size(), 2u);
}

TEST(Chain, DressedNeelIsNormalisedProductState) {
  ChainConfig cfg{ref_chain(), DriveSpec{0, 0.1, 5.6, 0.0}};
  auto n = dressed_neel(cfg);
  EXPECT_NEAR(n.state.norm(), 1.0, 1e-12);
  EXPECT_EQ(n.segment_overlaps.size(), 4u);
  for (double o : n.segment_overlaps) EXPECT_GT(o, 0.5);
  SystemSpec chain = chain_system(cfg.layout);
  const double c = staggered_correlator(n.state, chain, chain_qubit_modes(chain));
  EXPECT_GT(c, 0.9);
  EXPECT_LE(c, 1.0 + 1e-12);
}

TEST(Chain, DressedNeelNeedsFiveQubits) {
  ChainLayout l = ref_chain();
  l.n_qubits = 3;
  EXPECT_THROW(dressed_neel(ChainConfig{l, DriveSpec{0, 0.0, 5.6, 0.0}}), std::invalid_argument);
}

TEST(Chain, ShortEvolutionIsUnitaryAndReversible) {
  ChainConfig cfg{ref_chain(2), DriveSpec{0, 0.05, 5.6, 0.0}};
  cfg.horizon = 3.0;
  cfg.sample_step = 0.5;
  auto n = dressed_neel(cfg);
  auto s = evolve_chain(cfg, n.state);
  ASSERT_EQ(s.t.size(), 7u);
  EXPECT_LT(s.norm_drift, 1e-10);
  EXPECT_NEAR(s.norm[0], 1.0, 1e-15);
  EXPECT_NEAR(chain_time_reversal(cfg, n.state), 1.0, 1e-9);
}

TEST(Chain, DimensionCapIsEnforced) {
  ChainConfig cfg{ref_chain(), DriveSpec{0, 0.0, 5.6, 0.0}};
  cfg.dim_cap = 1000;
  cfg.horizon = 1.0;
  auto n = dressed_neel(cfg);
  EXPECT_THROW(evolve_chain(cfg, n.state), std::length_error);
}

TEST(Chain, TimeGridValidation) {
  ChainConfig cfg;
  cfg.horizon = 0.0;
  EXPECT_THROW(cfg.times(), std::invalid_argument);
  cfg.horizon = 1.0;
  cfg.sample_step = 0.25;
  EXPECT_EQ(cfg.times().size(), 5u);
}

TEST(Chain, StretchedFitRecoversSyntheticParameters) {
  auto t = uniform(0.25, 60.0);
  std::vector<double> c;
  for (double x : t) c.push_back(std::exp(-std::pow(x / 20.0, 1.6)));
  auto f = fit_stretched(t, c, FitOptions{0.05, 0.0});
  EXPECT_NEAR(f.t0, 20.0, 1e-6);
  EXPECT_NEAR(f.n, 1.6, 1e-6);
  EXPECT_LT(f.rms, 1e-9);
  EXPECT_TRUE(f.converged);
}

TEST(Chain, FitWindowStopsBelowOneOverE) {
  std::vector<double> c{1.0, 0.9, 0.5, 0.3, 0.1};
  EXPECT_EQ(fit_window_end(c, 0.05), 3u);
  std::vector<double> bump{1.0, 0.8, 0.6, 0.55, 0.7, 0.2};
  EXPECT_EQ(fit_window_end(bump, 0.05), 3u);  // first minimum before the revival
  std::vector<double> flat{1.0, 0.9, 0.8};
  EXPECT_EQ(fit_window_end(flat, 0.05), 2u);
}

TEST(Chain, FitRejectsTinyWindows) {
  std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> c{1.0, 0.2, 0.1, 0.1, 0.1, 0.1};
  EXPECT_THROW(fit_stretched(t, c), FitError);
}

TEST(Chain, SmoothingPreservesStartAtOne) {
  auto t = uniform(0.25, 20.0);
  std::vector<double> c;
  for (double x : t) c.push_back(std::exp(-x / 10.0) + 0.05 * std::cos(kTwoPi * x / 2.0));
  auto s = smooth_series(t, c, 2.0);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  double tv_raw = 0.0, tv_smooth = 0.0;  // total variation away from the shrinking edge windows
  for (std::size_t i = 10; i + 10 < c.size(); ++i) {
    tv_raw += std::abs(c[i + 1] - c[i]);
    tv_smooth += std::abs(s[i + 1] - s[i]);
  }
  EXPECT_LT(tv_smooth, 0.5 * tv_raw);
}

TEST(Chain, ExchangePeriodOfReferenceLayout) { EXPECT_NEAR(exchange_period(ref_chain()), 1.0 / 0.47, 1e-12); }

TEST(Chain, ProgramDeltaHitsIsotropicPoint) {
  QcqUnit unit{{"Q", 6, 4.2, 0.2}, {"C", 6, 4.67, 0.8}, 0.08, 0.01};
  ProgramGrid g;
  g.omega_d_min = 5.6;
  g.omega_d_max = 5.7;
  g.omega_d_step = 0.1;
  g.eps_step = 0.02;
  auto r = program_delta(unit, 0.0, g);
  EXPECT_TRUE(r.reachable);
  EXPECT_LT(std::abs(r.delta), 1e-4);
  EXPECT_GT(r.overlap_101, 0.5);
  EXPECT_GT(std::abs(r.jxx), 0.5 * 0.0031600561797628323);
}

TEST(Chain, ProgramDeltaReportsUnreachableTarget) {
  QcqUnit unit{{"Q", 6, 4.2, 0.2}, {"C", 6, 4.67, 0.8}, 0.08, 0.01};
  ProgramGrid g;
  g.omega_d_min = 5.6;
  g.omega_d_max = 5.6;
  g.eps_max = 0.04;
  g.eps_step = 0.02;
  auto r = program_delta(unit, 50.0, g);
  EXPECT_FALSE(r.reachable);
  EXPECT_GT(r.residual, 1.0);
}
