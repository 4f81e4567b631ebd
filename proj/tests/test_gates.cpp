#include <gtest/gtest.h>

#include <mathieu/gates.hpp>

using namespace mathieu;

namespace {

constexpr double kEps0Numeric = 0.020238372096791864;  // dense reference, dim 6

const Calibration& idle_calibration() {
  static const Calibration cal = calibrate_idle(GateSuiteConfig{});
  return cal;
}

}  // namespace

TEST(Gates, IdealGatesAreUnitary) {
  for (const char* g : {"II", "XI", "IX", "XX", "CZ"}) {
    const Matrix4c u = ideal_gate(g);
    EXPECT_LT((u.adjoint() * u - Matrix4c::Identity()).cwiseAbs().maxCoeff(), 1e-15) << g;
  }
  EXPECT_THROW(ideal_gate("CNOT"), std::invalid_argument);
}

TEST(Gates, XiActsOnFirstQubit) {
  // basis order 00, 01, 10, 11 with qubit 1 first
  const Matrix4c x = ideal_gate("XI");
  EXPECT_EQ(x(2, 0), cplx(1.0));
  EXPECT_EQ(x(3, 1), cplx(1.0));
}

TEST(Gates, AnalyseIdealMapIsPerfect) {
  GateMap m;
  m.map = ideal_gate("CZ");
  auto r = analyse_gate("CZ", m);
  EXPECT_NEAR(r.metrics.fidelity, 1.0, 1e-14);
  EXPECT_NEAR(r.metrics.leakage, 0.0, 1e-14);
  ASSERT_TRUE(r.conditional_phase);
  EXPECT_NEAR(std::abs(*r.conditional_phase), M_PI, 1e-14);
}

TEST(Gates, IdleCalibrationFindsOracleDecouplingPoint) {
  const auto& cal = idle_calibration();
  EXPECT_NEAR(cal.eps0, kEps0Numeric, 2e-6);
  EXPECT_NEAR(cal.eps0_analytic, 0.0182982, 1e-6);
  EXPECT_GT(cal.elem1, 0.95);
  EXPECT_GT(cal.elem2, 0.95);
  EXPECT_LE(cal.elem1, 1.0);
  // dressed qubit frequencies sit near the bare ones
  EXPECT_NEAR(cal.freq1, 5.20, 0.02);
  EXPECT_NEAR(cal.freq2, 5.75, 0.05);
}

TEST(Gates, ZeroCouplingAtDecouplingPoint) {
  const auto& cal = idle_calibration();
  GateSuiteConfig cfg;
  auto spec = driven_spectrum(cfg.system, DriveSpec{1, cal.eps0, 10.60, 0.0}, two_qubit_labels());
  EXPECT_LT(std::abs(jzz_two_qubit(spec)), 1e-6);
}

TEST(Gates, IdleScheduleIsIdentityUpToVirtualZ) {
  GateSuiteConfig cfg;
  const auto& cal = idle_calibration();
  Waveform hold{std::vector<double>(41, cal.eps0), cfg.sample_rate};
  auto sched = compose_schedule(detail::channels(cfg, cal), {{"mathieu", hold, 0.0}}, cfg.sample_rate);
  auto g = analyse_gate("II", simulate_gate(detail::gate_device(cfg), sched));
  EXPECT_GT(g.metrics.fidelity, 1.0 - 1e-6);
  EXPECT_LT(g.mean_leakage, 1e-8);
  EXPECT_LT(chi_min_eigenvalue(g.chi), 1e-12);
  EXPECT_GT(chi_min_eigenvalue(g.chi), -1e-12);
}

TEST(Gates, XySchedulesCarryCalibratedPulses) {
  GateSuiteConfig cfg;
  const auto& cal = idle_calibration();
  auto s = xy_schedule(cfg, cal, true, false);
  EXPECT_NEAR(s.duration(), cfg.xy_duration, 1e-12);
  const auto& xy1 = s.channel("xy1");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xy1.samples.size(); ++i) area += 0.5 * (xy1.samples[i] + xy1.samples[i + 1]);
  EXPECT_NEAR(kTwoPi * area / cfg.sample_rate * cal.elem1, M_PI, 1e-9);
  for (double v : s.channel("xy2").samples) EXPECT_EQ(v, 0.0);
  for (double v : s.channel("mathieu").samples) EXPECT_EQ(v, cal.eps0);
}
