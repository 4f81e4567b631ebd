#pragma once

// Closed-form second-order predictions for the driven two-transmon system and
// the parametric regime classifier for the coupler architecture. Everything
// here is in ordinary GHz.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mathieu {

class AnalyticError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SWParams {
  double g = 0.0;
  double delta = 0.0;    // omega2 - omega1
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double delta_d = 0.0;  // omega_d - 2 omega2 + 5 alpha2
  double epsilon = 0.0;

  static SWParams from_device(double omega1, double omega2, double alpha1, double alpha2, double g, double omega_d,
                              double epsilon = 0.0) {
    return {g, omega2 - omega1, alpha1, alpha2, omega_d - 2.0 * omega2 + 5.0 * alpha2, epsilon};
  }

  bool dispersive() const { return delta - alpha2 > 0.0; }
  bool drive_above() const { return delta_d > delta - alpha2; }
  bool small_detuning() const { return delta_d < 2.0 * alpha2; }
  bool valid() const { return dispersive() && drive_above() && small_detuning(); }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!dispersive()) w.emplace_back("delta - alpha2 <= 0");
    if (!drive_above()) w.emplace_back("delta_d <= delta - alpha2");
    if (!small_detuning()) w.emplace_back("delta_d >= 2 alpha2");
    return w;
  }
};

struct DressedQubitLevels {
  double e0 = 0.0, e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double r = 0.0;
  // |E2> = u2|2> + v2|4>, |E3> = u3|2> + v3|4>
  double u2 = 0.0, v2 = 0.0, u3 = 0.0, v3 = 0.0;
};

namespace detail {

inline double checked_div(double num, double den, const char* term) {
  if (den == 0.0 || !std::isfinite(den)) throw AnalyticError(std::string("vanishing denominator in ") + term);
  return num / den;
}

}  // namespace detail

/// Driven single-transmon levels in the two-photon rotating frame.
inline DressedQubitLevels driven_levels(double alpha2, double delta_d, double epsilon) {
  if (!std::isfinite(alpha2) || !std::isfinite(delta_d) || !std::isfinite(epsilon))
    throw AnalyticError("driven_levels: non-finite input");
  DressedQubitLevels l;
  const double e2 = epsilon * epsilon;
  l.r = std::sqrt(delta_d * delta_d / 4.0 + 3.0 * e2);
  const double centre = 4.0 * alpha2 - 1.5 * delta_d;
  const double pole = centre * centre - l.r * l.r;
  if (std::abs(pole) < 1e-15) throw AnalyticError("driven_levels: E0 pole, r^2 = (4 alpha2 - 3 delta_d/2)^2");
  l.e0 = -e2 * (2.0 * alpha2 - delta_d) / pole;
  l.e1 = 2.5 * alpha2 - delta_d / 2.0 - detail::checked_div(3.0 * e2, 4.0 * alpha2 - 2.0 * delta_d, "4 alpha2 - 2 delta_d");
  l.e2 = centre - l.r;
  l.e3 = centre + l.r;
  if (l.r > 0.0) {
    const double x = delta_d / (2.0 * l.r);
    // lower branch is |4>-like for delta_d > 0
    l.u2 = std::sqrt(0.5 * (1.0 - x));
    l.v2 = -std::sqrt(0.5 * (1.0 + x));
    l.u3 = std::sqrt(0.5 * (1.0 + x));
    l.v3 = std::sqrt(0.5 * (1.0 - x));
  } else {
    l.u2 = l.v3 = std::sqrt(0.5);
    l.v2 = -std::sqrt(0.5);
    l.u3 = std::sqrt(0.5);
  }
  return l;
}

/// Drive-dependent ZZ coupling, GHz.
inline double jzz_sw(const SWParams& p) {
  const double g2 = p.g * p.g;
  const double e2 = p.epsilon * p.epsilon;
  const double shift = detail::checked_div(3.0 * e2, p.delta_d - p.delta + p.alpha2, "delta_d - delta + alpha2");
  return detail::checked_div(2.0 * g2, p.delta + p.alpha1, "delta + alpha1") -
         detail::checked_div(2.0 * g2, (p.delta - p.alpha2) + shift, "(delta - alpha2) + 3 eps^2/(delta_d - delta + alpha2)") +
         detail::checked_div(3.0 * e2, 4.0 * p.alpha2 - 2.0 * p.delta_d, "4 alpha2 - 2 delta_d");
}

/// Approximate drive amplitude at which jzz_sw vanishes, GHz.
inline double epsilon_zero(const SWParams& p) {
  const double num = detail::checked_div(1.0, p.delta - p.alpha2, "delta - alpha2") -
                     detail::checked_div(1.0, p.delta + p.alpha1, "delta + alpha1");
  const double a = detail::checked_div(1.0, 2.0 * p.g * p.g * (4.0 * p.alpha2 - 2.0 * p.delta_d), "2 g^2 (4 alpha2 - 2 delta_d)");
  const double dm = p.delta - p.alpha2;
  const double b = detail::checked_div(1.0, dm * dm * (p.delta_d - p.delta + p.alpha2), "(delta - alpha2)^2 (delta_d - delta + alpha2)");
  const double den = 3.0 * (a + b);
  const double rad = detail::checked_div(num, den, "3 [...]");
  if (rad < 0.0) {
    std::string why = "epsilon_zero: negative radicand";
    if (!p.dispersive()) why += " (delta - alpha2 > 0 violated)";
    else if (!p.drive_above()) why += " (delta_d > delta - alpha2 violated)";
    else if (!p.small_detuning()) why += " (delta_d < 2 alpha2 violated)";
    throw AnalyticError(why);
  }
  return std::sqrt(rad);
}

enum class QcqCase { C1a, C1b, C2a, C2b };

inline const char* to_string(QcqCase c) {
  switch (c) {
    case QcqCase::C1a: return "1a";
    case QcqCase::C1b: return "1b";
    case QcqCase::C2a: return "2a";
    case QcqCase::C2b: return "2b";
  }
  return "?";
}

struct QcqRegime {
  QcqCase regime = QcqCase::C1a;
  int static_sign = 0;  // sign of J_zz at epsilon = 0
  std::optional<double> epsilon_c;
  bool on_boundary = false;
  double static_threshold = 0.0;  // (omega1 + omega2 + alpha_c)/2
  double drive_threshold = 0.0;   // 4 omega_c - omega1 - omega2 - 6 alpha_c
};

inline constexpr double kBoundaryTolerance = 1e-9;

/// Case 1: omega_c above the static threshold (J_zz < 0); case 2: below.
/// Suffix b when omega_d lies below the drive threshold, where the dressed
/// |040>-type level can cross |101> at epsilon_c.
inline QcqRegime qcq_regime(double omega_c, double omega_d, double omega1, double omega2, double alpha_c) {
  QcqRegime r;
  r.static_threshold = (omega1 + omega2 + alpha_c) / 2.0;
  r.drive_threshold = 4.0 * omega_c - omega1 - omega2 - 6.0 * alpha_c;
  const double s = omega_c - r.static_threshold;
  const double d = omega_d - r.drive_threshold;
  r.on_boundary = std::abs(s) < kBoundaryTolerance || std::abs(d) < kBoundaryTolerance;
  const bool above = s > 0.0;
  r.static_sign = above ? -1 : (s < 0.0 ? 1 : 0);
  const bool below_drive = d < 0.0;
  if (above) r.regime = below_drive ? QcqCase::C1b : QcqCase::C1a;
  else r.regime = below_drive ? QcqCase::C2b : QcqCase::C2a;
  if (r.regime == QcqCase::C1b || r.regime == QcqCase::C2b) {
    const double rad = (2.0 * omega_c - alpha_c - omega1 - omega2) * (4.0 * omega_c - 6.0 * alpha_c - omega1 - omega2 - omega_d) / 3.0;
    if (rad > 0.0) r.epsilon_c = std::sqrt(rad);
  }
  return r;
}

}  // namespace mathieu
