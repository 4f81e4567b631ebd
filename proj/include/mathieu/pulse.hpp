#pragma once

// Adiabatic Mathieu ramps shaped by the leakage sensitivity of the target
// dressed state, Gaussian XY envelopes, and multi-channel schedules.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "models.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

namespace mathieu {

struct LeakageProfile {
  std::vector<double> eps_grid;  // GHz
  std::vector<double> S;         // 1/GHz
  std::vector<double> gap;       // GHz
  std::string target_label;

  /// Adiabatic rate gap/S, linearly interpolated; +inf where S = 0.
  double rate(double eps) const {
    auto r = [&](std::size_t i) { return S[i] > 0.0 ? gap[i] / S[i] : std::numeric_limits<double>::infinity(); };
    if (eps_grid.size() == 1) return r(0);
    auto it = std::upper_bound(eps_grid.begin(), eps_grid.end(), eps);
    std::size_t hi = std::clamp<std::size_t>(it - eps_grid.begin(), 1, eps_grid.size() - 1);
    std::size_t lo = hi - 1;
    const double a = r(lo), b = r(hi);
    if (!std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<double>::infinity();
    const double w = (eps - eps_grid[lo]) / (eps_grid[hi] - eps_grid[lo]);
    return a + w * (b - a);
  }
};

class PulseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sensitivity S = sum_k |<k|a^2 + a^dag^2|t>| / |E_k - E_t| and gap
/// min_k |E_k - E_t| of a tracked target state, with k running over the
/// eigenstates outside the computational subspace. The drive acts on
/// drive_template.target_mode; energies in GHz.
inline LeakageProfile profile_leakage(const SystemSpec& system, const DriveSpec& drive_template,
                                      std::span<const double> eps_grid, const std::string& target_label,
                                      std::span<const std::string> computational = two_qubit_labels(),
                                      unsigned threads = 1) {
  if (eps_grid.empty()) throw std::invalid_argument("leakage profile needs a non-empty grid");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] > eps_grid[i - 1])) throw std::invalid_argument("leakage grid must be strictly increasing");
  std::vector<std::string> labels(computational.begin(), computational.end());
  auto pos = std::find(labels.begin(), labels.end(), target_label);
  if (pos == labels.end()) throw std::invalid_argument("target label must be a computational label");
  const std::size_t target = pos - labels.begin();
  const auto dims = system.dims();

  const Operator leak = 2.0 * (1.0 / kTwoPi) * two_photon_operator(system, drive_template.target_mode);
  auto spectra = parallel_map(eps_grid.size(), threads, [&](std::size_t i) {
    DriveSpec d = drive_template;
    d.epsilon = eps_grid[i];
    return eigensystem(build_rwa(system, std::span<const DriveSpec>(&d, 1)));
  });

  LeakageProfile out;
  out.target_label = target_label;
  out.eps_grid.assign(eps_grid.begin(), eps_grid.end());
  std::vector<StateVector> ref;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    SpectrumResult spec;
    if (ref.empty()) {
      spec = assign_dressed(std::move(spectra[i]), dims, labels);
      if (spec.overlaps.at(target_label) < 0.5)
        throw PulseError("target '" + target_label + "' not identifiable at eps = " + std::to_string(eps_grid[i]));
    } else {
      double track = 0.0;
      spec = assign_tracked(std::move(spectra[i]), dims, labels, ref, &track);
      if (track < 0.5)
        throw PulseError("lost track of computational states at eps = " + std::to_string(eps_grid[i]));
    }
    ref.clear();
    for (const auto& l : labels) ref.push_back(spec.state(l));

    std::vector<bool> comp(spec.raw.energies.size(), false);
    for (const auto& l : labels) comp[spec.index(l)] = true;
    const StateVector& t = ref[target];
    const double et = to_ghz(spec.energy(target_label));
    const StateVector lt = leak.apply(t);
    double s = 0.0;
    double gap = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < spec.raw.energies.size(); ++k) {
      if (comp[k]) continue;
      const double dE = std::abs(to_ghz(spec.raw.energies(k)) - et);
      gap = std::min(gap, dE);
      const double m = std::abs(spec.raw.states.col(k).dot(lt));
      if (m == 0.0) continue;
      if (dE == 0.0) throw PulseError("zero gap at eps = " + std::to_string(eps_grid[i]));
      s += m / dE;
    }
    if (!(gap > 0.0)) throw PulseError("zero gap at eps = " + std::to_string(eps_grid[i]));
    out.S.push_back(s);
    out.gap.push_back(gap);
  }
  return out;
}

enum class Window { SineSquared, Flat };

struct Waveform {
  std::vector<double> samples;  // GHz, sample i at t = i / sample_rate
  double sample_rate = 1.0;     // samples per ns
  double duration() const { return samples.empty() ? 0.0 : (samples.size() - 1) / sample_rate; }
};

struct RampResult {
  Waveform waveform;
  double duration = 0.0;        // ns
  double ideal_duration = 0.0;  // before rounding up to whole samples
};

namespace detail {

inline double window_value(Window w, double tau) {
  if (w == Window::Flat) return 1.0;
  const double s = std::sin(M_PI * tau);
  return s * s;
}

/// Integral of the window from 0 to tau.
inline double window_integral(Window w, double tau) {
  if (w == Window::Flat) return tau;
  return tau / 2.0 - std::sin(2.0 * M_PI * tau) / (4.0 * M_PI);
}

}  // namespace detail

/// Solves d eps/dt = k R(eps) f(t/T) with R = gap/S. With u = T F(t/T)
/// the equation separates, d eps/du = k R(eps), so the total duration is
/// T = U / F(1) with U = int d eps / (k R). The duration is rounded up to a
/// whole number of samples and the profile stretched in time to match.
inline RampResult make_adiabatic_waveform(const LeakageProfile& profile, double k, Window window, double eps_start,
                                          double eps_end, double sample_rate,
                                          double max_slew = std::numeric_limits<double>::infinity()) {
  if (!(k > 0.0)) throw std::invalid_argument("ramp scale k must be positive");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  if (profile.eps_grid.empty()) throw std::invalid_argument("empty leakage profile");
  const double lo = profile.eps_grid.front(), hi = profile.eps_grid.back();
  const double tol = 1e-12;
  if (eps_start < lo - tol || eps_start > hi + tol || eps_end < lo - tol || eps_end > hi + tol)
    throw std::invalid_argument("ramp endpoints outside the profile grid");

  RampResult out;
  out.waveform.sample_rate = sample_rate;
  if (eps_start == eps_end) {
    out.waveform.samples = {eps_start};
    return out;
  }
  // effective rate in eps per unit u
  auto rate = [&](double e) {
    double r = k * profile.rate(e);
    r = std::min(r, max_slew);
    return r;
  };
  // cumulative U on a fine mesh (Simpson per cell)
  const int cells = 4096;
  std::vector<double> mesh(cells + 1), u(cells + 1, 0.0);
  for (int i = 0; i <= cells; ++i) mesh[i] = eps_start + (eps_end - eps_start) * i / cells;
  bool finite = false;
  for (int i = 0; i <= cells; ++i)
    if (std::isfinite(rate(mesh[i]))) finite = true;
  if (!finite) throw PulseError("sensitivity vanishes everywhere; set a finite max slew");
  for (int i = 0; i < cells; ++i) {
    const double a = mesh[i], b = mesh[i + 1], m = 0.5 * (a + b);
    const double ia = 1.0 / rate(a), im = 1.0 / rate(m), ib = 1.0 / rate(b);
    if (!std::isfinite(ia) || !std::isfinite(im) || !std::isfinite(ib) || !(rate(a) > 0) || !(rate(m) > 0) ||
        !(rate(b) > 0))
      throw PulseError("adiabatic rate is not positive inside the ramp");
    u[i + 1] = u[i] + std::abs(b - a) * (ia + 4.0 * im + ib) / 6.0;
  }
  const double total_u = u.back();
  const double f1 = detail::window_integral(window, 1.0);
  out.ideal_duration = total_u / f1;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(out.ideal_duration * sample_rate - 1e-9)));
  out.duration = n / sample_rate;

  auto& w = out.waveform.samples;
  w.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double tau = static_cast<double>(i) / n;
    const double target = total_u * detail::window_integral(window, tau) / f1;
    auto it = std::lower_bound(u.begin(), u.end(), target);
    std::size_t j = std::clamp<std::size_t>(it - u.begin(), 1, cells);
    const double frac = (u[j] > u[j - 1]) ? (target - u[j - 1]) / (u[j] - u[j - 1]) : 0.0;
    w[i] = mesh[j - 1] + std::clamp(frac, 0.0, 1.0) * (mesh[j] - mesh[j - 1]);
  }
  w.front() = eps_start;
  w.back() = eps_end;
  return out;
}

/// Truncated Gaussian, baseline-subtracted to zero at both ends. The envelope
/// is a Rabi frequency in GHz; 2 pi * (trapezoid integral) = target_angle.
struct Envelope {
  Waveform waveform;
  double detuning = 0.0;  // GHz, carrier offset from resonance
};

inline Envelope gaussian_envelope(double sigma, double duration, double target_angle, double detuning,
                                  double sample_rate) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (duration < 4.0 * sigma - 1e-12) throw std::invalid_argument("duration must be at least 4 sigma");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  Envelope env;
  env.detuning = detuning;
  env.waveform.sample_rate = sample_rate;
  env.waveform.samples.assign(n + 1, 0.0);
  if (target_angle == 0.0 || n == 0) return env;
  const double mid = 0.5 * n / sample_rate;
  const double base = std::exp(-mid * mid / (2.0 * sigma * sigma));
  auto& s = env.waveform.samples;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = i / sample_rate - mid;
    s[i] = std::exp(-t * t / (2.0 * sigma * sigma)) - base;
  }
  s.front() = s.back() = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < n; ++i) area += 0.5 * (s[i] + s[i + 1]) / sample_rate;
  const double scale = target_angle / (kTwoPi * area);
  for (auto& v : s) v *= scale;
  return env;
}

inline double envelope_area(const Waveform& w) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < w.samples.size(); ++i) a += 0.5 * (w.samples[i] + w.samples[i + 1]);
  return kTwoPi * a / w.sample_rate;
}

enum class ChannelKind { Mathieu, XY };

struct ChannelInfo {
  std::string name;
  ChannelKind kind = ChannelKind::XY;
  std::size_t mode = 0;
  double carrier = 0.0;  // GHz (lab frequency of XY channels)
  double idle = 0.0;     // GHz
};

struct Channel {
  ChannelInfo info;
  std::vector<double> samples;
};

/// Channels share one time base; sample i sits at t = i / sample_rate.
struct PulseSchedule {
  double sample_rate = 1.0;
  std::vector<Channel> channels;

  std::size_t n_samples() const { return channels.empty() ? 0 : channels.front().samples.size(); }
  double duration() const { return n_samples() <= 1 ? 0.0 : (n_samples() - 1) / sample_rate; }

  const Channel& channel(const std::string& name) const {
    for (const auto& c : channels)
      if (c.info.name == name) return c;
    throw std::out_of_range("no channel '" + name + "'");
  }

  /// Linear interpolation; idle value outside the schedule.
  double value(const Channel& c, double t) const {
    const std::size_t n = c.samples.size();
    if (n == 0 || t <= 0.0) return n ? c.samples.front() : c.info.idle;
    const double x = t * sample_rate;
    if (x >= n - 1) return c.samples.back();
    const auto i = static_cast<std::size_t>(x);
    const double w = x - i;
    return c.samples[i] + w * (c.samples[i + 1] - c.samples[i]);
  }
};

struct Segment {
  std::string channel;
  Waveform waveform;
  double start = 0.0;  // ns, must sit on the sample grid
};

/// Places segments on their channels; unoccupied samples hold the channel
/// idle value. Segments on one channel may touch at an endpoint but not
/// overlap.
inline PulseSchedule compose_schedule(const std::vector<ChannelInfo>& channels, const std::vector<Segment>& segments,
                                      double sample_rate) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
  PulseSchedule s;
  s.sample_rate = sample_rate;
  std::map<std::string, std::size_t> index;
  for (const auto& c : channels) {
    if (!index.emplace(c.name, s.channels.size()).second) throw std::invalid_argument("duplicate channel " + c.name);
    s.channels.push_back({c, {}});
  }
  struct Placed {
    std::size_t first, last;
    const Segment* seg;
  };
  std::vector<std::vector<Placed>> placed(channels.size());
  std::size_t n = 0;
  for (const auto& seg : segments) {
    auto it = index.find(seg.channel);
    if (it == index.end()) throw std::invalid_argument("segment on unknown channel " + seg.channel);
    if (std::abs(seg.waveform.sample_rate - sample_rate) > 1e-12 * sample_rate)
      throw std::invalid_argument("segment sample rate differs from the schedule");
    const double x = seg.start * sample_rate;
    if (seg.start < 0.0 || std::abs(x - std::round(x)) > 1e-6) throw std::invalid_argument("segment start off the sample grid");
    if (seg.waveform.samples.empty()) continue;
    const auto first = static_cast<std::size_t>(std::llround(x));
    const std::size_t last = first + seg.waveform.samples.size() - 1;
    for (const auto& p : placed[it->second]) {
      if (first < p.last && p.first < last) throw std::invalid_argument("overlapping segments on channel " + seg.channel);
      if (first == p.last && std::abs(seg.waveform.samples.front() - p.seg->waveform.samples.back()) > 1e-12)
        throw std::invalid_argument("touching segments disagree on channel " + seg.channel);
      if (last == p.first && std::abs(seg.waveform.samples.back() - p.seg->waveform.samples.front()) > 1e-12)
        throw std::invalid_argument("touching segments disagree on channel " + seg.channel);
      if (first == p.first && last == p.last) throw std::invalid_argument("overlapping segments on channel " + seg.channel);
    }
    placed[it->second].push_back({first, last, &seg});
    n = std::max(n, last + 1);
  }
  for (std::size_t c = 0; c < s.channels.size(); ++c) {
    auto& ch = s.channels[c];
    ch.samples.assign(n, ch.info.idle);
    for (const auto& p : placed[c])
      std::copy(p.seg->waveform.samples.begin(), p.seg->waveform.samples.end(), ch.samples.begin() + p.first);
  }
  return s;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok) {
  std::size_t pos = 0;
  double v = std::stod(tok, &pos);
  if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
  return v;
}

}  // namespace detail

/// Line format: a header, one line per channel, then one line per sample per
/// channel ("<sample> <channel> <value>"). Numbers use 17 significant digits.
inline void write_schedule(std::ostream& os, const PulseSchedule& s) {
  os << "mathieu-schedule 1\n";
  os << "sample_rate " << detail::fmt17(s.sample_rate) << "\n";
  os << "samples " << s.n_samples() << "\n";
  os << "channels " << s.channels.size() << "\n";
  for (const auto& c : s.channels)
    os << "channel " << c.info.name << ' ' << (c.info.kind == ChannelKind::Mathieu ? "mathieu" : "xy") << ' '
       << c.info.mode << ' ' << detail::fmt17(c.info.carrier) << ' ' << detail::fmt17(c.info.idle) << "\n";
  for (std::size_t i = 0; i < s.n_samples(); ++i)
    for (const auto& c : s.channels) os << i << ' ' << c.info.name << ' ' << detail::fmt17(c.samples[i]) << "\n";
}

inline std::string serialize_schedule(const PulseSchedule& s) {
  std::ostringstream os;
  write_schedule(os, s);
  return os.str();
}

inline PulseSchedule parse_schedule(std::istream& is) {
  auto fail = [](const std::string& why) -> PulseSchedule { throw std::invalid_argument("schedule parse: " + why); };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "mathieu-schedule" || version != 1) return fail("bad header");
  PulseSchedule s;
  std::string tok;
  std::size_t n = 0, nc = 0;
  if (!(is >> word >> tok) || word != "sample_rate") return fail("missing sample_rate");
  s.sample_rate = detail::parse_double(tok);
  if (!(is >> word >> n) || word != "samples") return fail("missing samples");
  if (!(is >> word >> nc) || word != "channels") return fail("missing channels");
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < nc; ++c) {
    Channel ch;
    std::string kind, carrier, idle;
    if (!(is >> word >> ch.info.name >> kind >> ch.info.mode >> carrier >> idle) || word != "channel")
      return fail("bad channel line");
    if (kind == "mathieu") ch.info.kind = ChannelKind::Mathieu;
    else if (kind == "xy") ch.info.kind = ChannelKind::XY;
    else return fail("unknown channel kind " + kind);
    ch.info.carrier = detail::parse_double(carrier);
    ch.info.idle = detail::parse_double(idle);
    ch.samples.assign(n, std::numeric_limits<double>::quiet_NaN());
    index[ch.info.name] = s.channels.size();
    s.channels.push_back(std::move(ch));
  }
  for (std::size_t r = 0; r < n * nc; ++r) {
    std::size_t i = 0;
    std::string name, val;
    if (!(is >> i >> name >> val)) return fail("truncated sample data");
    auto it = index.find(name);
    if (it == index.end() || i >= n) return fail("sample row out of range");
    s.channels[it->second].samples[i] = detail::parse_double(val);
  }
  for (const auto& c : s.channels)
    for (double v : c.samples)
      if (std::isnan(v)) return fail("missing sample");
  return s;
}

inline PulseSchedule parse_schedule(const std::string& text) {
  std::istringstream is(text);
  return parse_schedule(is);
}

}  // namespace mathieu
