#include <gtest/gtest.h>

#include <mathieu/gates.hpp>
#include <mathieu/pulse.hpp>

using namespace mathieu;

TEST(Pulse, GaussianAreaHitsTargetAngle) {
  auto env = gaussian_envelope(20.0, 160.0, M_PI, 0.0, 4.0);
  EXPECT_EQ(env.waveform.samples.size(), 641u);
  EXPECT_NEAR(envelope_area(env.waveform), M_PI, 1e-12);
  EXPECT_EQ(env.waveform.samples.front(), 0.0);
  EXPECT_EQ(env.waveform.samples.back(), 0.0);
  const auto& s = env.waveform.samples;
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], s[s.size() - 1 - i], 1e-15);
}

TEST(Pulse, GaussianRejectsShortWindow) {
  EXPECT_THROW(gaussian_envelope(10.0, 30.0, M_PI, 0.0, 4.0), std::invalid_argument);
  EXPECT_THROW(gaussian_envelope(0.0, 30.0, M_PI, 0.0, 4.0), std::invalid_argument);
}

TEST(Pulse, ComposePlacesSegmentsAndFillsIdle) {
  Waveform w{{1.0, 2.0, 3.0}, 2.0};
  auto s = compose_schedule({{"m", ChannelKind::Mathieu, 1, 0.0, 0.5}, {"x", ChannelKind::XY, 0, 5.2, 0.0}},
                            {{"m", w, 1.0}}, 2.0);
  ASSERT_EQ(s.n_samples(), 5u);
  EXPECT_EQ(s.channel("m").samples, (std::vector<double>{0.5, 0.5, 1.0, 2.0, 3.0}));
  EXPECT_EQ(s.channel("x").samples, std::vector<double>(5, 0.0));
  EXPECT_DOUBLE_EQ(s.duration(), 2.0);
  EXPECT_DOUBLE_EQ(s.value(s.channel("m"), 1.25), 1.5);
  EXPECT_DOUBLE_EQ(s.value(s.channel("m"), 10.0), 3.0);
}

TEST(Pulse, ComposeRejectsBadSegments) {
  Waveform w{{1.0, 2.0, 3.0}, 2.0};
  std::vector<ChannelInfo> ch{{"m", ChannelKind::Mathieu, 1, 0.0, 0.0}};
  EXPECT_THROW(compose_schedule(ch, {{"m", w, 0.0}, {"m", w, 0.5}}, 2.0), std::invalid_argument);   // overlap
  EXPECT_THROW(compose_schedule(ch, {{"m", w, 0.0}, {"m", w, 1.0}}, 2.0), std::invalid_argument);   // 3 != 1 at join
  EXPECT_THROW(compose_schedule(ch, {{"m", w, 0.25}}, 2.0), std::invalid_argument);                 // off grid
  EXPECT_THROW(compose_schedule(ch, {{"q", w, 0.0}}, 2.0), std::invalid_argument);                  // unknown
  EXPECT_THROW(compose_schedule(ch, {{"m", Waveform{{1.0}, 4.0}, 0.0}}, 2.0), std::invalid_argument);  // rate
  Waveform back{{3.0, 0.0}, 2.0};
  EXPECT_NO_THROW(compose_schedule(ch, {{"m", w, 0.0}, {"m", back, 1.0}}, 2.0));
}

TEST(Pulse, ScheduleRoundTripsExactly) {
  auto env = gaussian_envelope(4.0, 16.0, M_PI / 2.0, 0.0, 4.0);
  auto s = compose_schedule({{"mathieu", ChannelKind::Mathieu, 1, 0.0, 0.0202}, {"xy1", ChannelKind::XY, 0, 5.19, 0.0}},
                            {{"xy1", env.waveform, 0.0}}, 4.0);
  const std::string text = serialize_schedule(s);
  auto back = parse_schedule(text);
  ASSERT_EQ(back.channels.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(back.channels[c].samples, s.channels[c].samples);
    EXPECT_EQ(back.channels[c].info.name, s.channels[c].info.name);
    EXPECT_EQ(back.channels[c].info.idle, s.channels[c].info.idle);
  }
  EXPECT_EQ(serialize_schedule(back), text);
}

TEST(Pulse, ParseRejectsDamagedText) {
  EXPECT_THROW(parse_schedule("mathieu-schedule 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_schedule("mathieu-schedule 1\nsample_rate 4\nsamples 2\nchannels 1\nchannel a xy 0 5 0\n0 a 1\n"),
               std::invalid_argument);
  EXPECT_THROW(parse_schedule("mathieu-schedule 1\nsample_rate 4\nsamples 1\nchannels 1\nchannel a zz 0 5 0\n0 a 1\n"),
               std::invalid_argument);
}

TEST(Pulse, FlatWindowRampHasConstantAdiabaticRate) {
  LeakageProfile p{{0.0, 0.1}, {1.0, 1.0}, {0.5, 0.5}, "11"};  // R = 0.5 GHz^2 everywhere
  auto r = make_adiabatic_waveform(p, 0.1, Window::Flat, 0.0, 0.1, 4.0);
  // T = (0.1 GHz) / (k R) = 2 ns
  EXPECT_NEAR(r.ideal_duration, 2.0, 1e-12);
  ASSERT_EQ(r.waveform.samples.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(r.waveform.samples[i], 0.1 * i / 8.0, 1e-12);
}

TEST(Pulse, SineSquaredRampIsSlowAtEnds) {
  LeakageProfile p{{0.0, 0.1}, {1.0, 1.0}, {0.5, 0.5}, "11"};
  auto r = make_adiabatic_waveform(p, 0.1, Window::SineSquared, 0.0, 0.1, 4.0);
  EXPECT_NEAR(r.ideal_duration, 4.0, 1e-12);  // F(1) = 1/2
  const auto& w = r.waveform.samples;
  EXPECT_LT(w[1] - w[0], w[w.size() / 2 + 1] - w[w.size() / 2]);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_GE(w[i], w[i - 1]);
  EXPECT_EQ(w.back(), 0.1);
}

TEST(Pulse, RampErrors) {
  LeakageProfile p{{0.0, 0.1}, {0.0, 0.0}, {0.5, 0.5}, "11"};
  EXPECT_THROW(make_adiabatic_waveform(p, 0.1, Window::Flat, 0.0, 0.1, 4.0), PulseError);
  EXPECT_NO_THROW(make_adiabatic_waveform(p, 0.1, Window::Flat, 0.0, 0.1, 4.0, 0.05));
  EXPECT_THROW(make_adiabatic_waveform(p, 0.1, Window::Flat, 0.0, 0.2, 4.0), std::invalid_argument);
  EXPECT_THROW(make_adiabatic_waveform(p, -1.0, Window::Flat, 0.0, 0.1, 4.0), std::invalid_argument);
}

TEST(Pulse, LeakageProfileIsFiniteForTableOneDevice) {
  auto s = two_qubit_system(5.20, 5.75, 0.25, 0.25, 0.03, 6);
  std::vector<double> g{0.0, 0.01, 0.02, 0.03};
  auto p = profile_leakage(s, DriveSpec{1, 0.0, 10.60, 0.0}, g, "11");
  ASSERT_EQ(p.S.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GT(p.S[i], 0.0);
    EXPECT_GT(p.gap[i], 0.0);
    EXPECT_TRUE(std::isfinite(p.rate(g[i])));
  }
  EXPECT_THROW(profile_leakage(s, DriveSpec{1, 0.0, 10.60, 0.0}, g, "22"), std::invalid_argument);
}
