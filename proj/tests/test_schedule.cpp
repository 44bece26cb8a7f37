#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "si/errors.hpp"
#include "si/rng.hpp"
#include "si/schedule.hpp"

using namespace si;

namespace {

std::vector<Schedule> shipped() {
  std::vector<Schedule> out;
  out.push_back(parse_schedule("linear", "bb:a=1"));
  out.push_back(parse_schedule("linear", "bb:a=2"));
  out.push_back(parse_schedule("linear", "quad"));
  out.push_back(parse_schedule("linear", "sigmoid:f=20"));
  out.push_back(parse_schedule("linear", "sin2"));
  out.push_back(parse_schedule("linear", "none"));
  out.push_back(parse_schedule("trig", "none"));
  out.push_back(parse_schedule("trig", "bb:a=2"));
  out.push_back(parse_schedule("trig", "quad"));
  out.push_back(parse_schedule("encdec", "sin2"));
  out.push_back(parse_schedule("sbdm-vp", "none"));
  out.push_back(parse_schedule("mirror", "bb:a=1"));
  return out;
}

double fd(const std::function<double(double)>& f, double t, double h = 1e-6) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("named schedule values") {
  auto lin = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  CHECK(lin.alpha(0.5) == doctest::Approx(0.5));
  CHECK(lin.beta(0.5) == doctest::Approx(0.5));
  CHECK(lin.gamma(0.5) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  auto sbdm = make_schedule(ScheduleName::SbdmVp);
  CHECK(sbdm.alpha(0.0) == 1.0);
  CHECK(sbdm.beta(0.0) == 0.0);
  for (double t : {0.1, 0.35, 0.8}) {
    CHECK(sbdm.alpha(t) == doctest::Approx(std::sqrt(1 - t * t)));
    CHECK(sbdm.beta(t) == doctest::Approx(t));
  }

  auto ed = make_schedule(ScheduleName::EncDec, {GammaName::SinSquared});
  CHECK(ed.alpha(0.5) == 0.0);
  CHECK(ed.beta(0.5) == 0.0);
  CHECK(ed.gamma(0.5) == doctest::Approx(1.0));
  CHECK(ed.d_alpha(0.5) == 0.0);
  CHECK(ed.d_beta(0.5) == 0.0);
}

TEST_CASE("invalid combinations are rejected") {
  CHECK_THROWS_AS(make_schedule(ScheduleName::EncDec, {GammaName::None}), InvalidCombination);
  CHECK_THROWS_AS(make_schedule(ScheduleName::SbdmVp, {GammaName::BrownianBridge, 1.0}),
                  InvalidCombination);
  CHECK_THROWS_AS(make_schedule(ScheduleName::Trig, {GammaName::SinSquared}), InvalidCombination);
  CHECK_THROWS_AS(make_schedule(ScheduleName::MirrorFlat, {GammaName::None}), InvalidCombination);
}

TEST_CASE("gg endpoint products") {
  for (double a : {1.0, 2.0}) {
    auto s = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, a});
    CHECK(s.gg(0.0) == doctest::Approx(a / 2));
    CHECK(s.gg(1e-9) == doctest::Approx(a / 2));
    CHECK(s.gg(1.0) == doctest::Approx(-a / 2));
    CHECK(s.gg(1.0 - 1e-9) == doctest::Approx(-a / 2));
  }
  auto quad = make_schedule(ScheduleName::Linear, {GammaName::Quadratic});
  CHECK(quad.gg(0.0) == doctest::Approx(0.0));
  auto sin2 = make_schedule(ScheduleName::Linear, {GammaName::SinSquared});
  CHECK(sin2.gg(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("validate passes shipped schedules and reports violations") {
  auto lin = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 2.0});
  auto rep = validate(lin);
  CHECK(rep.ok);
  CHECK(rep.variance_preserving);

  auto trig = make_schedule(ScheduleName::Trig);
  rep = validate(trig);
  CHECK(rep.ok);
  CHECK(rep.variance_preserving);

  for (const auto& s : shipped()) {
    CAPTURE(s.id);
    CHECK(validate(s).ok);
  }

  // hand-built two-sided schedule with gamma(1) != 0
  Schedule bad = make_schedule(ScheduleName::Linear, {GammaName::BrownianBridge, 1.0});
  bad.gamma_fn = [](double t) { return std::sqrt(t * (1 - t)) + 0.1 * t; };
  bad.variance_preserving = false;
  rep = validate(bad);
  CHECK(!rep.ok);
  bool boundary = false;
  for (const auto& i : rep.issues) boundary |= i.what.find("gamma(1)") != std::string::npos;
  CHECK(boundary);
}

TEST_CASE("finite differences confirm alpha/beta derivatives") {
  rng::Philox g{7, 0};
  for (const auto& s : shipped()) {
    CAPTURE(s.id);
    for (int k = 0; k < 100; ++k) {
      double t = 0.01 + 0.98 * rng::uniform(g, k);
      if (s.id.rfind("encdec", 0) == 0 && std::abs(t - 0.5) < 2e-3) continue;  // kink in d^2
      const double da = fd(s.alpha_fn, t);
      const double db = fd(s.beta_fn, t);
      if (std::isfinite(s.d_alpha(t))) CHECK(std::abs(da - s.d_alpha(t)) < 1e-6);
      CHECK(std::abs(db - s.d_beta(t)) < 1e-6);
      CHECK(std::abs(s.aa(t) - s.alpha(t) * s.d_alpha(t)) < 1e-9);
      CHECK(std::abs(s.bb(t) - s.beta(t) * s.d_beta(t)) < 1e-9);
    }
  }
}

TEST_CASE("gamma^2 derivative matches 2*gg and limits are attained") {
  rng::Philox g{8, 0};
  for (const auto& s : shipped()) {
    CAPTURE(s.id);
    auto g2 = [&](double t) { return s.gamma(t) * s.gamma(t); };
    for (int k = 0; k < 100; ++k) {
      const double t = 1e-3 + (1 - 2e-3) * rng::uniform(g, k);
      CHECK(std::abs(fd(g2, t) - 2.0 * s.gg(t)) < 1e-6);
    }
    // geometric approach to the endpoint limits
    double t = 1e-3;
    const double slope = 2.2 * std::max(1.0, std::abs(s.gg_limit_0) + std::abs(s.gg_limit_1));
    for (int k = 0; k < 6; ++k, t *= 0.5) {
      CHECK(std::abs(s.gg_fn(t) - s.gg_limit_0) < (s.d_gamma_singular ? slope * t : 1.0));
      CHECK(std::abs(s.gg_fn(1 - t) - s.gg_limit_1) < (s.d_gamma_singular ? slope * t : 1.0));
    }
    if (s.d_gamma_singular) {
      CHECK(std::abs(s.gg_fn(1e-9) - s.gg_limit_0) < 1e-8);
      CHECK(std::abs(s.gg_fn(1 - 1e-9) - s.gg_limit_1) < 1e-8);
    }
  }
}

TEST_CASE("variance preserving identity is tight") {
  for (const char* name : {"linear", "trig"}) {
    auto s = parse_schedule(name, name == std::string("linear") ? "bb:a=2" : "none");
    REQUIRE(s.variance_preserving);
    for (int i = 0; i <= 5000; ++i) {
      const double t = i / 5000.0;
      const double a = s.alpha(t), b = s.beta(t), g = s.gamma(t);
      CHECK(std::abs(a * a + b * b + g * g - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("trig with gamma keeps prefactor identity") {
  auto s = parse_schedule("trig", "bb:a=2");
  REQUIRE(s.variance_preserving);
  CHECK(validate(s).variance_preserving);
}
