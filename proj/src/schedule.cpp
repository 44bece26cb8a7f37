#include "si/schedule.hpp"

#include <cmath>
#include <numbers>

#include "si/errors.hpp"

namespace si {

namespace {

constexpr double kPi = std::numbers::pi;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double d_sigmoid(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

struct GammaFns {
  std::function<double(double)> g, dg, gg;
  double lim0 = 0.0, lim1 = 0.0;
  bool singular = false;
  std::string id;
};

GammaFns build_gamma(const GammaSpec& spec) {
  GammaFns out;
  switch (spec.name) {
    case GammaName::None:
      out.g = [](double) { return 0.0; };
      out.dg = [](double) { return 0.0; };
      out.gg = [](double) { return 0.0; };
      out.id = "none";
      break;
    case GammaName::BrownianBridge: {
      const double a = spec.a;
      if (a <= 0.0) throw InvalidCombination("BrownianBridge gamma needs a > 0");
      out.g = [a](double t) { return std::sqrt(a * t * (1.0 - t)); };
      out.dg = [a](double t) { return 0.5 * a * (1.0 - 2.0 * t) / std::sqrt(a * t * (1.0 - t)); };
      out.gg = [a](double t) { return 0.5 * a * (1.0 - 2.0 * t); };
      out.lim0 = 0.5 * a;
      out.lim1 = -0.5 * a;
      out.singular = true;
      out.id = "bb:a=" + std::to_string(a);
      break;
    }
    case GammaName::Quadratic:
      out.g = [](double t) { return t * (1.0 - t); };
      out.dg = [](double t) { return 1.0 - 2.0 * t; };
      out.gg = [](double t) { return t * (1.0 - t) * (1.0 - 2.0 * t); };
      out.id = "quad";
      break;
    case GammaName::SigmoidSum: {
      const double f = spec.f;
      if (f <= 0.0) throw InvalidCombination("SigmoidSum gamma needs f > 0");
      const double c = sigmoid(-0.5 * f + 1.0) - sigmoid(-0.5 * f - 1.0);
      out.g = [f, c](double t) {
        const double u = f * (t - 0.5);
        return sigmoid(u + 1.0) - sigmoid(u - 1.0) - c;
      };
      out.dg = [f](double t) {
        const double u = f * (t - 0.5);
        return f * (d_sigmoid(u + 1.0) - d_sigmoid(u - 1.0));
      };
      auto g = out.g;
      auto dg = out.dg;
      out.gg = [g, dg](double t) { return g(t) * dg(t); };
      out.id = "sigmoid:f=" + std::to_string(f);
      break;
    }
    case GammaName::SinSquared:
      out.g = [](double t) {
        const double s = std::sin(kPi * t);
        return s * s;
      };
      out.dg = [](double t) { return kPi * std::sin(2.0 * kPi * t); };
      out.gg = [](double t) {
        const double s = std::sin(kPi * t);
        return s * s * kPi * std::sin(2.0 * kPi * t);
      };
      out.id = "sin2";
      break;
  }
  return out;
}

bool check_vp(const Schedule& s) {
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    const double a = s.alpha(t), b = s.beta(t), g = s.gamma(t);
    if (std::abs(a * a + b * b + g * g - 1.0) > 1e-12) return false;
  }
  return true;
}

}  // namespace

Schedule make_schedule(ScheduleName name, GammaSpec gamma) {
  Schedule s;
  GammaFns gf = build_gamma(gamma);
  const bool has_gamma = gamma.name != GammaName::None;

  switch (name) {
    case ScheduleName::Linear: {
      s.kind = has_gamma ? ScheduleKind::TwoSided : ScheduleKind::OneSided;
      s.id = "linear+" + gf.id;
      s.alpha_fn = [](double t) { return 1.0 - t; };
      s.beta_fn = [](double t) { return t; };
      s.d_alpha_fn = [](double) { return -1.0; };
      s.d_beta_fn = [](double) { return 1.0; };
      s.aa_fn = [](double t) { return t - 1.0; };
      s.bb_fn = [](double t) { return t; };
      break;
    }
    case ScheduleName::Trig: {
      if (gamma.name == GammaName::SinSquared)
        throw InvalidCombination("trig with sin2 gamma: alpha loses differentiability at t=1/2");
      s.kind = has_gamma ? ScheduleKind::TwoSided : ScheduleKind::OneSided;
      s.id = "trig+" + gf.id;
      if (!has_gamma) {
        s.alpha_fn = [](double t) { return std::cos(0.5 * kPi * t); };
        s.beta_fn = [](double t) { return std::sin(0.5 * kPi * t); };
        s.d_alpha_fn = [](double t) { return -0.5 * kPi * std::sin(0.5 * kPi * t); };
        s.d_beta_fn = [](double t) { return 0.5 * kPi * std::cos(0.5 * kPi * t); };
      } else {
        // prefactor p = sqrt(1 - gamma^2); p' = -gamma dgamma / p stays finite
        auto g = gf.g;
        auto gg = gf.gg;
        auto p = [g](double t) { return std::sqrt(1.0 - g(t) * g(t)); };
        s.alpha_fn = [p](double t) { return p(t) * std::cos(0.5 * kPi * t); };
        s.beta_fn = [p](double t) { return p(t) * std::sin(0.5 * kPi * t); };
        s.d_alpha_fn = [p, gg](double t) {
          const double pt = p(t);
          return -gg(t) / pt * std::cos(0.5 * kPi * t) - pt * 0.5 * kPi * std::sin(0.5 * kPi * t);
        };
        s.d_beta_fn = [p, gg](double t) {
          const double pt = p(t);
          return -gg(t) / pt * std::sin(0.5 * kPi * t) + pt * 0.5 * kPi * std::cos(0.5 * kPi * t);
        };
      }
      s.aa_fn = [a = s.alpha_fn, da = s.d_alpha_fn](double t) { return a(t) * da(t); };
      s.bb_fn = [b = s.beta_fn, db = s.d_beta_fn](double t) { return b(t) * db(t); };
      break;
    }
    case ScheduleName::EncDec: {
      if (!has_gamma)
        throw InvalidCombination("enc-dec without a latent gamma collapses to a point mass at t=1/2");
      s.kind = ScheduleKind::TwoSided;
      s.id = "encdec+" + gf.id;
      s.alpha_fn = [](double t) {
        if (t >= 0.5) return 0.0;
        const double c = std::cos(kPi * t);
        return c * c;
      };
      s.beta_fn = [](double t) {
        if (t <= 0.5) return 0.0;
        const double c = std::cos(kPi * t);
        return c * c;
      };
      s.d_alpha_fn = [](double t) { return t < 0.5 ? -kPi * std::sin(2.0 * kPi * t) : 0.0; };
      s.d_beta_fn = [](double t) { return t > 0.5 ? -kPi * std::sin(2.0 * kPi * t) : 0.0; };
      s.aa_fn = [a = s.alpha_fn, da = s.d_alpha_fn](double t) { return a(t) * da(t); };
      s.bb_fn = [b = s.beta_fn, db = s.d_beta_fn](double t) { return b(t) * db(t); };
      break;
    }
    case ScheduleName::SbdmVp: {
      if (has_gamma) throw InvalidCombination("sbdm-vp is one-sided; gamma must be none");
      s.kind = ScheduleKind::OneSided;
      s.id = "sbdm-vp+none";
      s.alpha_fn = [](double t) { return std::sqrt(1.0 - t * t); };
      s.beta_fn = [](double t) { return t; };
      s.d_alpha_fn = [](double t) { return -t / std::sqrt(1.0 - t * t); };
      s.d_beta_fn = [](double) { return 1.0; };
      s.aa_fn = [](double t) { return -t; };
      s.bb_fn = [](double t) { return t; };
      s.d_alpha_singular = true;
      break;
    }
    case ScheduleName::MirrorFlat: {
      if (!has_gamma) throw InvalidCombination("mirror without gamma is the identity process");
      s.kind = ScheduleKind::Mirror;
      s.id = "mirror+" + gf.id;
      s.alpha_fn = [](double) { return 1.0; };
      s.beta_fn = [](double) { return 0.0; };
      s.d_alpha_fn = [](double) { return 0.0; };
      s.d_beta_fn = [](double) { return 0.0; };
      s.aa_fn = [](double) { return 0.0; };
      s.bb_fn = [](double) { return 0.0; };
      break;
    }
  }

  s.gamma_fn = gf.g;
  s.d_gamma_fn = gf.dg;
  s.gg_fn = gf.gg;
  s.gg_limit_0 = gf.lim0;
  s.gg_limit_1 = gf.lim1;
  s.d_gamma_singular = gf.singular;
  s.variance_preserving = check_vp(s);
  return s;
}

GammaSpec parse_gamma(const std::string& gamma) {
  GammaSpec spec;
  if (gamma.empty() || gamma == "none") {
    spec.name = GammaName::None;
  } else if (gamma == "quad") {
    spec.name = GammaName::Quadratic;
  } else if (gamma == "sin2") {
    spec.name = GammaName::SinSquared;
  } else if (gamma.rfind("bb", 0) == 0) {
    spec.name = GammaName::BrownianBridge;
    const auto pos = gamma.find("a=");
    if (pos != std::string::npos) spec.a = std::stod(gamma.substr(pos + 2));
  } else if (gamma.rfind("sigmoid", 0) == 0) {
    spec.name = GammaName::SigmoidSum;
    const auto pos = gamma.find("f=");
    if (pos != std::string::npos) spec.f = std::stod(gamma.substr(pos + 2));
  } else {
    throw ConfigError("unknown gamma '" + gamma + "'");
  }
  return spec;
}

Schedule parse_schedule(const std::string& name, const std::string& gamma) {
  const GammaSpec spec = parse_gamma(gamma);
  if (name == "linear") return make_schedule(ScheduleName::Linear, spec);
  if (name == "trig") return make_schedule(ScheduleName::Trig, spec);
  if (name == "encdec") return make_schedule(ScheduleName::EncDec, spec);
  if (name == "sbdm-vp") return make_schedule(ScheduleName::SbdmVp, spec);
  if (name == "mirror") return make_schedule(ScheduleName::MirrorFlat, spec);
  throw ConfigError("unknown schedule '" + name + "'");
}

ValidationReport validate(const Schedule& s, int grid_points, double tol) {
  ValidationReport rep;
  auto flag = [&](double t, std::string what) {
    rep.ok = false;
    rep.issues.push_back({t, std::move(what)});
  };
  auto expect = [&](double got, double want, double t, const char* what) {
    if (std::abs(got - want) > tol) flag(t, std::string(what) + " = " + std::to_string(got));
  };

  switch (s.kind) {
    case ScheduleKind::TwoSided:
      expect(s.alpha(0.0), 1.0, 0.0, "alpha(0) != 1");
      expect(s.beta(1.0), 1.0, 1.0, "beta(1) != 1");
      expect(s.alpha(1.0), 0.0, 1.0, "alpha(1) != 0");
      expect(s.beta(0.0), 0.0, 0.0, "beta(0) != 0");
      expect(s.gamma(0.0), 0.0, 0.0, "gamma(0) != 0");
      expect(s.gamma(1.0), 0.0, 1.0, "gamma(1) != 0");
      break;
    case ScheduleKind::OneSided:
      expect(s.alpha(0.0), 1.0, 0.0, "alpha(0) != 1");
      expect(s.alpha(1.0), 0.0, 1.0, "alpha(1) != 0");
      expect(s.beta(0.0), 0.0, 0.0, "beta(0) != 0");
      expect(s.beta(1.0), 1.0, 1.0, "beta(1) != 1");
      break;
    case ScheduleKind::Mirror:
      expect(s.alpha(0.0), 1.0, 0.0, "alpha(0) != 1");
      expect(s.alpha(1.0), 1.0, 1.0, "alpha(1) != 1");
      expect(s.gamma(0.0), 0.0, 0.0, "gamma(0) != 0");
      expect(s.gamma(1.0), 0.0, 1.0, "gamma(1) != 0");
      break;
  }

  bool vp = true;
  for (int i = 1; i < grid_points; ++i) {
    const double t = static_cast<double>(i) / grid_points;
    const double a = s.alpha(t), b = s.beta(t), g = s.gamma(t);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(g)) {
      flag(t, "non-finite coefficient");
      continue;
    }
    if (s.kind == ScheduleKind::TwoSided || s.kind == ScheduleKind::Mirror) {
      if (g <= 0.0) flag(t, "gamma not positive on (0,1)");
    }
    if (s.kind == ScheduleKind::OneSided) {
      if (a <= 0.0) flag(t, "alpha not positive on [0,1)");
    }
    if (std::abs(a * a + b * b + g * g - 1.0) > 1e-12) vp = false;
  }
  rep.variance_preserving = vp;
  if (s.variance_preserving && !vp) flag(0.5, "variance-preserving flag set but identity violated");
  return rep;
}

}  // namespace si
