#include "streamstat/family.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "streamstat/error.hpp"

namespace streamstat::ee {

namespace {

constexpr double kPinnedLow = 1e-10;

double logistic_mean(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void check_finite(const FamilyEval& f, const std::string& name) {
  if (!f.mu.allFinite() || !f.s2w.allFinite() || !f.sw.allFinite()) {
    fail(ErrorCode::DomainViolation, name + ": mean or weight is not finite at this beta");
  }
}

}  // namespace

Family Family::logistic() { return Family(Kind::Logistic, "logistic"); }

Family Family::poisson() { return Family(Kind::Poisson, "poisson"); }

Family Family::gaussian() { return Family(Kind::Gaussian, "gaussian"); }

Family Family::quasi(std::string link_name, std::function<double(double)> g, std::function<double(double)> dg) {
  if (!g || !dg) fail(ErrorCode::InvalidConfig, "quasi family needs g and its derivative");
  Family f(Kind::Quasi, "quasi:" + link_name);
  f.g_ = std::move(g);
  f.dg_ = std::move(dg);
  return f;
}

Family Family::from_name(std::string_view name) {
  if (name == "logistic") return logistic();
  if (name == "poisson") return poisson();
  if (name == "gaussian") return gaussian();
  if (name == "quasi:identity") {
    return quasi("identity", [](double e) { return e; }, [](double) { return 1.0; });
  }
  if (name == "quasi:log") {
    return quasi("log", [](double e) { return std::exp(e); }, [](double e) { return std::exp(e); });
  }
  if (name == "quasi:logit") {
    return quasi("logit", logistic_mean, [](double e) {
      const double m = logistic_mean(e);
      return m * (1.0 - m);
    });
  }
  if (name == "quasi:probit") {
    return quasi(
        "probit", [](double e) { return 0.5 * std::erfc(-e / std::numbers::sqrt2); },
        [](double e) { return std::exp(-0.5 * e * e) / std::sqrt(2.0 * std::numbers::pi); });
  }
  fail(ErrorCode::InvalidConfig, "unknown family '" + std::string(name) + "'");
}

FamilyEval Family::eval(const Vector& eta) const {
  const Eigen::Index n = eta.size();
  FamilyEval f;
  f.mu.resize(n);
  f.sw = Vector::Ones(n);
  f.s2w.resize(n);
  switch (kind_) {
    case Kind::Logistic:
      for (Eigen::Index i = 0; i < n; ++i) {
        f.mu(i) = logistic_mean(eta(i));
        f.s2w(i) = f.mu(i) * (1.0 - f.mu(i));
      }
      break;
    case Kind::Poisson:
      f.mu = eta.array().exp().matrix();
      f.s2w = f.mu;
      break;
    case Kind::Gaussian:
      f.mu = eta;
      f.s2w.setOnes();
      break;
    case Kind::Quasi:
      for (Eigen::Index i = 0; i < n; ++i) {
        f.mu(i) = g_(eta(i));
        f.s2w(i) = dg_(eta(i));
      }
      break;
  }
  check_finite(f, name_);
  return f;
}

bool Family::pinned(const Vector& mu) const {
  if (kind_ != Kind::Logistic) return false;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu(i) < kPinnedLow || mu(i) > 1.0 - kPinnedLow) return true;
  }
  return false;
}

}  // namespace streamstat::ee
