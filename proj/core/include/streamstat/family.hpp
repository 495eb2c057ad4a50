#pragma once

// Score-function families for estimating equations
// psi_i(beta) = x_i S_i W_i (y_i - mu_i), mu_i = g(x_i' beta), S_i = dmu/deta.

#include <functional>
#include <string>
#include <string_view>

#include "streamstat/numkern.hpp"

namespace streamstat::ee {

/// Per-row quantities at a given linear predictor. `sw` = S * W multiplies the
/// residual in the score; `s2w` = S^2 * W is the weight in A = X' diag(s2w) X.
struct FamilyEval {
  Vector mu;
  Vector sw;
  Vector s2w;
};

class Family {
 public:
  enum class Kind { Logistic, Poisson, Gaussian, Quasi };

  static Family logistic();
  static Family poisson();
  /// Identity link with unit weights; the estimating equation is least squares.
  static Family gaussian();
  /// Quasi-score psi = [y - g(x'beta)] x with caller-supplied mean function g
  /// and its derivative; A = X' diag(g') X.
  static Family quasi(std::string link_name, std::function<double(double)> g, std::function<double(double)> dg);

  /// "logistic", "poisson", "gaussian", or "quasi:<link>" with link in
  /// {identity, log, logit, probit}. Throws InvalidConfig otherwise.
  static Family from_name(std::string_view name);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /// Throws DomainViolation when any mean or weight is not finite.
  FamilyEval eval(const Vector& eta) const;

  /// Fitted probabilities pinned at 0 or 1 (logistic only).
  bool pinned(const Vector& mu) const;

 private:
  Family(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  Kind kind_;
  std::string name_;
  std::function<double(double)> g_;
  std::function<double(double)> dg_;
};

}  // namespace streamstat::ee
