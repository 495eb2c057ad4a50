#include "streamstat/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace streamstat::dist {

double t_two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t d(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(d, std::fabs(t))));
}

double f_upper_p(double f, double df1, double df2) {
  if (std::isnan(f) || !(df1 > 0.0) || !(df2 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const boost::math::fisher_f d(df1, df2);
  return boost::math::cdf(boost::math::complement(d, f));
}

double chi2_upper_p(double x, double df) {
  if (std::isnan(x) || !(df > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const boost::math::chi_squared d(df);
  return boost::math::cdf(boost::math::complement(d, x));
}

double f_upper_quantile(double alpha, double df1, double df2) {
  const boost::math::fisher_f d(df1, df2);
  return boost::math::quantile(boost::math::complement(d, alpha));
}

}  // namespace streamstat::dist
