#pragma once

namespace streamstat::dist {

/// P(|T_df| >= |t|).
double t_two_sided_p(double t, double df);

/// P(F_{df1,df2} >= f).
double f_upper_p(double f, double df1, double df2);

/// P(chi2_df >= x).
double chi2_upper_p(double x, double df);

/// Upper-tail quantile: q with P(F_{df1,df2} >= q) = alpha.
double f_upper_quantile(double alpha, double df1, double df2);

}  // namespace streamstat::dist
