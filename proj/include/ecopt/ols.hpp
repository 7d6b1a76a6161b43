#pragma once

#include <Eigen/Dense>

namespace ecopt {

enum class Covariance { classical, hc1 };

struct OlsResult {
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t_stat;
    Eigen::VectorXd p_value;  // two-sided
    Eigen::VectorXd residuals;
    double ssr = 0.0;
    double sst = 0.0;  // centered
    double r2 = 0.0;
    double adj_r2 = 0.0;
    Eigen::Index n = 0;
    Eigen::Index k = 0;
};

// Least squares with rank check. Throws NumericError when the design is rank
// deficient or has no residual degrees of freedom.
OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Covariance cov = Covariance::classical);

// Two-sided p-value for a t statistic; uses the normal law when n > 200.
double two_sided_p(double t, Eigen::Index n, Eigen::Index df);

}  // namespace ecopt
