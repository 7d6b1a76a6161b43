#include "ecopt/ols.hpp"

#include "ecopt/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <string>

namespace ecopt {

double two_sided_p(double t, Eigen::Index n, Eigen::Index df) {
    if (std::isinf(t)) return 0.0;
    if (std::isnan(t)) return 1.0;
    const double at = std::abs(t);
    if (n > 200) return std::erfc(at / std::sqrt(2.0));
    boost::math::students_t dist(static_cast<double>(df));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, at));
}

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Covariance cov) {
    const Eigen::Index n = x.rows(), k = x.cols();
    if (y.size() != n) throw NumericError("ols: design and response lengths differ");
    if (n <= k)
        throw NumericError("ols: " + std::to_string(n) + " observations are too few for " + std::to_string(k) +
                           " coefficients");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw NumericError("ols: design matrix is rank deficient");

    OlsResult r;
    r.n = n;
    r.k = k;
    r.coef = qr.solve(y);
    r.residuals = y - x * r.coef;
    r.ssr = r.residuals.squaredNorm();
    r.sst = (y.array() - y.mean()).square().sum();
    r.r2 = r.sst > 0.0 ? 1.0 - r.ssr / r.sst : 1.0;
    r.r2 = std::min(1.0, std::max(0.0, r.r2));
    r.adj_r2 = 1.0 - (1.0 - r.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);

    const Eigen::MatrixXd xtx_inv =
        (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd vcov;
    const double df = static_cast<double>(n - k);
    if (cov == Covariance::classical) {
        vcov = xtx_inv * (r.ssr / df);
    } else {
        Eigen::MatrixXd meat = x.transpose() * r.residuals.array().square().matrix().asDiagonal() * x;
        vcov = xtx_inv * meat * xtx_inv * (static_cast<double>(n) / df);
    }
    r.se = vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    r.t_stat.resize(k);
    r.p_value.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double t;
        if (r.se(j) > 0.0) t = r.coef(j) / r.se(j);
        else t = r.coef(j) == 0.0 ? 0.0 : std::copysign(INFINITY, r.coef(j));
        r.t_stat(j) = t;
        r.p_value(j) = two_sided_p(t, n, n - k);
    }
    return r;
}

}  // namespace ecopt
