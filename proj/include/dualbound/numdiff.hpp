#pragma once

#include <functional>

#include <Eigen/Core>

namespace dualbound {

// Central differences with step h*(1+|x|_inf); used as the fallback whenever a
// problem or model does not supply an analytic derivative.

inline double fd_step_for(const Eigen::VectorXd& x, double h) {
    return h * (1.0 + x.lpNorm<Eigen::Infinity>());
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
    const double step = fd_step_for(x, h);
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (int i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + step;
        double fp = f(xp);
        xp(i) = x(i) - step;
        double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * step);
    }
    return g;
}

inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
    const double step = fd_step_for(x, h);
    Eigen::VectorXd xp = x;
    xp(0) = x(0) + step;
    Eigen::VectorXd fp = f(xp);
    xp(0) = x(0) - step;
    Eigen::VectorXd fm = f(xp);
    xp(0) = x(0);
    Eigen::MatrixXd jac(fp.size(), x.size());
    jac.col(0) = (fp - fm) / (2.0 * step);
    for (int i = 1; i < x.size(); ++i) {
        xp(i) = x(i) + step;
        fp = f(xp);
        xp(i) = x(i) - step;
        fm = f(xp);
        xp(i) = x(i);
        jac.col(i) = (fp - fm) / (2.0 * step);
    }
    return jac;
}

} // namespace dualbound
