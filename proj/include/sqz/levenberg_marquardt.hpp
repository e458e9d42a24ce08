#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace sqz
{

// Fills residuals for the given parameters; fills the Jacobian d r / d p when
// the pointer is non-null.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd &params, Eigen::VectorXd &residuals, Eigen::MatrixXd *jacobian)>;

struct LmOptions
{
    int max_iterations = 200;
    double ftol = 1e-12; // relative decrease of the sum of squares
    double xtol = 1e-10; // relative step length
    double gtol = 1e-14; // max-norm of J^T r
    double initial_lambda = 1e-3;
    // Optional box; trial points are projected onto it.
    std::optional<Eigen::VectorXd> lower;
    std::optional<Eigen::VectorXd> upper;
};

struct LmResult
{
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0; // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    // Cost after every accepted step, starting with the initial point.
    std::vector<double> cost_history;
};

// Marquardt-damped Gauss-Newton with adaptive diagonal scaling (More 1978).
// Accepted steps never increase the cost.
LmResult levenberg_marquardt(const ResidualFunction &fn, Eigen::VectorXd initial, const LmOptions &options = {});

} // namespace sqz
