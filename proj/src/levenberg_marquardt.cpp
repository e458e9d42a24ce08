#include "sqz/levenberg_marquardt.hpp"

#include "sqz/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sqz
{
namespace
{

Eigen::VectorXd project(Eigen::VectorXd x, const LmOptions &options)
{
    if (options.lower)
    {
        x = x.cwiseMax(*options.lower);
    }
    if (options.upper)
    {
        x = x.cwiseMin(*options.upper);
    }
    return x;
}

// Parameters pinned at a bound by a gradient that points out of the box.
std::vector<bool> active_bounds(const Eigen::VectorXd &x, const Eigen::VectorXd &gradient, const LmOptions &options)
{
    std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        const bool at_lower = options.lower && x[i] <= (*options.lower)[i] && gradient[i] > 0.0;
        const bool at_upper = options.upper && x[i] >= (*options.upper)[i] && gradient[i] < 0.0;
        active[static_cast<std::size_t>(i)] = at_lower || at_upper;
    }
    return active;
}

} // namespace

LmResult levenberg_marquardt(const ResidualFunction &fn, Eigen::VectorXd initial, const LmOptions &options)
{
    const Eigen::Index n = initial.size();
    if (n == 0)
    {
        throw ArgumentError("levenberg_marquardt: no parameters");
    }

    LmResult result;
    result.params = project(std::move(initial), options);
    fn(result.params, result.residuals, &result.jacobian);
    result.cost = result.residuals.squaredNorm();
    if (!std::isfinite(result.cost))
    {
        throw ArgumentError("levenberg_marquardt: non-finite residuals at the initial point");
    }
    result.cost_history.push_back(result.cost);

    double lambda = options.initial_lambda;
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd trial_residuals;

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations)
    {
        const Eigen::MatrixXd normal = result.jacobian.transpose() * result.jacobian;
        Eigen::VectorXd gradient = result.jacobian.transpose() * result.residuals;
        const std::vector<bool> active = active_bounds(result.params, gradient, options);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (active[static_cast<std::size_t>(i)])
            {
                gradient[i] = 0.0;
            }
        }
        if (gradient.lpNorm<Eigen::Infinity>() <= options.gtol || result.cost == 0.0)
        {
            result.converged = true;
            return result;
        }

        scale = scale.cwiseMax(normal.diagonal());
        const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-15;

        bool accepted = false;
        Eigen::VectorXd step;
        Eigen::VectorXd trial;
        double trial_cost = 0.0;
        while (lambda < 1e16)
        {
            Eigen::MatrixXd damped = normal;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                damped(i, i) += lambda * std::max(scale[i], floor);
                if (active[static_cast<std::size_t>(i)])
                {
                    damped.row(i).setZero();
                    damped.col(i).setZero();
                    damped(i, i) = 1.0;
                }
            }
            step = damped.ldlt().solve(-gradient);
            trial = project(result.params + step, options);
            fn(trial, trial_residuals, nullptr);
            trial_cost = trial_residuals.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost < result.cost)
            {
                accepted = true;
                lambda = std::max(lambda * 0.1, 1e-15);
                break;
            }
            lambda *= 10.0;
        }

        if (!accepted)
        {
            // No descent direction left at working precision.
            result.converged = true;
            return result;
        }

        const double decrease = result.cost - trial_cost;
        const double step_norm = (trial - result.params).norm();
        const double x_norm = result.params.norm();
        result.params = trial;
        fn(result.params, result.residuals, &result.jacobian);
        result.cost = result.residuals.squaredNorm();
        result.cost_history.push_back(result.cost);

        if (decrease <= options.ftol * trial_cost || step_norm <= options.xtol * (x_norm + options.xtol))
        {
            result.converged = true;
            ++result.iterations;
            return result;
        }
    }
    result.converged = false;
    return result;
}

} // namespace sqz
