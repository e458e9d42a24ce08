#include "sqz/quadrature.hpp"

#include "sqz/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <mutex>

namespace sqz
{
namespace
{

constexpr double kPi = 3.14159265358979323846;

// Orthonormal Hermite polynomial p_n(x) and p_{n-1}(x).
std::pair<double, double> orthonormal_hermite(std::size_t n, double x)
{
    double p_prev = 0.0;
    double p = std::pow(kPi, -0.25);
    for (std::size_t j = 0; j < n; ++j)
    {
        const double jd = static_cast<double>(j);
        const double next = x * std::sqrt(2.0 / (jd + 1.0)) * p - std::sqrt(jd / (jd + 1.0)) * p_prev;
        p_prev = p;
        p = next;
    }
    return {p, p_prev};
}

} // namespace

GaussHermiteRule compute_gauss_hermite(std::size_t n)
{
    if (n == 0)
    {
        throw ArgumentError("Gauss-Hermite rule needs at least one node");
    }

    // Jacobi matrix of the weight exp(-x^2): zero diagonal, off-diagonal sqrt(k/2).
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
    for (Eigen::Index k = 0; k < sub.size(); ++k)
    {
        sub[k] = std::sqrt(static_cast<double>(k + 1) / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double x = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
        for (int iter = 0; iter < 8; ++iter)
        {
            const auto [p, p_prev] = orthonormal_hermite(n, x);
            const double dp = std::sqrt(2.0 * nd) * p_prev;
            const double step = p / dp;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x)))
            {
                break;
            }
        }
        const double dp = std::sqrt(2.0 * nd) * orthonormal_hermite(n, x).second;
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / (dp * dp);
    }
    // Exact symmetry about the origin.
    for (std::size_t i = 0; i < n / 2; ++i)
    {
        const std::size_t j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (n % 2 == 1)
    {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

std::shared_ptr<const GaussHermiteRule> gauss_hermite(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto &slot = cache[n];
    if (!slot)
    {
        slot = std::make_shared<const GaussHermiteRule>(compute_gauss_hermite(n));
    }
    return slot;
}

} // namespace sqz
