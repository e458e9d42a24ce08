#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

namespace sqz
{

// Nodes and weights for integrals of the form  int f(x) exp(-x^2) dx.
struct GaussHermiteRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub-Welsch eigen-decomposition followed by Newton refinement of each node on
// the orthonormal Hermite recurrence. n >= 1.
GaussHermiteRule compute_gauss_hermite(std::size_t n);

// Cached rule; safe to call concurrently.
std::shared_ptr<const GaussHermiteRule> gauss_hermite(std::size_t n);

inline constexpr std::size_t kDefaultHermiteNodes = 21;

// Above this width a fixed Gauss-Hermite rule aliases on periodic integrands.
inline constexpr double kWrappedRuleThreshold = 1.0;

// E[f(sigma * Z)], Z ~ N(0, 1).
template <class F>
double gaussian_expectation(F &&f, double sigma, std::size_t nodes = kDefaultHermiteNodes)
{
    if (sigma == 0.0)
    {
        return f(0.0);
    }
    const auto rule = gauss_hermite(nodes);
    const double scale = std::sqrt(2.0) * sigma;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i)
    {
        sum += rule->weights[i] * f(scale * rule->nodes[i]);
    }
    return sum / std::sqrt(3.14159265358979323846);
}

// E[f(delta)], delta ~ N(0, sigma^2), for f periodic with the given period.
// Narrow distributions use Gauss-Hermite; wide ones integrate f against the
// wrapped normal density over one period with the trapezoid rule, which is
// spectrally accurate for smooth periodic integrands.
template <class F>
double periodic_gaussian_expectation(F &&f, double sigma, double period,
                                     std::size_t nodes = kDefaultHermiteNodes)
{
    if (sigma <= kWrappedRuleThreshold)
    {
        return gaussian_expectation(f, sigma, nodes);
    }
    constexpr std::size_t kPanels = 256;
    const double h = period / static_cast<double>(kPanels);
    const int images = static_cast<int>(std::ceil(8.0 * sigma / period)) + 1;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
    double sum = 0.0;
    for (std::size_t j = 0; j < kPanels; ++j)
    {
        const double u = static_cast<double>(j) * h;
        double density = 0.0;
        for (int m = -images; m <= images; ++m)
        {
            const double z = (u + m * period) / sigma;
            density += std::exp(-0.5 * z * z);
        }
        sum += f(u) * density * norm;
    }
    return sum * h;
}

} // namespace sqz
