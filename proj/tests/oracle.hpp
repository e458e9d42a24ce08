#pragma once

// Reference implementations written directly from the physical formulas. They share
// no code with the library so agreement is a real check.

#include <cmath>
#include <functional>

namespace oracle
{

inline constexpr double c = 299792458.0;
inline constexpr double pi = 3.14159265358979323846;

inline double variance(double theta, double alpha, double rho, double x, double omega)
{
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    return 1.0 + 4.0 * alpha * rho * x *
                     (cs * cs / ((1.0 - x) * (1.0 - x) + 4.0 * omega * omega) -
                      sn * sn / ((1.0 + x) * (1.0 + x) + 4.0 * omega * omega));
}

// E[S(theta0 + d)], d ~ N(0, s^2), via E[cos^2(theta0 + d)] = (1 + exp(-2 s^2) cos 2 theta0) / 2.
inline double jittered_variance(double theta0, double s, double alpha, double rho, double x, double omega)
{
    const double damp = std::exp(-2.0 * s * s);
    const double c2 = 0.5 * (1.0 + damp * std::cos(2.0 * theta0));
    const double s2 = 1.0 - c2;
    return 1.0 + 4.0 * alpha * rho * x *
                     (c2 / ((1.0 - x) * (1.0 - x) + 4.0 * omega * omega) -
                      s2 / ((1.0 + x) * (1.0 + x) + 4.0 * omega * omega));
}

// Composite Simpson over [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)> &f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i)
    {
        sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

inline double db(double s) { return 10.0 * std::log10(s); }

inline double observed_db(double s, double clearance_db)
{
    const double n = std::pow(10.0, -clearance_db / 10.0);
    return db((s + n) / (1.0 + n));
}

} // namespace oracle
