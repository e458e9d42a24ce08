#include "sqz/fit.hpp"

#include "sqz/errors.hpp"
#include "sqz/levenberg_marquardt.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sqz
{
namespace
{

const double kDbPerNeper = 10.0 / std::log(10.0);
constexpr Eigen::Index kMin = 0, kMax = 1, kTheta = 2, kRate = 3, kJitter = 4;

// Mean (and spread) of the dB-domain sample as a function of the fit parameters.
class TraceModel
{
public:
    TraceModel(const NoiseTrace &trace, const FitModel &model, const FitOptions &options)
        : fit_jitter_(model.fit_jitter)
        , fixed_jitter_(std::abs(model.jitter_sigma))
        , max_jitter_(options.max_jitter)
        , floor_(std::pow(10.0, -model.circuit_noise_clearance_db / 10.0))
        , rule_(gauss_hermite(options.quadrature_nodes))
    {
        const int dof = trace.acquisition.estimator_dof();
        bias_ = log_estimator_bias_db(dof);
        estimator_variance_ = log_estimator_variance_db2(dof);
        times_.reserve(trace.samples.size());
        observed_.resize(static_cast<Eigen::Index>(trace.samples.size()));
        for (std::size_t i = 0; i < trace.samples.size(); ++i)
        {
            times_.push_back(trace.samples[i].time);
            observed_[static_cast<Eigen::Index>(i)] = trace.samples[i].power_db - trace.shot_reference_db;
        }
    }

    Eigen::Index parameter_count() const { return fit_jitter_ ? 5 : 4; }
    Eigen::Index sample_count() const { return observed_.size(); }
    const Eigen::VectorXd &observed() const { return observed_; }

    void evaluate(const Eigen::VectorXd &p, Eigen::VectorXd &mean, Eigen::MatrixXd *jacobian,
                  Eigen::VectorXd *variance) const
    {
        const double s_min = from_db(p[kMin]);
        const double s_max = from_db(p[kMax]);
        const double theta0 = p[kTheta];
        const double rate = p[kRate];
        // The free jitter parameter is the phase variance u = sigma^2.
        const double sigma = fit_jitter_ ? std::min(std::sqrt(std::max(p[kJitter], 0.0)), max_jitter_) : fixed_jitter_;

        // Quadrature offsets delta_j = sqrt(2) sigma x_j, stored as rotations.
        const std::size_t nodes = sigma > 0.0 ? rule_->nodes.size() : 1;
        cos_d_.resize(nodes);
        sin_d_.resize(nodes);
        wt_.resize(nodes);
        for (std::size_t j = 0; j < nodes; ++j)
        {
            const double x = sigma > 0.0 ? rule_->nodes[j] : 0.0;
            const double d = std::sqrt(2.0) * sigma * x;
            cos_d_[j] = std::cos(d);
            sin_d_[j] = std::sin(d);
            wt_[j] = sigma > 0.0 ? rule_->weights[j] / std::sqrt(kPi) : 1.0;
        }

        const Eigen::Index n = sample_count();
        mean.resize(n);
        if (jacobian)
        {
            jacobian->resize(n, parameter_count());
        }
        if (variance)
        {
            variance->resize(n);
        }
        const double log_norm = std::log1p(floor_);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double t = times_[static_cast<std::size_t>(i)];
            const double phi = theta0 + rate * t;
            const double c = std::cos(phi);
            const double s = std::sin(phi);
            double m = 0.0, m2 = 0.0, d_min = 0.0, d_max = 0.0, d_phi = 0.0, d_var = 0.0;
            for (std::size_t j = 0; j < nodes; ++j)
            {
                const double cj = c * cos_d_[j] - s * sin_d_[j];
                const double sj = s * cos_d_[j] + c * sin_d_[j];
                const double c2 = cj * cj;
                const double s2 = sj * sj;
                const double den = s_max * c2 + s_min * s2 + floor_;
                const double g = kDbPerNeper * (std::log(den) - log_norm);
                m += wt_[j] * g;
                m2 += wt_[j] * g * g;
                if (jacobian)
                {
                    const double inv = 1.0 / den;
                    d_min += wt_[j] * s_min * s2 * inv;
                    d_max += wt_[j] * s_max * c2 * inv;
                    const double ds = (s_min - s_max) * 2.0 * cj * sj;
                    const double dds = 2.0 * (s_min - s_max) * (c2 - s2);
                    d_phi += wt_[j] * kDbPerNeper * ds * inv;
                    // d/du E[f(phi + sqrt(u) Z)] = E[f''] / 2
                    d_var += wt_[j] * 0.5 * kDbPerNeper * (dds * den - ds * ds) * inv * inv;
                }
            }
            mean[i] = m + bias_;
            if (variance)
            {
                (*variance)[i] = std::max(m2 - m * m, 0.0) + estimator_variance_;
            }
            if (jacobian)
            {
                auto &jac = *jacobian;
                jac(i, kMin) = d_min;
                jac(i, kMax) = d_max;
                jac(i, kTheta) = d_phi;
                jac(i, kRate) = d_phi * t;
                if (fit_jitter_)
                {
                    jac(i, kJitter) = d_var;
                }
            }
        }
    }

private:
    bool fit_jitter_;
    double fixed_jitter_;
    double max_jitter_;
    double floor_;
    double bias_ = 0.0;
    double estimator_variance_ = 0.0;
    std::shared_ptr<const GaussHermiteRule> rule_;
    std::vector<double> times_;
    Eigen::VectorXd observed_;
    // Scratch for evaluate(); a TraceModel is used by one fit at a time.
    mutable std::vector<double> cos_d_, sin_d_, wt_;
};

// Moore-Penrose inverse of a symmetric PSD matrix after unit-diagonal scaling.
// Returns the inverse and whether any direction was dropped.
std::pair<Eigen::MatrixXd, bool> scaled_pseudo_inverse(const Eigen::MatrixXd &a)
{
    const Eigen::Index n = a.rows();
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        d[i] = a(i, i) > 0.0 ? 1.0 / std::sqrt(a(i, i)) : 0.0;
    }
    const Eigen::MatrixXd scaled = d.asDiagonal() * a * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const Eigen::VectorXd &values = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(values.cwiseAbs().maxCoeff(), 1.0);
    Eigen::VectorXd inv_values(n);
    bool deficient = false;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (values[i] > cutoff)
        {
            inv_values[i] = 1.0 / values[i];
        }
        else
        {
            inv_values[i] = 0.0;
            deficient = true;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
    {
        deficient = deficient || d[i] == 0.0;
    }
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv_values.asDiagonal() * eig.eigenvectors().transpose();
    return {d.asDiagonal() * pinv * d.asDiagonal(), deficient};
}

double wrap_phase(double theta)
{
    double w = std::fmod(theta, kPi);
    return w < 0.0 ? w + kPi : w;
}

std::size_t smoothing_window(const NoiseTrace &trace)
{
    const auto &acq = trace.acquisition;
    const double fringes = std::max(2.0 * acq.sweep_duration / acq.lo_scan.period, 1.0);
    const double per_fringe = static_cast<double>(trace.samples.size()) / fringes;
    const auto w = static_cast<std::size_t>(per_fringe / 8.0);
    return std::clamp<std::size_t>(w, 1, std::max<std::size_t>(trace.samples.size() / 4, 1));
}

std::vector<double> moving_average(const std::vector<double> &y, std::size_t window)
{
    const std::size_t n = y.size();
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    std::vector<double> prefix(n + 1, 0.0);
    std::partial_sum(y.begin(), y.end(), prefix.begin() + 1);
    for (std::size_t i = 0; i < n; ++i)
    {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, lo + window);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

double intrinsic_db(double observed_db, double clearance_db)
{
    return to_db(std::max(remove_circuit_noise(observed_db, clearance_db), 1e-3));
}

} // namespace

double log_estimator_bias_db(int dof)
{
    const double half = 0.5 * static_cast<double>(dof);
    return kDbPerNeper * (boost::math::digamma(half) - std::log(half));
}

double log_estimator_variance_db2(int dof)
{
    return kDbPerNeper * kDbPerNeper * boost::math::trigamma(0.5 * static_cast<double>(dof));
}

FitModel initial_guess(const NoiseTrace &trace, double circuit_noise_clearance_db, bool fit_jitter)
{
    trace.validate();
    const double bias = log_estimator_bias_db(trace.acquisition.estimator_dof());
    std::vector<double> y;
    y.reserve(trace.samples.size());
    for (const auto &s : trace.samples)
    {
        y.push_back(s.power_db - trace.shot_reference_db - bias);
    }
    const auto smooth = moving_average(y, smoothing_window(trace));
    const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());

    FitModel guess;
    guess.circuit_noise_clearance_db = circuit_noise_clearance_db;
    guess.fit_jitter = fit_jitter;
    guess.jitter_sigma = fit_jitter ? 0.02 : 0.0;
    guess.scan_rate = trace.acquisition.lo_scan.rate();
    guess.s_min_db = intrinsic_db(*lo, circuit_noise_clearance_db);
    guess.s_max_db = intrinsic_db(*hi, circuit_noise_clearance_db);
    if (guess.s_max_db - guess.s_min_db < 0.2)
    {
        guess.s_min_db -= 0.1;
        guess.s_max_db += 0.1;
    }

    // Coarse theta0 search with the jitter-free model.
    FitModel probe = guess;
    probe.fit_jitter = false;
    probe.jitter_sigma = 0.0;
    TraceModel model(trace, probe, FitOptions{});
    Eigen::VectorXd p(4);
    Eigen::VectorXd mean;
    double best = std::numeric_limits<double>::infinity();
    constexpr int kSteps = 64;
    for (int k = 0; k < kSteps; ++k)
    {
        const double theta = kPi * k / kSteps;
        p << guess.s_min_db, guess.s_max_db, theta, guess.scan_rate;
        model.evaluate(p, mean, nullptr, nullptr);
        const double cost = (mean - model.observed()).squaredNorm();
        if (cost < best)
        {
            best = cost;
            guess.theta0 = theta;
        }
    }
    return guess;
}

FitResult fit_trace(const NoiseTrace &trace, const FitModel &initial, const FitOptions &options)
{
    trace.validate();
    if (!(initial.circuit_noise_clearance_db > 0.0) || !(initial.scan_rate > 0.0))
    {
        throw ArgumentError("fit: circuit noise clearance and scan rate must be > 0");
    }

    const TraceModel model(trace, initial, options);
    const Eigen::Index n = model.sample_count();
    const Eigen::Index np = model.parameter_count();
    if (n < 10 * np)
    {
        throw ArgumentError("fit: trace has " + std::to_string(n) + " samples, need at least " +
                            std::to_string(10 * np) + " for " + std::to_string(np) + " free parameters");
    }

    Eigen::VectorXd p0(np);
    p0[kMin] = initial.s_min_db;
    p0[kMax] = initial.s_max_db;
    p0[kTheta] = initial.theta0;
    p0[kRate] = initial.scan_rate;
    if (initial.fit_jitter)
    {
        const double sigma0 = std::clamp(std::abs(initial.jitter_sigma), 1e-3, options.max_jitter);
        p0[kJitter] = sigma0 * sigma0;
    }

    Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd mean;
    const ResidualFunction residuals = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
        model.evaluate(p, mean, jac, nullptr);
        r = weights.cwiseProduct(mean - model.observed());
        if (jac)
        {
            *jac = weights.asDiagonal() * (*jac);
        }
    };

    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.ftol = options.ftol;
    lm.xtol = options.xtol;
    if (initial.fit_jitter)
    {
        const double inf = std::numeric_limits<double>::infinity();
        Eigen::VectorXd lower = Eigen::VectorXd::Constant(np, -inf);
        Eigen::VectorXd upper = Eigen::VectorXd::Constant(np, inf);
        lower[kJitter] = 0.0;
        upper[kJitter] = options.max_jitter * options.max_jitter;
        lm.lower = lower;
        lm.upper = upper;
    }

    FitResult result;
    LmResult pass = levenberg_marquardt(residuals, p0, lm);
    result.iterations = pass.iterations;
    result.objective_history.push_back(pass.cost_history);

    const bool jittered = initial.fit_jitter || initial.jitter_sigma > 0.0;
    if (options.weighted && jittered)
    {
        Eigen::VectorXd variance;
        model.evaluate(pass.params, mean, nullptr, &variance);
        weights = variance.cwiseSqrt().cwiseInverse();
        pass = levenberg_marquardt(residuals, pass.params, lm);
        result.iterations += pass.iterations;
        result.objective_history.push_back(pass.cost_history);
    }
    result.converged = pass.converged;

    // Covariance from the weighted Jacobian, scaled by the residual variance.
    const double dof = static_cast<double>(n - np);
    const double residual_variance = pass.cost / dof;
    const Eigen::MatrixXd normal = pass.jacobian.transpose() * pass.jacobian;
    auto [cov, deficient] = scaled_pseudo_inverse(normal);
    cov *= residual_variance;

    Eigen::VectorXd p = pass.params;
    // Canonical form: rate > 0, jitter >= 0, s_min <= s_max, theta0 in [0, pi).
    Eigen::VectorXd rescale = Eigen::VectorXd::Ones(np);
    if (p[kRate] < 0.0)
    {
        p[kRate] = -p[kRate];
        p[kTheta] = -p[kTheta];
        rescale[kRate] = rescale[kTheta] = -1.0;
    }
    if (initial.fit_jitter)
    {
        // Back to sigma. The spread is the upper 1-sigma excursion sqrt(u + sd_u) - sqrt(u),
        // which equals the delta-method value away from zero and stays finite at zero.
        const double u = std::max(p[kJitter], 0.0);
        const double sd_u = std::sqrt(std::max(cov(kJitter, kJitter), 0.0));
        p[kJitter] = std::sqrt(u);
        rescale[kJitter] = sd_u > 0.0 ? (std::sqrt(u + sd_u) - p[kJitter]) / sd_u : 0.0;
    }
    cov = rescale.asDiagonal() * cov * rescale.asDiagonal();
    if (p[kMin] > p[kMax])
    {
        std::swap(p[kMin], p[kMax]);
        p[kTheta] += kPi / 2.0;
        Eigen::PermutationMatrix<Eigen::Dynamic> swap(np);
        swap.setIdentity();
        swap.applyTranspositionOnTheRight(kMin, kMax);
        cov = swap.transpose() * cov * swap;
    }
    p[kTheta] = wrap_phase(p[kTheta]);

    const double contrast = p[kMax] - p[kMin];
    const double contrast_var = cov(kMin, kMin) + cov(kMax, kMax) - 2.0 * cov(kMin, kMax);
    result.identifiable = !deficient && contrast > 2.0 * std::sqrt(std::max(contrast_var, 0.0));
    if (!result.identifiable)
    {
        // No phase information: both levels collapse to the common level of a constant
        // model, widened by the contrast the data cannot resolve.
        const Eigen::VectorXd &y = model.observed();
        const double bias = log_estimator_bias_db(trace.acquisition.estimator_dof());
        const double y_mean = y.mean();
        const double y_var = (y.array() - y_mean).square().sum() / static_cast<double>(n - 1);
        const double floor = std::pow(10.0, -initial.circuit_noise_clearance_db / 10.0);
        const double level = std::max((1.0 + floor) * from_db(y_mean - bias) - floor, 1e-300);
        const double level_sd = std::sqrt(y_var / static_cast<double>(n)) * (level + floor) / level;
        const double common = to_db(level);
        const Eigen::MatrixXd block = scaled_pseudo_inverse(normal.topLeftCorner(2, 2)).first * residual_variance;
        const double block_contrast_var = block(0, 0) + block(1, 1) - 2.0 * block(0, 1);
        const double spread = level_sd * level_sd + 0.25 * std::max(block_contrast_var, 0.0);
        p[kMin] = p[kMax] = common;
        cov.setZero();
        cov(kMin, kMin) = cov(kMax, kMax) = spread;
        cov(kMin, kMax) = cov(kMax, kMin) = level_sd * level_sd;
        cov(kTheta, kTheta) = kPi * kPi;
        cov(kRate, kRate) = std::numeric_limits<double>::infinity();
        if (initial.fit_jitter)
        {
            cov(kJitter, kJitter) = std::numeric_limits<double>::infinity();
        }
    }
    result.covariance = cov;

    result.parameters = initial;
    result.parameters.s_min_db = p[kMin];
    result.parameters.s_max_db = p[kMax];
    result.parameters.theta0 = p[kTheta];
    result.parameters.scan_rate = p[kRate];
    result.parameters.jitter_sigma = initial.fit_jitter ? p[kJitter] : std::abs(initial.jitter_sigma);
    result.parameter_names = {"s_min_db", "s_max_db", "theta0", "scan_rate"};
    if (initial.fit_jitter)
    {
        result.parameter_names.emplace_back("jitter_sigma");
    }

    const auto sd = [&](Eigen::Index i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
    result.levels = VarianceLevels::from_db(p[kMin], p[kMax]);
    result.s_min_sigma_db = sd(kMin);
    result.s_max_sigma_db = sd(kMax);
    result.theta0_sigma = sd(kTheta);
    result.scan_rate_sigma = sd(kRate);
    result.jitter_sigma_sigma = initial.fit_jitter ? sd(kJitter) : 0.0;

    const double clearance = initial.circuit_noise_clearance_db;
    const double floor = std::pow(10.0, -clearance / 10.0);
    result.observed_levels = apply_circuit_noise(result.levels, clearance);
    result.observed_s_min_sigma_db = result.s_min_sigma_db * result.levels.s_min / (result.levels.s_min + floor);
    result.observed_s_max_sigma_db = result.s_max_sigma_db * result.levels.s_max / (result.levels.s_max + floor);

    model.evaluate(pass.params, mean, nullptr, nullptr);
    result.residual_rms = std::sqrt((mean - model.observed()).squaredNorm() / static_cast<double>(n));
    return result;
}

ExtremaLevels extract_extrema(const NoiseTrace &trace, double circuit_noise_clearance_db, std::size_t window)
{
    trace.validate();
    if (window == 0)
    {
        window = smoothing_window(trace);
    }
    window = std::clamp<std::size_t>(window, 1, trace.samples.size());
    const double bias = log_estimator_bias_db(trace.acquisition.estimator_dof());
    std::vector<double> y;
    y.reserve(trace.samples.size());
    for (const auto &s : trace.samples)
    {
        y.push_back(s.power_db - trace.shot_reference_db - bias);
    }
    const auto smooth = moving_average(y, window);
    const auto lo = std::min_element(smooth.begin(), smooth.end()) - smooth.begin();
    const auto hi = std::max_element(smooth.begin(), smooth.end()) - smooth.begin();

    const auto window_sigma = [&](std::ptrdiff_t centre) {
        const std::size_t half = window / 2;
        const std::size_t c = static_cast<std::size_t>(centre);
        const std::size_t a = c >= half ? c - half : 0;
        const std::size_t b = std::min(y.size(), a + window);
        const double m = smooth[c];
        double ss = 0.0;
        for (std::size_t i = a; i < b; ++i)
        {
            ss += (y[i] - m) * (y[i] - m);
        }
        const double count = static_cast<double>(b - a);
        return count > 1.0 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
    };

    ExtremaLevels out;
    out.window = window;
    out.observed_min_db = smooth[static_cast<std::size_t>(lo)];
    out.observed_max_db = smooth[static_cast<std::size_t>(hi)];
    out.observed_min_sigma_db = window_sigma(lo);
    out.observed_max_sigma_db = window_sigma(hi);
    out.levels = VarianceLevels::from_db(intrinsic_db(out.observed_min_db, circuit_noise_clearance_db),
                                         intrinsic_db(out.observed_max_db, circuit_noise_clearance_db));
    return out;
}

} // namespace sqz
