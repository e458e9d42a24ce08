// Exercises the shared library strictly through its C header.

#include "sqz/sqz.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

namespace
{

const char *const kConfig = "[cavity]\nl=600mm T=0.10 L=0.0173 Enl=0.023/W\n"
                            "[detection]\neta=0.99 xi=0.91 clearance=14.0dB\n"
                            "[pump]\ngain=5.3\n"
                            "[acquisition]\nf=1MHz rbw=100kHz vbw=30Hz sweep=10s samples=300\n"
                            "[scan]\nperiod=2.5s theta0=0.3rad jitter=0.03rad\n";

struct Config
{
    sqz_config *ptr = nullptr;
    Config() { REQUIRE(sqz_config_parse(kConfig, &ptr) == SQZ_OK); }
    ~Config() { sqz_config_free(ptr); }
};

} // namespace

TEST_CASE("status codes and error text")
{
    sqz_config *cfg = nullptr;
    CHECK(sqz_config_parse("", &cfg) == SQZ_ERROR_PARSE);
    CHECK(cfg == nullptr);
    CHECK(std::string(sqz_last_error()).find("missing cavity block") != std::string::npos);

    std::string bad = kConfig;
    bad.replace(bad.find("T=0.10"), 6, "T=1.2");
    CHECK(sqz_config_parse(bad.c_str(), &cfg) == SQZ_ERROR_PARSE);
    CHECK(sqz_last_error_line() == 2);
    CHECK(std::string(sqz_last_error()).find("coupler_transmittance") != std::string::npos);

    CHECK(sqz_config_parse(nullptr, &cfg) == SQZ_ERROR_ARGUMENT);
    CHECK(sqz_predict(nullptr, nullptr) == SQZ_ERROR_ARGUMENT);
    CHECK(sqz_config_load("/nonexistent/cfg", &cfg) == SQZ_ERROR_PARSE);

    double out = 0.0;
    CHECK(sqz_jitter_averaged_variance(0.0, 0.1, 0.8, 0.9, 1.5, 0.1, &out) == SQZ_ERROR_DOMAIN);
    CHECK(std::string(sqz_version()) == "1.0.0");
}

TEST_CASE("predict and closed-form entry points")
{
    Config c;
    sqz_prediction p{};
    REQUIRE(sqz_predict(c.ptr, &p) == SQZ_OK);
    CHECK(p.threshold_power_w == doctest::Approx(0.1496).epsilon(1e-3));
    CHECK(p.intrinsic.s_min_db == doctest::Approx(-4.356).epsilon(1e-3));
    CHECK(p.observed.s_min_db == doctest::Approx(-4.078).epsilon(1e-3));
    CHECK(sqz_config_circuit_noise_clearance_db(c.ptr) == 14.0);

    const double s = sqz_quadrature_variance(0.0, 1.0, 1.0, 0.5, 0.0);
    CHECK(s == doctest::Approx(9.0));
    double j = 0.0;
    REQUIRE(sqz_jitter_averaged_variance(0.0, 0.0, 1.0, 1.0, 0.5, 0.0, &j) == SQZ_OK);
    CHECK(j == s);
    double db = 1.0;
    REQUIRE(sqz_apply_circuit_noise(1.0, 14.0, &db) == SQZ_OK);
    CHECK(db == 0.0);

    char *text = nullptr;
    REQUIRE(sqz_config_serialize(c.ptr, &text) == SQZ_OK);
    sqz_config *again = nullptr;
    CHECK(sqz_config_parse(text, &again) == SQZ_OK);
    sqz_string_free(text);
    sqz_config_free(again);
}

TEST_CASE("synthesize, serialize, parse, fit")
{
    Config c;
    sqz_trace *t = nullptr;
    REQUIRE(sqz_synthesize(c.ptr, 42, &t) == SQZ_OK);
    CHECK(sqz_trace_size(t) == 300);
    char *text = nullptr;
    REQUIRE(sqz_trace_serialize(t, &text) == SQZ_OK);
    CHECK(std::strstr(text, "# seed=42") != nullptr);
    CHECK(std::strstr(text, "# pump=gain:5.") != nullptr);
    sqz_trace *back = nullptr;
    REQUIRE(sqz_trace_parse(text, &back) == SQZ_OK);
    sqz_string_free(text);
    double t0 = 0.0;
    double p0 = 0.0;
    double t1 = 0.0;
    double p1 = 0.0;
    REQUIRE(sqz_trace_sample(t, 7, &t0, &p0) == SQZ_OK);
    REQUIRE(sqz_trace_sample(back, 7, &t1, &p1) == SQZ_OK);
    CHECK(t0 == t1);
    CHECK(p0 == p1);
    CHECK(sqz_trace_sample(t, 300, &t0, &p0) == SQZ_ERROR_ARGUMENT);

    sqz_fit_options opts;
    sqz_fit_options_default(&opts);
    sqz_fit_report r{};
    REQUIRE(sqz_fit(back, c.ptr, &opts, &r) == SQZ_OK);
    CHECK(r.converged == 1);
    CHECK(r.identifiable == 1);
    CHECK(r.parameter_count == 5);
    CHECK(std::abs(r.levels.s_min_db - (-4.356)) <= 2.0 * r.s_min_sigma_db);
    CHECK(std::abs(r.levels.s_max_db - 8.887) <= 2.0 * r.s_max_sigma_db);
    CHECK(r.covariance[0] == doctest::Approx(r.s_min_sigma_db * r.s_min_sigma_db));

    sqz_extrema_report e{};
    REQUIRE(sqz_extract_extrema(back, c.ptr, 0, &e) == SQZ_OK);
    CHECK(e.observed_min_db < e.observed_max_db);

    sqz_trace *shot = nullptr;
    REQUIRE(sqz_synthesize_shot_reference(c.ptr, 1, &shot) == SQZ_OK);
    CHECK(sqz_trace_save(shot, "/nonexistent/dir/x.csv") == SQZ_ERROR_IO);
    sqz_trace_free(shot);
    sqz_trace_free(back);
    sqz_trace_free(t);
}

TEST_CASE("sweep, reconcile, loss-only")
{
    Config c;
    const double gains[] = {6.0, 2.0, 5.3};
    sqz_sweep_row rows[3];
    const sqz_measured_point measured[] = {{0.048, -2.75, 7.0}};
    REQUIRE(sqz_sweep(c.ptr, SQZ_PUMP_GAIN, gains, 3, measured, 1, rows) == SQZ_OK);
    CHECK(rows[0].parametric_gain == 2.0);
    CHECK(rows[1].parametric_gain == 5.3);
    CHECK(rows[1].has_measured == 1);
    CHECK(rows[1].predicted.s_max_db == doctest::Approx(8.887).epsilon(1e-3));
    CHECK(sqz_sweep(c.ptr, SQZ_PUMP_GAIN, gains, 0, nullptr, 0, rows) == SQZ_ERROR_ARGUMENT);

    const double powers[] = {0.3};
    REQUIRE(sqz_sweep(c.ptr, SQZ_PUMP_POWER, powers, 1, nullptr, 0, rows) == SQZ_OK);
    CHECK(rows[0].valid == 0);
    CHECK(std::strlen(rows[0].note) > 0);

    sqz_reconcile_report r{};
    REQUIRE(sqz_reconcile(c.ptr, -2.75, 7.0, &r) == SQZ_OK);
    CHECK(r.residual_db < 0.05);
    CHECK(r.efficiency_scale <= 1.0);
    sqz_loss_only_report l{};
    REQUIRE(sqz_loss_only_check(c.ptr, -2.75, 7.0, 0.3, &l) == SQZ_OK);
    CHECK(l.feasible == 0);
}
