// Exercises the shared library through its C interface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "pasem/pasem.h"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace {

struct Qam {
    pasem_constellation* c = nullptr;
    explicit Qam(int m) { REQUIRE(pasem_constellation_square_qam(m, &c) == PASEM_OK); }
    ~Qam() { pasem_constellation_free(c); }
};

std::string take(char* s)
{
    std::string out(s);
    pasem_string_free(s);
    return out;
}

} // namespace

TEST_CASE("status codes and error text")
{
    pasem_constellation* c = nullptr;
    CHECK(pasem_constellation_square_qam(3, &c) == PASEM_ERR_INVALID_ARGUMENT);
    CHECK(c == nullptr);
    CHECK(std::string(pasem_last_error()).size() > 0);
    CHECK(std::string(pasem_status_string(PASEM_ERR_IO)) == "i/o error");
    CHECK(std::string(pasem_version()).size() > 0);

    Qam q(4);
    pasem_params* p = nullptr;
    CHECK(pasem_params_create_mb(q.c, 1.0, 0.0, 0.1, &p) == PASEM_ERR_INVALID_ARGUMENT);
    CHECK(pasem_params_create_mb(nullptr, 1.0, 1.0, 0.1, &p) == PASEM_ERR_INVALID_ARGUMENT);
    CHECK(pasem_params_create_preset(q.c, "nope", 1.0, 10.0, &p) == PASEM_ERR_INVALID_ARGUMENT);
    pasem_samples* s = nullptr;
    CHECK(pasem_samples_load(q.c, "/nonexistent/file.bin", nullptr, PASEM_FORMAT_AUTO, &s) == PASEM_ERR_IO);
    // Null handles are accepted by the free functions.
    pasem_params_free(nullptr);
    pasem_samples_free(nullptr);
    pasem_report_free(nullptr);
}

TEST_CASE("constellation queries")
{
    Qam q(6);
    CHECK(pasem_constellation_bits(q.c) == 6);
    CHECK(pasem_constellation_size(q.c) == 64);
    double re = 0, im = 0;
    CHECK(pasem_constellation_point(q.c, 0, &re, &im) == PASEM_OK);
    CHECK(std::abs(re) <= 7.0);
    CHECK(pasem_constellation_point(q.c, 64, &re, &im) == PASEM_ERR_INVALID_ARGUMENT);
    pasem_constellation* inner = nullptr;
    REQUIRE(pasem_constellation_inner_grid(q.c, 6, &inner) == PASEM_OK);
    char* json = nullptr;
    REQUIRE(pasem_constellation_to_json(inner, &json) == PASEM_OK);
    CHECK(take(json).find("\"active\"") != std::string::npos);
    pasem_constellation_free(inner);
}

TEST_CASE("simulate, estimate and evaluate")
{
    Qam q(6);
    pasem_params* truth = nullptr;
    REQUIRE(pasem_params_create_preset(q.c, "mode1", 1.0, 15.0, &truth) == PASEM_OK);
    double snr = 0.0;
    CHECK(pasem_params_snr_db(truth, q.c, &snr) == PASEM_OK);
    CHECK(snr == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(pasem_params_entropy(truth) == doctest::Approx(5.5).epsilon(1e-9));
    double nu = -1.0;
    CHECK(pasem_params_nu(truth, &nu) == 1);
    CHECK(nu > 0.0);

    pasem_samples* s = nullptr;
    REQUIRE(pasem_simulate(q.c, truth, 20000, 9, &s) == PASEM_OK);
    CHECK(pasem_samples_count(s) == 20000);
    CHECK(pasem_samples_has_symbols(s) == 1);

    pasem_em_config cfg;
    pasem_em_config_default(&cfg);
    CHECK(cfg.max_iters == 100);
    CHECK(cfg.ll_rel_tol == 1e-8);

    const size_t ks[] = {4, 16, 36, 64};
    pasem_em_result* em = nullptr;
    REQUIRE(pasem_multi_init_em(s, q.c, ks, 4, &cfg, PASEM_SELECT_AUTO, &em) == PASEM_OK);
    const size_t k = pasem_em_result_chosen_k(em);
    CHECK((k == 36 || k == 64));
    const size_t iters = pasem_em_result_iterations(em);
    std::vector<double> trace(iters);
    CHECK(pasem_em_result_trace(em, trace.data(), trace.size()) == iters);
    for (size_t t = 1; t < iters; ++t) CHECK(trace[t] >= trace[t - 1] - 1e-7 * 20000);

    pasem_params* est = nullptr;
    REQUIRE(pasem_em_result_params(em, &est) == PASEM_OK);
    CHECK(std::abs(pasem_params_delta(est) - 1.0) < 0.01);
    std::vector<double> pmf(64);
    CHECK(pasem_params_pmf(est, pmf.data(), pmf.size()) == 64);
    double total = 0.0;
    for (double v : pmf) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    pasem_params* da = nullptr;
    REQUIRE(pasem_da_fit(s, q.c, &da) == PASEM_OK);
    pasem_report* r_em = nullptr;
    pasem_report* r_da = nullptr;
    REQUIRE(pasem_evaluate(s, q.c, est, &r_em) == PASEM_OK);
    REQUIRE(pasem_evaluate(s, q.c, da, &r_da) == PASEM_OK);
    CHECK(std::abs(pasem_report_r_a(r_em) - pasem_report_r_a(r_da)) < 0.03);
    CHECK(pasem_report_r_abc(r_em) == 1.0 - pasem_report_u_s(r_em) / 6);
    std::vector<double> per(6);
    CHECK(pasem_report_per_bit(r_em, per.data(), per.size()) == 6);

    char* json = nullptr;
    REQUIRE(pasem_report_to_json(r_em, &json) == PASEM_OK);
    CHECK(take(json).find("\"r_abc\"") != std::string::npos);
    REQUIRE(pasem_em_result_to_json(em, &json) == PASEM_OK);
    const std::string doc = take(json);
    CHECK(doc.find("\"chosen_k\"") != std::string::npos);

    pasem_params* back = nullptr;
    REQUIRE(pasem_params_from_json(q.c, doc.c_str(), &back) == PASEM_OK);
    CHECK(pasem_params_delta(back) == pasem_params_delta(est));

    pasem_params_free(back);
    pasem_report_free(r_em);
    pasem_report_free(r_da);
    pasem_params_free(da);
    pasem_params_free(est);
    pasem_em_result_free(em);
    pasem_samples_free(s);
    pasem_params_free(truth);
}

TEST_CASE("data-aided fit needs symbols")
{
    Qam q(2);
    const double iq[] = {1.0, 1.0, -1.0, 1.0};
    pasem_samples* s = nullptr;
    REQUIRE(pasem_samples_create(iq, 2, nullptr, &s) == PASEM_OK);
    pasem_params* p = nullptr;
    CHECK(pasem_da_fit(s, q.c, &p) == PASEM_ERR_INVALID_ARGUMENT);
    CHECK(std::string(pasem_last_error()) == "data-aided estimation requires transmitted symbols");
    pasem_samples_free(s);
}
