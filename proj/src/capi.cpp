#include "pasem/pasem.h"

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"
#include "pasem/error.hpp"
#include "pasem/estimation.hpp"
#include "pasem/io.hpp"
#include "pasem/metrics.hpp"
#include "pasem/shaping.hpp"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>

struct pasem_constellation {
    pasem::Constellation c;
};

struct pasem_params {
    pasem::ChannelParams p;
};

struct pasem_samples {
    pasem::SampleBatch batch;
};

struct pasem_em_result {
    pasem::EmResult r;
    std::optional<pasem::Selection> selection;
};

struct pasem_report {
    pasem::MetricReport r;
};

namespace {

thread_local std::string last_error;

pasem_status fail(pasem_status status, const char* what)
{
    last_error = what;
    return status;
}

// Runs `body`, translating library exceptions into status codes.
template <class F>
pasem_status guarded(F&& body)
{
    try {
        body();
        return PASEM_OK;
    } catch (const pasem::InvalidArgument& e) {
        return fail(PASEM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const pasem::OutOfRange& e) {
        return fail(PASEM_ERR_OUT_OF_RANGE, e.what());
    } catch (const pasem::NumericError& e) {
        return fail(PASEM_ERR_NUMERIC, e.what());
    } catch (const pasem::InvalidModel& e) {
        return fail(PASEM_ERR_INVALID_MODEL, e.what());
    } catch (const pasem::IoError& e) {
        return fail(PASEM_ERR_IO, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(PASEM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(PASEM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PASEM_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* ptr, const char* name)
{
    if (!ptr) throw pasem::InvalidArgument(std::string(name) + " is null");
}

char* copy_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::optional<std::string> format_name(int format)
{
    switch (format) {
    case PASEM_FORMAT_AUTO:
        return std::nullopt;
    case PASEM_FORMAT_BINARY:
        return "bin";
    case PASEM_FORMAT_CSV:
        return "csv";
    default:
        throw pasem::InvalidArgument("unknown sample format code " + std::to_string(format));
    }
}

pasem::EmConfig to_config(const pasem_em_config* cfg)
{
    pasem::EmConfig out;
    if (cfg) {
        out.max_iters = cfg->max_iters;
        out.ll_rel_tol = cfg->ll_rel_tol;
        out.prob_floor = cfg->prob_floor;
        switch (cfg->distribution_mode) {
        case PASEM_DIST_GENERAL:
            out.distribution_mode = pasem::DistributionMode::general_pmf;
            break;
        case PASEM_DIST_MAXWELL_BOLTZMANN:
            out.distribution_mode = pasem::DistributionMode::maxwell_boltzmann;
            break;
        default:
            throw pasem::InvalidArgument("unknown distribution mode code");
        }
    }
    out.validate();
    return out;
}

pasem::SymbolDistribution make_dist(const pasem::Constellation& c, const double* pmf, size_t count, int has_nu,
                                    double nu)
{
    if (has_nu) return pasem::mb_distribution(c, nu);
    require(pmf, "pmf");
    if (count != c.size()) throw pasem::InvalidArgument("pmf length does not match the constellation");
    return pasem::SymbolDistribution::from_weights({pmf, count});
}

} // namespace

extern "C" {

const char* pasem_last_error(void) { return last_error.c_str(); }

const char* pasem_status_string(pasem_status status)
{
    switch (status) {
    case PASEM_OK:
        return "ok";
    case PASEM_ERR_INVALID_ARGUMENT:
        return "invalid argument";
    case PASEM_ERR_IO:
        return "i/o error";
    case PASEM_ERR_NUMERIC:
        return "numeric failure";
    case PASEM_ERR_OUT_OF_RANGE:
        return "out of range";
    case PASEM_ERR_INVALID_MODEL:
        return "invalid model";
    case PASEM_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

void pasem_string_free(char* s) { std::free(s); }

const char* pasem_version(void) { return "1.0.0"; }

pasem_status pasem_constellation_square_qam(int m, pasem_constellation** out)
{
    return guarded([&] {
        require(out, "out");
        *out = new pasem_constellation{pasem::build_square_qam(m)};
    });
}

pasem_status pasem_constellation_restrict(const pasem_constellation* c, const size_t* active, size_t count,
                                          pasem_constellation** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(out, "out");
        if (count > 0) require(active, "active");
        *out = new pasem_constellation{pasem::restrict_support(c->c, {active, count})};
    });
}

pasem_status pasem_constellation_inner_grid(const pasem_constellation* c, size_t side, pasem_constellation** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(out, "out");
        *out = new pasem_constellation{pasem::restrict_to_inner_grid(c->c, side)};
    });
}

void pasem_constellation_free(pasem_constellation* c) { delete c; }

int pasem_constellation_bits(const pasem_constellation* c) { return c ? c->c.bits() : 0; }

size_t pasem_constellation_size(const pasem_constellation* c) { return c ? c->c.size() : 0; }

pasem_status pasem_constellation_point(const pasem_constellation* c, size_t j, double* re, double* im)
{
    return guarded([&] {
        require(c, "constellation");
        if (j >= c->c.size()) throw pasem::InvalidArgument("point index out of range");
        if (re) *re = c->c.point(j).real();
        if (im) *im = c->c.point(j).imag();
    });
}

pasem_status pasem_constellation_to_json(const pasem_constellation* c, char** json)
{
    return guarded([&] {
        require(c, "constellation");
        require(json, "json");
        *json = copy_string(pasem::io::to_json(c->c).dump());
    });
}

pasem_status pasem_params_create(const pasem_constellation* c, double delta, double sigma2, const double* pmf,
                                 size_t count, pasem_params** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(out, "out");
        pasem::ChannelParams p{delta, sigma2, make_dist(c->c, pmf, count, 0, 0.0)};
        p.validate(c->c);
        *out = new pasem_params{std::move(p)};
    });
}

pasem_status pasem_params_create_mb(const pasem_constellation* c, double delta, double sigma2, double nu,
                                    pasem_params** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(out, "out");
        pasem::ChannelParams p{delta, sigma2, pasem::mb_distribution(c->c, nu)};
        p.validate(c->c);
        *out = new pasem_params{std::move(p)};
    });
}

pasem_status pasem_params_create_preset(const pasem_constellation* c, const char* mode, double delta, double snr_db,
                                        pasem_params** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(mode, "mode");
        require(out, "out");
        *out = new pasem_params{pasem::preset_params(pasem::shaping_preset(mode), c->c, snr_db, delta)};
    });
}

pasem_status pasem_params_from_json(const pasem_constellation* c, const char* json, pasem_params** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(json, "json");
        require(out, "out");
        *out = new pasem_params{pasem::io::params_from_json(nlohmann::json::parse(json), c->c)};
    });
}

pasem_status pasem_params_to_json(const pasem_params* p, char** json)
{
    return guarded([&] {
        require(p, "params");
        require(json, "json");
        *json = copy_string(pasem::io::to_json(p->p).dump());
    });
}

void pasem_params_free(pasem_params* p) { delete p; }

double pasem_params_delta(const pasem_params* p) { return p ? p->p.delta : 0.0; }

double pasem_params_sigma2(const pasem_params* p) { return p ? p->p.sigma2 : 0.0; }

size_t pasem_params_pmf(const pasem_params* p, double* pmf, size_t count)
{
    if (!p) return 0;
    const auto& v = p->p.dist.pmf();
    if (pmf)
        for (size_t j = 0; j < v.size() && j < count; ++j) pmf[j] = v[j];
    return v.size();
}

int pasem_params_nu(const pasem_params* p, double* nu)
{
    if (!p || !p->p.dist.nu()) return 0;
    if (nu) *nu = *p->p.dist.nu();
    return 1;
}

double pasem_params_entropy(const pasem_params* p) { return p ? pasem::entropy(p->p.dist) : 0.0; }

pasem_status pasem_params_snr_db(const pasem_params* p, const pasem_constellation* c, double* snr_db)
{
    return guarded([&] {
        require(p, "params");
        require(c, "constellation");
        require(snr_db, "snr_db");
        p->p.validate(c->c);
        *snr_db = pasem::snr_db(p->p, c->c);
    });
}

pasem_status pasem_sigma2_for_snr(const pasem_constellation* c, double snr_db, double delta, const double* pmf,
                                  size_t count, int has_nu, double nu, double* sigma2)
{
    return guarded([&] {
        require(c, "constellation");
        require(sigma2, "sigma2");
        *sigma2 = pasem::sigma2_for_snr(snr_db, delta, make_dist(c->c, pmf, count, has_nu, nu), c->c);
    });
}

pasem_status pasem_simulate(const pasem_constellation* c, const pasem_params* truth, size_t n, uint64_t seed,
                            pasem_samples** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(truth, "params");
        require(out, "out");
        *out = new pasem_samples{pasem::simulate(c->c, truth->p, n, seed)};
    });
}

pasem_status pasem_samples_create(const double* iq, size_t n, const size_t* symbols, pasem_samples** out)
{
    return guarded([&] {
        require(iq, "iq");
        require(out, "out");
        if (n == 0) throw pasem::InvalidArgument("sample batch must hold at least one sample");
        pasem::SampleBatch b;
        b.observations.resize(n);
        for (size_t i = 0; i < n; ++i) b.observations[i] = {iq[2 * i], iq[2 * i + 1]};
        if (symbols) b.symbols.emplace(symbols, symbols + n);
        *out = new pasem_samples{std::move(b)};
    });
}

pasem_status pasem_samples_load(const pasem_constellation* c, const char* observations_path, const char* symbols_path,
                                int format, pasem_samples** out)
{
    return guarded([&] {
        require(c, "constellation");
        require(observations_path, "observations path");
        require(out, "out");
        const auto name = format_name(format);
        pasem::SampleBatch b;
        b.observations =
            pasem::io::read_samples(observations_path, pasem::io::resolve_format(observations_path, name));
        if (symbols_path) {
            const auto pts = pasem::io::read_samples(symbols_path, pasem::io::resolve_format(symbols_path, name));
            if (pts.size() != b.observations.size())
                throw pasem::InvalidArgument("symbol file holds " + std::to_string(pts.size()) +
                                             " samples, observation file " +
                                             std::to_string(b.observations.size()));
            b.symbols = pasem::io::symbols_from_points(c->c, pts);
        }
        *out = new pasem_samples{std::move(b)};
    });
}

pasem_status pasem_samples_save(const pasem_samples* s, const pasem_constellation* c, const char* observations_path,
                                const char* symbols_path, int format)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(observations_path, "observations path");
        const auto name = format_name(format);
        pasem::io::write_samples(observations_path, s->batch.observations,
                                 pasem::io::resolve_format(observations_path, name));
        if (symbols_path) {
            if (!s->batch.symbols) throw pasem::InvalidArgument("batch carries no symbols to save");
            const auto pts = pasem::io::points_from_symbols(c->c, *s->batch.symbols);
            pasem::io::write_samples(symbols_path, pts, pasem::io::resolve_format(symbols_path, name));
        }
    });
}

pasem_status pasem_samples_quantize(pasem_samples* s)
{
    return guarded([&] {
        require(s, "samples");
        s->batch.observations = pasem::io::quantize_f32(s->batch.observations);
    });
}

void pasem_samples_free(pasem_samples* s) { delete s; }

size_t pasem_samples_count(const pasem_samples* s) { return s ? s->batch.size() : 0; }

int pasem_samples_has_symbols(const pasem_samples* s) { return s && s->batch.has_symbols() ? 1 : 0; }

pasem_status pasem_samples_observation(const pasem_samples* s, size_t i, double* re, double* im)
{
    return guarded([&] {
        require(s, "samples");
        if (i >= s->batch.size()) throw pasem::InvalidArgument("sample index out of range");
        if (re) *re = s->batch.observations[i].real();
        if (im) *im = s->batch.observations[i].imag();
    });
}

pasem_status pasem_samples_symbol(const pasem_samples* s, size_t i, size_t* j)
{
    return guarded([&] {
        require(s, "samples");
        require(j, "j");
        if (!s->batch.symbols) throw pasem::InvalidArgument("batch carries no symbols");
        if (i >= s->batch.size()) throw pasem::InvalidArgument("sample index out of range");
        *j = (*s->batch.symbols)[i];
    });
}

void pasem_em_config_default(pasem_em_config* cfg)
{
    if (!cfg) return;
    const pasem::EmConfig d;
    cfg->max_iters = d.max_iters;
    cfg->ll_rel_tol = d.ll_rel_tol;
    cfg->distribution_mode = PASEM_DIST_GENERAL;
    cfg->prob_floor = d.prob_floor;
}

pasem_status pasem_kmeans_init(const pasem_samples* s, const pasem_constellation* c, size_t k, pasem_params** out)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(out, "out");
        *out = new pasem_params{pasem::kmeans_init(s->batch, c->c, k)};
    });
}

pasem_status pasem_em_fit(const pasem_samples* s, const pasem_constellation* c, const pasem_em_config* cfg,
                          const pasem_params* init, size_t kmeans_k, pasem_em_result** out)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(out, "out");
        auto config = to_config(cfg);
        if (init)
            config.init = init->p;
        else
            config.init = pasem::KMeansInit{kmeans_k};
        *out = new pasem_em_result{pasem::em_fit(s->batch, c->c, config), std::nullopt};
    });
}

pasem_status pasem_multi_init_em(const pasem_samples* s, const pasem_constellation* c, const size_t* ks, size_t count,
                                 const pasem_em_config* cfg, int selection, pasem_em_result** out)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(ks, "ks");
        require(out, "out");
        const auto config = to_config(cfg);
        pasem::MultiStartResult r = [&] {
            switch (selection) {
            case PASEM_SELECT_AUTO:
                return pasem::multi_init_em(s->batch, c->c, {ks, count}, config);
            case PASEM_SELECT_UNCERTAINTY:
                return pasem::multi_init_em(s->batch, c->c, {ks, count}, config, pasem::Selection::uncertainty);
            case PASEM_SELECT_LIKELIHOOD:
                return pasem::multi_init_em(s->batch, c->c, {ks, count}, config, pasem::Selection::likelihood);
            default:
                throw pasem::InvalidArgument("unknown selection code");
            }
        }();
        *out = new pasem_em_result{std::move(r.result), r.selection};
    });
}

pasem_status pasem_da_fit(const pasem_samples* s, const pasem_constellation* c, pasem_params** out)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(out, "out");
        *out = new pasem_params{pasem::da_fit(s->batch, c->c)};
    });
}

pasem_status pasem_log_likelihood(const pasem_samples* s, const pasem_constellation* c, const pasem_params* p,
                                  double* ll)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(p, "params");
        require(ll, "ll");
        *ll = pasem::data_log_likelihood(s->batch, c->c, p->p);
    });
}

void pasem_em_result_free(pasem_em_result* r) { delete r; }

pasem_status pasem_em_result_params(const pasem_em_result* r, pasem_params** out)
{
    return guarded([&] {
        require(r, "result");
        require(out, "out");
        *out = new pasem_params{r->r.params};
    });
}

size_t pasem_em_result_iterations(const pasem_em_result* r) { return r ? r->r.iterations_used : 0; }

int pasem_em_result_converged(const pasem_em_result* r) { return r && r->r.converged ? 1 : 0; }

size_t pasem_em_result_chosen_k(const pasem_em_result* r) { return r && r->r.chosen_k ? *r->r.chosen_k : 0; }

size_t pasem_em_result_trace(const pasem_em_result* r, double* trace, size_t count)
{
    if (!r) return 0;
    const auto& t = r->r.log_likelihood_trace;
    if (trace)
        for (size_t i = 0; i < t.size() && i < count; ++i) trace[i] = t[i];
    return t.size();
}

pasem_status pasem_em_result_to_json(const pasem_em_result* r, char** json)
{
    return guarded([&] {
        require(r, "result");
        require(json, "json");
        auto j = pasem::io::to_json(r->r);
        if (r->selection)
            j["selection"] = *r->selection == pasem::Selection::uncertainty ? "uncertainty" : "likelihood";
        *json = copy_string(j.dump());
    });
}

pasem_status pasem_evaluate(const pasem_samples* s, const pasem_constellation* c, const pasem_params* p,
                            pasem_report** out)
{
    return guarded([&] {
        require(s, "samples");
        require(c, "constellation");
        require(p, "params");
        require(out, "out");
        *out = new pasem_report{pasem::evaluate(s->batch, c->c, p->p)};
    });
}

void pasem_report_free(pasem_report* r) { delete r; }

double pasem_report_s_opt(const pasem_report* r) { return r ? r->r.s_opt : 0.0; }
double pasem_report_u_s(const pasem_report* r) { return r ? r->r.u_s : 0.0; }
double pasem_report_r_abc(const pasem_report* r) { return r ? r->r.r_abc : 0.0; }
double pasem_report_r_a(const pasem_report* r) { return r ? r->r.r_a : 0.0; }
double pasem_report_h_x(const pasem_report* r) { return r ? r->r.h_x : 0.0; }

size_t pasem_report_per_bit(const pasem_report* r, double* values, size_t count)
{
    if (!r) return 0;
    const auto& v = r->r.per_bit_uncertainty;
    if (values)
        for (size_t i = 0; i < v.size() && i < count; ++i) values[i] = v[i];
    return v.size();
}

pasem_status pasem_report_to_json(const pasem_report* r, char** json)
{
    return guarded([&] {
        require(r, "report");
        require(json, "json");
        *json = copy_string(pasem::io::to_json(r->r).dump());
    });
}

} // extern "C"
