// pasem command-line front end. Links the shared library through its C API only.
//
//   pasem simulate  --out obs.bin [--symbols sym.bin] (--mode mode1 | --nu 0.05) --snr-db 14 --n 20000 --seed 1
//   pasem estimate  --input obs.bin [--symbols sym.bin] [--method em|da] [--ks 4,16,36,64] --out est.json
//   pasem evaluate  --input obs.bin --symbols sym.bin --params est.json --out report.json
//   pasem sweep     --mode mode1,mode2 --snr-db 10,12,14 --seeds 5 --out rows.csv

#include "pasem/pasem.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kIo = 3, kNumeric = 4 };

int exit_code(pasem_status s)
{
    switch (s) {
    case PASEM_OK:
        return kOk;
    case PASEM_ERR_IO:
        return kIo;
    case PASEM_ERR_NUMERIC:
    case PASEM_ERR_INTERNAL:
        return kNumeric;
    default:
        return kValidation;
    }
}

struct Failure : std::runtime_error {
    int code;
    Failure(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

void check(pasem_status s)
{
    if (s != PASEM_OK) throw Failure(exit_code(s), pasem_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Constellation = std::unique_ptr<pasem_constellation, Deleter<pasem_constellation, pasem_constellation_free>>;
using Params = std::unique_ptr<pasem_params, Deleter<pasem_params, pasem_params_free>>;
using Samples = std::unique_ptr<pasem_samples, Deleter<pasem_samples, pasem_samples_free>>;
using EmResult = std::unique_ptr<pasem_em_result, Deleter<pasem_em_result, pasem_em_result_free>>;
using Report = std::unique_ptr<pasem_report, Deleter<pasem_report, pasem_report_free>>;

template <class Fn>
json take_json(Fn fn)
{
    char* raw = nullptr;
    check(fn(&raw));
    std::unique_ptr<char, Deleter<char, pasem_string_free>> s(raw);
    return json::parse(s.get());
}

Constellation make_qam(int m)
{
    pasem_constellation* c = nullptr;
    check(pasem_constellation_square_qam(m, &c));
    return Constellation(c);
}

int parse_format(const std::string& f)
{
    if (f == "auto") return PASEM_FORMAT_AUTO;
    if (f == "bin" || f == "binary") return PASEM_FORMAT_BINARY;
    if (f == "csv") return PASEM_FORMAT_CSV;
    throw Failure(kValidation, "unknown format '" + f + "' (auto, bin, csv)");
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Failure(kIo, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Failure(kIo, "write to '" + path.string() + "' failed");
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Failure(kIo, "cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Failure(kValidation, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void emit_json(const json& j, const std::string& out)
{
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << '\n';
    else
        write_file(out, j.dump(2) + '\n');
}

fs::path sidecar_for(const fs::path& obs) { return fs::path(obs).replace_extension(".json"); }

fs::path default_symbols_path(const fs::path& obs)
{
    fs::path p = obs;
    return p.replace_filename(obs.stem().string() + ".symbols" + obs.extension().string());
}

// Bits per symbol of a data set: --m when given, else its sidecar, else 64-QAM.
int data_bits(std::optional<int> m_flag, const fs::path& input)
{
    if (m_flag) return *m_flag;
    const fs::path side = sidecar_for(input);
    if (fs::exists(side)) {
        const json j = read_json_file(side);
        if (j.contains("constellation") && j["constellation"].contains("m")) return j["constellation"]["m"].get<int>();
    }
    return 6;
}

json with_constellation(json j, int m)
{
    j["constellation"] = {{"m", m}};
    return j;
}

// ------------------------------------------------------------------ simulate

struct SimulateOpts {
    std::string out;
    std::string symbols;
    std::string format = "auto";
    int m = 6;
    std::string mode;
    std::optional<double> nu;
    double delta = 1.0;
    std::optional<double> sigma2;
    std::optional<double> snr_db;
    std::size_t n = 20000;
    std::uint64_t seed = 1;
};

Params truth_params(const pasem_constellation* c, const SimulateOpts& o)
{
    if (o.sigma2.has_value() == o.snr_db.has_value())
        throw Failure(kValidation, "give exactly one of --sigma2 and --snr-db");
    if (!o.mode.empty() && o.nu) throw Failure(kValidation, "--mode and --nu are mutually exclusive");

    pasem_params* p = nullptr;
    if (!o.mode.empty()) {
        check(pasem_params_create_preset(c, o.mode.c_str(), o.delta, o.snr_db.value_or(0.0), &p));
        Params preset(p);
        if (!o.sigma2) return preset;
        std::vector<double> pmf(pasem_constellation_size(c));
        pasem_params_pmf(preset.get(), pmf.data(), pmf.size());
        double nu = 0.0;
        if (pasem_params_nu(preset.get(), &nu))
            check(pasem_params_create_mb(c, o.delta, *o.sigma2, nu, &p));
        else
            check(pasem_params_create(c, o.delta, *o.sigma2, pmf.data(), pmf.size(), &p));
        return Params(p);
    }
    const double nu = o.nu.value_or(0.0);
    double sigma2 = 0.0;
    if (o.sigma2)
        sigma2 = *o.sigma2;
    else
        check(pasem_sigma2_for_snr(c, *o.snr_db, o.delta, nullptr, 0, 1, nu, &sigma2));
    check(pasem_params_create_mb(c, o.delta, sigma2, nu, &p));
    return Params(p);
}

void cmd_simulate(const SimulateOpts& o)
{
    if (o.n < 1) throw Failure(kValidation, "--n must be at least 1");
    const auto c = make_qam(o.m);
    const Params truth = truth_params(c.get(), o);
    pasem_samples* raw = nullptr;
    check(pasem_simulate(c.get(), truth.get(), o.n, o.seed, &raw));
    Samples s(raw);

    const fs::path obs = o.out;
    const fs::path sym = o.symbols.empty() ? default_symbols_path(obs) : fs::path(o.symbols);
    check(pasem_samples_save(s.get(), c.get(), obs.c_str(), sym.c_str(), parse_format(o.format)));

    json side = {{"n", o.n}, {"seed", o.seed}, {"constellation", {{"m", o.m}}}};
    side["params"] = take_json([&](char** j) { return pasem_params_to_json(truth.get(), j); });
    if (!o.mode.empty()) side["mode"] = o.mode;
    write_file(sidecar_for(obs), side.dump(2) + '\n');

    double snr = 0.0;
    check(pasem_params_snr_db(truth.get(), c.get(), &snr));
    std::printf("simulated %zu samples: delta %.6g sigma2 %.6g snr %.3f dB H(X) %.4f bits -> %s, %s\n", o.n,
                pasem_params_delta(truth.get()), pasem_params_sigma2(truth.get()), snr,
                pasem_params_entropy(truth.get()), obs.string().c_str(), sym.string().c_str());
}

// ------------------------------------------------------------------ estimate

struct EmOpts {
    std::vector<std::size_t> ks{4, 16, 36, 64};
    std::string dist = "general";
    std::size_t max_iters = 100;
    double tol = 1e-8;
    std::string selection = "auto";
};

pasem_em_config em_config(const EmOpts& o)
{
    pasem_em_config cfg;
    pasem_em_config_default(&cfg);
    cfg.max_iters = o.max_iters;
    cfg.ll_rel_tol = o.tol;
    if (o.dist == "general")
        cfg.distribution_mode = PASEM_DIST_GENERAL;
    else if (o.dist == "mb")
        cfg.distribution_mode = PASEM_DIST_MAXWELL_BOLTZMANN;
    else
        throw Failure(kValidation, "unknown distribution mode '" + o.dist + "' (general, mb)");
    return cfg;
}

int selection_of(const std::string& s)
{
    if (s == "auto") return PASEM_SELECT_AUTO;
    if (s == "uncertainty") return PASEM_SELECT_UNCERTAINTY;
    if (s == "likelihood") return PASEM_SELECT_LIKELIHOOD;
    throw Failure(kValidation, "unknown selection '" + s + "' (auto, uncertainty, likelihood)");
}

struct EstimateOpts {
    std::string input;
    std::string symbols;
    std::string out;
    std::string format = "auto";
    std::optional<int> m;
    std::string method = "em";
    EmOpts em;
};

Samples load(const pasem_constellation* c, const std::string& input, const std::string& symbols,
             const std::string& format)
{
    pasem_samples* raw = nullptr;
    check(pasem_samples_load(c, input.c_str(), symbols.empty() ? nullptr : symbols.c_str(), parse_format(format),
                             &raw));
    return Samples(raw);
}

void cmd_estimate(const EstimateOpts& o)
{
    if (o.method != "em" && o.method != "da") throw Failure(kValidation, "--method must be em or da");
    if (o.method == "da" && o.symbols.empty())
        throw Failure(kValidation, "data-aided estimation requires transmitted symbols");
    const int m = data_bits(o.m, o.input);
    const auto c = make_qam(m);
    const Samples s = load(c.get(), o.input, o.symbols, o.format);

    Params est;
    json doc;
    std::size_t iters = 0;
    if (o.method == "da") {
        pasem_params* p = nullptr;
        check(pasem_da_fit(s.get(), c.get(), &p));
        est.reset(p);
        doc = take_json([&](char** j) { return pasem_params_to_json(est.get(), j); });
        doc["method"] = "da";
    } else {
        const pasem_em_config cfg = em_config(o.em);
        pasem_em_result* raw = nullptr;
        check(pasem_multi_init_em(s.get(), c.get(), o.em.ks.data(), o.em.ks.size(), &cfg, selection_of(o.em.selection),
                                  &raw));
        EmResult r(raw);
        pasem_params* p = nullptr;
        check(pasem_em_result_params(r.get(), &p));
        est.reset(p);
        iters = pasem_em_result_iterations(r.get());
        doc = take_json([&](char** j) { return pasem_em_result_to_json(r.get(), j); });
        doc["method"] = "em";
    }
    emit_json(with_constellation(doc, m), o.out);

    std::fprintf(o.out.empty() || o.out == "-" ? stderr : stdout,
                 "%s: delta %.6g sigma2 %.6g H(X) %.4f bits iterations %zu\n", o.method.c_str(),
                 pasem_params_delta(est.get()), pasem_params_sigma2(est.get()), pasem_params_entropy(est.get()),
                 iters);
}

// ------------------------------------------------------------------ evaluate

struct EvaluateOpts {
    std::string input;
    std::string symbols;
    std::string params;
    std::string out;
    std::string format = "auto";
    std::optional<int> m;
};

void cmd_evaluate(const EvaluateOpts& o)
{
    const int m = data_bits(o.m, o.input);
    const auto c = make_qam(m);
    const std::string text = read_json_file(o.params).dump();
    pasem_params* p = nullptr;
    check(pasem_params_from_json(c.get(), text.c_str(), &p));
    const Params params(p);
    const Samples s = load(c.get(), o.input, o.symbols, o.format);

    pasem_report* raw = nullptr;
    check(pasem_evaluate(s.get(), c.get(), params.get(), &raw));
    const Report r(raw);
    emit_json(take_json([&](char** j) { return pasem_report_to_json(r.get(), j); }), o.out);
    std::fprintf(o.out.empty() || o.out == "-" ? stderr : stdout, "u_s %.6f bits  R_abc %.6f  R_a %.6f bits\n",
                 pasem_report_u_s(r.get()), pasem_report_r_abc(r.get()), pasem_report_r_a(r.get()));
}

// ------------------------------------------------------------------ sweep

struct SweepOpts {
    std::vector<std::string> modes{"mode1", "mode2", "mode3", "mode4"};
    std::vector<double> snr_db;
    std::size_t seeds = 5;
    std::uint64_t seed = 1;
    std::size_t n = 20000;
    std::string out = "sweep.csv";
    EmOpts em;
};

struct Row {
    std::string mode;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double r_a_da = NAN, r_a_em = NAN, r_abc_da = NAN, r_abc_em = NAN;
    std::size_t em_iters = 0;
    std::size_t chosen_k = 0;
    std::string error;
};

double rate(const pasem_samples* s, const pasem_constellation* c, const pasem_params* p, double* r_abc)
{
    pasem_report* raw = nullptr;
    check(pasem_evaluate(s, c, p, &raw));
    const Report r(raw);
    *r_abc = pasem_report_r_abc(r.get());
    return pasem_report_r_a(r.get());
}

Row sweep_cell(const pasem_constellation* c, const std::string& mode, double snr, std::uint64_t seed,
               const SweepOpts& o, const pasem_em_config& cfg)
{
    Row row;
    row.mode = mode;
    row.snr_db = snr;
    row.seed = seed;
    try {
        pasem_params* raw_truth = nullptr;
        check(pasem_params_create_preset(c, mode.c_str(), 1.0, snr, &raw_truth));
        const Params truth(raw_truth);
        pasem_samples* raw_s = nullptr;
        check(pasem_simulate(c, truth.get(), o.n, seed, &raw_s));
        const Samples s(raw_s);

        pasem_params* raw_da = nullptr;
        check(pasem_da_fit(s.get(), c, &raw_da));
        const Params da(raw_da);
        row.r_a_da = rate(s.get(), c, da.get(), &row.r_abc_da);

        pasem_em_result* raw_em = nullptr;
        check(pasem_multi_init_em(s.get(), c, o.em.ks.data(), o.em.ks.size(), &cfg, selection_of(o.em.selection),
                                  &raw_em));
        const EmResult em(raw_em);
        pasem_params* raw_p = nullptr;
        check(pasem_em_result_params(em.get(), &raw_p));
        const Params est(raw_p);
        row.em_iters = pasem_em_result_iterations(em.get());
        row.chosen_k = pasem_em_result_chosen_k(em.get());
        row.r_a_em = rate(s.get(), c, est.get(), &row.r_abc_em);
    } catch (const Failure& f) {
        row.error = f.what();
    }
    return row;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

std::string num(double v)
{
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int cmd_sweep(const SweepOpts& o)
{
    if (o.snr_db.empty()) throw Failure(kValidation, "--snr-db needs at least one value");
    for (std::size_t i = 1; i < o.snr_db.size(); ++i)
        if (!(o.snr_db[i] > o.snr_db[i - 1])) throw Failure(kValidation, "--snr-db grid must be strictly increasing");
    if (o.seeds < 1 || o.n < 1) throw Failure(kValidation, "--seeds and --n must be at least 1");

    const auto c = make_qam(6);
    const pasem_em_config cfg = em_config(o.em);
    // Reject unknown presets before any work.
    for (const auto& mode : o.modes) {
        pasem_params* p = nullptr;
        check(pasem_params_create_preset(c.get(), mode.c_str(), 1.0, o.snr_db.front(), &p));
        pasem_params_free(p);
    }

    std::vector<Row> rows;
    for (const auto& mode : o.modes)
        for (double snr : o.snr_db)
            for (std::size_t k = 0; k < o.seeds; ++k) rows.push_back(sweep_cell(c.get(), mode, snr, o.seed + k, o, cfg));

    std::ostringstream out;
    out << "mode,snr_db,seed,r_a_da,r_a_em,r_abc_da,r_abc_em,em_iters,chosen_k,error\n";
    std::size_t failed = 0;
    for (const auto& r : rows) {
        failed += !r.error.empty();
        out << r.mode << ',' << num(r.snr_db) << ',' << r.seed << ',' << num(r.r_a_da) << ',' << num(r.r_a_em) << ','
            << num(r.r_abc_da) << ',' << num(r.r_abc_em) << ',' << (r.error.empty() ? std::to_string(r.em_iters) : "")
            << ',' << (r.error.empty() ? std::to_string(r.chosen_k) : "") << ',' << csv_field(r.error) << '\n';
    }
    const fs::path rows_path = o.out;
    write_file(rows_path, out.str());

    // Means per (mode, snr) over the rows that succeeded.
    std::ostringstream agg;
    agg << "mode,snr_db,rows,r_a_da,r_a_em,r_abc_da,r_abc_em,r_a_gap,em_iters\n";
    for (const auto& mode : o.modes)
        for (double snr : o.snr_db) {
            double sums[5] = {};
            std::size_t count = 0;
            for (const auto& r : rows)
                if (r.mode == mode && r.snr_db == snr && r.error.empty()) {
                    sums[0] += r.r_a_da;
                    sums[1] += r.r_a_em;
                    sums[2] += r.r_abc_da;
                    sums[3] += r.r_abc_em;
                    sums[4] += static_cast<double>(r.em_iters);
                    ++count;
                }
            const double k = count ? static_cast<double>(count) : NAN;
            agg << mode << ',' << num(snr) << ',' << count << ',' << num(sums[0] / k) << ',' << num(sums[1] / k)
                << ',' << num(sums[2] / k) << ',' << num(sums[3] / k) << ',' << num((sums[1] - sums[0]) / k) << ','
                << num(sums[4] / k) << '\n';
        }
    fs::path agg_path = rows_path;
    agg_path.replace_filename(rows_path.stem().string() + "_aggregate" + rows_path.extension().string());
    write_file(agg_path, agg.str());

    std::printf("sweep: %zu rows (%zu failed) -> %s, %s\n", rows.size(), failed, rows_path.string().c_str(),
                agg_path.string().c_str());
    if (failed == rows.size()) {
        std::fprintf(stderr, "error: every sweep row failed; first: %s\n", rows.front().error.c_str());
        return kNumeric;
    }
    return kOk;
}

void add_em_options(CLI::App* cmd, EmOpts& em)
{
    cmd->add_option("--ks", em.ks, "K-Means start sizes (even squares)")->delimiter(',')->capture_default_str();
    cmd->add_option("--em-max-iters", em.max_iters, "EM iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--em-tol", em.tol, "relative log-likelihood tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--selection", em.selection, "branch selection: auto, uncertainty, likelihood")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Blind decoding-metric estimation for probabilistically shaped QAM"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pasem_version()));

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "draw shaped symbols and pass them through AWGN");
    simulate->add_option("--out", sim.out, "observation file (.bin or .csv)")->required();
    simulate->add_option("--symbols", sim.symbols, "transmitted-point file (default <stem>.symbols<ext>)");
    simulate->add_option("--format", sim.format, "auto, bin or csv")->capture_default_str();
    simulate->add_option("--m", sim.m, "bits per symbol of the square QAM")->capture_default_str();
    simulate->add_option("--mode", sim.mode, "shaping preset: mode1..mode4");
    simulate->add_option("--nu", sim.nu, "Maxwell-Boltzmann parameter (0 = uniform)");
    simulate->add_option("--delta", sim.delta, "channel gain")->capture_default_str();
    simulate->add_option("--sigma2", sim.sigma2, "noise variance");
    simulate->add_option("--snr-db", sim.snr_db, "SNR in dB");
    simulate->add_option("--n", sim.n, "number of symbols")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "random seed")->capture_default_str();

    EstimateOpts est;
    auto* estimate = app.add_subcommand("estimate", "fit the channel model by multi-start EM or data-aided ML");
    estimate->add_option("--input", est.input, "observation file")->required();
    estimate->add_option("--symbols", est.symbols, "transmitted-point file");
    estimate->add_option("--out", est.out, "result JSON (default stdout)");
    estimate->add_option("--format", est.format, "auto, bin or csv")->capture_default_str();
    estimate->add_option("--m", est.m, "bits per symbol (default from the sidecar, else 6)");
    estimate->add_option("--method", est.method, "em or da")->capture_default_str();
    estimate->add_option("--mode", est.em.dist, "EM distribution model: general or mb")->capture_default_str();
    add_em_options(estimate, est.em);

    EvaluateOpts ev;
    auto* evaluate = app.add_subcommand("evaluate", "score a parameter set against transmitted bits");
    evaluate->add_option("--input", ev.input, "observation file")->required();
    evaluate->add_option("--symbols", ev.symbols, "transmitted-point file")->required();
    evaluate->add_option("--params", ev.params, "parameter JSON (estimate output or sidecar)")->required();
    evaluate->add_option("--out", ev.out, "report JSON (default stdout)");
    evaluate->add_option("--format", ev.format, "auto, bin or csv")->capture_default_str();
    evaluate->add_option("--m", ev.m, "bits per symbol (default from the sidecar, else 6)");

    SweepOpts sw;
    auto* sweep = app.add_subcommand("sweep", "compare data-aided and EM rates over presets and SNRs");
    sweep->add_option("--mode", sw.modes, "presets")->delimiter(',')->capture_default_str();
    sweep->add_option("--snr-db", sw.snr_db, "strictly increasing SNR grid in dB")->delimiter(',')->required();
    sweep->add_option("--seeds", sw.seeds, "seeds per cell")->capture_default_str();
    sweep->add_option("--seed", sw.seed, "first seed")->capture_default_str();
    sweep->add_option("--n", sw.n, "symbols per run")->capture_default_str();
    sweep->add_option("--out", sw.out, "row CSV; means go to <stem>_aggregate.csv")->capture_default_str();
    sweep->add_option("--em-mode", sw.em.dist, "EM distribution model: general or mb")->capture_default_str();
    add_em_options(sweep, sw.em);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*simulate) cmd_simulate(sim);
        if (*estimate) cmd_estimate(est);
        if (*evaluate) cmd_evaluate(ev);
        if (*sweep) return cmd_sweep(sw);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.what());
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumeric;
    }
    return kOk;
}
