#include "pasem/io.hpp"

#include "pasem/error.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pasem::io {

namespace {

std::uint32_t to_le(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    return v;
}

std::string lower(std::string s)
{
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

double finite_number(const json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number()) throw InvalidArgument(std::string("missing numeric field '") + key + "'");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw InvalidArgument(std::string("field '") + key + "' is not finite");
    return v;
}

} // namespace

SampleFormat resolve_format(const std::filesystem::path& path, std::optional<std::string> name)
{
    if (name && !name->empty()) {
        const auto n = lower(*name);
        if (n == "bin" || n == "binary") return SampleFormat::binary;
        if (n == "csv") return SampleFormat::csv;
        throw InvalidArgument("unknown sample format '" + *name + "'");
    }
    const auto ext = lower(path.extension().string());
    if (ext == ".bin") return SampleFormat::binary;
    if (ext == ".csv") return SampleFormat::csv;
    throw InvalidArgument("cannot infer sample format from '" + path.string() + "' (use .bin or .csv)");
}

std::vector<cplx> read_samples(const std::filesystem::path& path, SampleFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::vector<cplx> out;
    if (format == SampleFormat::binary) {
        std::error_code ec;
        const auto bytes = std::filesystem::file_size(path, ec);
        if (ec) throw IoError("cannot stat '" + path.string() + "'");
        if (bytes % 8 != 0)
            throw InvalidArgument("binary sample file '" + path.string() + "' size is not a multiple of 8 bytes");
        std::vector<std::uint32_t> raw(bytes / 4);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
        if (!in) throw IoError("short read from '" + path.string() + "'");
        out.resize(raw.size() / 2);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const float re = std::bit_cast<float>(to_le(raw[2 * i]));
            const float im = std::bit_cast<float>(to_le(raw[2 * i + 1]));
            out[i] = {re, im};
        }
    } else {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            double re = 0.0, im = 0.0;
            char tail = 0;
            if (std::sscanf(line.c_str(), " %lf , %lf %c", &re, &im, &tail) != 2)
                throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected 're,im'");
            out.emplace_back(re, im);
        }
    }
    if (out.empty()) throw InvalidArgument("sample file '" + path.string() + "' holds no samples");
    return out;
}

void write_samples(const std::filesystem::path& path, std::span<const cplx> samples, SampleFormat format)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    if (format == SampleFormat::binary) {
        std::vector<std::uint32_t> raw(samples.size() * 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            raw[2 * i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(samples[i].real())));
            raw[2 * i + 1] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(samples[i].imag())));
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    } else {
        char buf[64];
        for (const cplx& s : samples) {
            const int len = std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", s.real(), s.imag());
            out.write(buf, len);
        }
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<cplx> quantize_f32(std::span<const cplx> samples)
{
    std::vector<cplx> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = {static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag())};
    return out;
}

std::vector<std::size_t> symbols_from_points(const Constellation& c, std::span<const cplx> points)
{
    std::vector<std::size_t> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto j = c.find(points[i], 1e-6);
        if (!j)
            throw InvalidArgument("symbol " + std::to_string(i) + " is not a point of the " +
                                  std::to_string(c.size()) + "-QAM grid");
        out[i] = *j;
    }
    return out;
}

std::vector<cplx> points_from_symbols(const Constellation& c, std::span<const std::size_t> symbols)
{
    std::vector<cplx> out(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] >= c.size()) throw InvalidArgument("symbol index out of range");
        out[i] = c.point(symbols[i]);
    }
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& observations)
{
    auto p = observations;
    p.replace_extension(".json");
    return p;
}

json to_json(const Constellation& c)
{
    json pts = json::array();
    json labels = json::array();
    for (std::size_t j = 0; j < c.size(); ++j) {
        pts.push_back({c.point(j).real(), c.point(j).imag()});
        labels.push_back(c.label_string(j));
    }
    json out = {{"m", c.bits()}, {"points", pts}, {"labels", labels}};
    if (c.is_restricted()) out["active"] = c.active_indices();
    return out;
}

json to_json(const ChannelParams& p)
{
    json out = {{"delta", p.delta}, {"sigma2", p.sigma2}, {"pmf", p.dist.pmf()}};
    if (p.dist.nu()) out["nu"] = *p.dist.nu();
    return out;
}

json to_json(const EmResult& r)
{
    json out = to_json(r.params);
    out["log_likelihood_trace"] = r.log_likelihood_trace;
    out["iterations_used"] = r.iterations_used;
    out["converged"] = r.converged;
    if (r.chosen_k) out["chosen_k"] = *r.chosen_k;
    if (!r.diagnostic.empty()) out["diagnostic"] = r.diagnostic;
    return out;
}

json to_json(const MetricReport& r)
{
    return {{"s_opt", r.s_opt}, {"u_s", r.u_s},   {"r_abc", r.r_abc},
            {"r_a", r.r_a},     {"h_x", r.h_x},   {"per_bit_uncertainty", r.per_bit_uncertainty}};
}

std::optional<int> constellation_bits(const json& j)
{
    if (!j.is_object()) return std::nullopt;
    if (j.contains("constellation") && j["constellation"].is_object() && j["constellation"].contains("m"))
        return j["constellation"]["m"].get<int>();
    return std::nullopt;
}

ChannelParams params_from_json(const json& doc, const Constellation& c)
{
    if (!doc.is_object()) throw InvalidArgument("parameter document must be a JSON object");
    if (const auto m = constellation_bits(doc); m && *m != c.bits())
        throw InvalidArgument("parameters are for " + std::to_string(1 << *m) + "-QAM but the data is " +
                              std::to_string(c.size()) + "-QAM");
    const json& j = doc.contains("params") && doc["params"].is_object() ? doc["params"] : doc;

    const double delta = finite_number(j, "delta");
    const double sigma2 = finite_number(j, "sigma2");
    if (j.contains("pmf")) {
        const auto pmf = j["pmf"].get<std::vector<double>>();
        if (pmf.size() != c.size())
            throw InvalidArgument("pmf has " + std::to_string(pmf.size()) + " entries but the data is " +
                                  std::to_string(c.size()) + "-QAM");
        ChannelParams p{delta, sigma2, SymbolDistribution::from_weights(pmf)};
        p.validate(c);
        return p;
    }
    if (j.contains("nu")) {
        ChannelParams p{delta, sigma2, mb_distribution(c, finite_number(j, "nu"))};
        p.validate(c);
        return p;
    }
    throw InvalidArgument("parameter document needs 'pmf' or 'nu'");
}

json sidecar(const Constellation& c, const ChannelParams& truth, std::size_t n, std::uint64_t seed)
{
    return {{"n", n}, {"seed", seed}, {"constellation", {{"m", c.bits()}}}, {"params", to_json(truth)}};
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

} // namespace pasem::io
