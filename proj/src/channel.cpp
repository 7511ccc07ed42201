#include "pasem/channel.hpp"

#include "pasem/error.hpp"
#include "pasem/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pasem {

std::pair<double, double> Rng::normal_pair()
{
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

void ChannelParams::validate(const Constellation& c) const
{
    if (!std::isfinite(delta) || !(delta > 0.0)) throw InvalidArgument("channel gain must be finite and > 0");
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) throw InvalidArgument("noise variance must be finite and > 0");
    if (dist.size() != c.size())
        throw InvalidArgument("distribution has " + std::to_string(dist.size()) + " entries, constellation has " +
                              std::to_string(c.size()) + " points");
}

std::vector<std::size_t> draw_symbols(const Constellation& c, const SymbolDistribution& d, std::size_t n,
                                      std::uint64_t seed)
{
    if (n == 0) throw InvalidArgument("draw_symbols: n must be >= 1");
    if (d.size() != c.size()) throw InvalidArgument("draw_symbols: distribution and constellation sizes differ");

    std::vector<double> cdf(d.size());
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        acc += d[j];
        cdf[j] = acc;
        if (d[j] > 0.0) last = j;
    }

    std::vector<std::size_t> out(n);
    for (std::size_t chunk = 0; chunk * kChunkSize < n; ++chunk) {
        Rng rng(derive_seed(seed, 0, chunk));
        const std::size_t end = std::min(n, (chunk + 1) * kChunkSize);
        for (std::size_t i = chunk * kChunkSize; i < end; ++i) {
            const double u = rng.uniform() * acc;
            // First bin whose cumulative mass exceeds u; zero-mass bins are never hit.
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            std::size_t j = static_cast<std::size_t>(it - cdf.begin());
            out[i] = std::min(j, last);
        }
    }
    return out;
}

SampleBatch transmit(const Constellation& c, std::span<const std::size_t> symbols, const ChannelParams& params,
                     std::uint64_t seed)
{
    if (symbols.empty()) throw InvalidArgument("transmit: no symbols");
    params.validate(c);

    const std::size_t n = symbols.size();
    const double scale = std::sqrt(params.sigma2 / 2.0);
    SampleBatch batch;
    batch.observations.resize(n);
    batch.symbols.emplace(symbols.begin(), symbols.end());
    batch.seed = seed;
    for (std::size_t chunk = 0; chunk * kChunkSize < n; ++chunk) {
        Rng rng(derive_seed(seed, 1, chunk));
        const std::size_t end = std::min(n, (chunk + 1) * kChunkSize);
        for (std::size_t i = chunk * kChunkSize; i < end; ++i) {
            if (symbols[i] >= c.size()) throw InvalidArgument("transmit: symbol index out of range");
            const auto [a, b] = rng.normal_pair();
            batch.observations[i] = params.delta * c.point(symbols[i]) + cplx{scale * a, scale * b};
        }
    }
    return batch;
}

SampleBatch simulate(const Constellation& c, const ChannelParams& params, std::size_t n, std::uint64_t seed)
{
    params.validate(c);
    const auto x = draw_symbols(c, params.dist, n, seed);
    auto batch = transmit(c, x, params, derive_seed(seed, 1));
    batch.seed = seed;
    return batch;
}

double likelihood(cplx y, cplx x, double delta, double sigma2)
{
    return std::exp(-std::norm(y - delta * x) / sigma2) / (std::numbers::pi * sigma2);
}

double log_likelihood(cplx y, cplx x, double delta, double sigma2)
{
    return -std::log(std::numbers::pi * sigma2) - std::norm(y - delta * x) / sigma2;
}

double snr_db(const ChannelParams& p, const Constellation& c)
{
    return 10.0 * std::log10(p.delta * p.delta * mean_energy(p.dist, c) / p.sigma2);
}

double sigma2_for_snr(double snr_db, double delta, const SymbolDistribution& d, const Constellation& c)
{
    if (!std::isfinite(snr_db)) throw InvalidArgument("SNR must be finite");
    return delta * delta * mean_energy(d, c) / std::pow(10.0, snr_db / 10.0);
}

} // namespace pasem
