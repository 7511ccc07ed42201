#pragma once

#include "pasem/constellation.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pasem {

/// AWGN decoding-metric model Y = delta * X + N, N ~ CN(0, sigma2).
struct ChannelParams {
    double delta = 1.0;  // real gain
    double sigma2 = 1.0; // total complex noise variance
    SymbolDistribution dist;

    /// Throws InvalidArgument unless delta, sigma2 > 0 and finite and the
    /// distribution matches the constellation size.
    void validate(const Constellation& c) const;
};

/// Observations, optionally paired with the transmitted point indices.
struct SampleBatch {
    std::vector<cplx> observations;
    std::optional<std::vector<std::size_t>> symbols;
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return observations.size(); }
    bool has_symbols() const { return symbols.has_value(); }
};

/// n i.i.d. point indices drawn from d.
std::vector<std::size_t> draw_symbols(const Constellation& c, const SymbolDistribution& d, std::size_t n,
                                      std::uint64_t seed);

/// Passes the points through the AWGN channel; symbols are kept in the batch.
SampleBatch transmit(const Constellation& c, std::span<const std::size_t> symbols, const ChannelParams& params,
                     std::uint64_t seed);

/// draw_symbols followed by transmit. The noise stream uses
/// derive_seed(seed, 1); symbols use the seed directly.
SampleBatch simulate(const Constellation& c, const ChannelParams& params, std::size_t n, std::uint64_t seed);

double likelihood(cplx y, cplx x, double delta, double sigma2);
double log_likelihood(cplx y, cplx x, double delta, double sigma2);

inline double likelihood(cplx y, cplx x, const ChannelParams& p) { return likelihood(y, x, p.delta, p.sigma2); }
inline double log_likelihood(cplx y, cplx x, const ChannelParams& p) { return log_likelihood(y, x, p.delta, p.sigma2); }

/// SNR in dB: 10 log10(delta^2 E[|X|^2] / sigma2).
double snr_db(const ChannelParams& p, const Constellation& c);

/// Noise variance giving the requested SNR for gain delta and distribution d.
double sigma2_for_snr(double snr_db, double delta, const SymbolDistribution& d, const Constellation& c);

} // namespace pasem
