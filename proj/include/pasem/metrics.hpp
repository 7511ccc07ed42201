#pragma once

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pasem {

inline constexpr double kDefaultLlrClip = 50.0;

/// Bit-wise LLRs log(P(b=0 | y) / P(b=1 | y)) in natural-log units, n x m,
/// each entry clipped to [-clip, clip].
struct LlrFrame {
    std::size_t n = 0;
    std::size_t m = 0;
    double clip = kDefaultLlrClip;
    std::vector<double> llrs;

    double operator()(std::size_t i, std::size_t b) const { return llrs[i * m + b]; }
    double& operator()(std::size_t i, std::size_t b) { return llrs[i * m + b]; }

    /// alpha * llrs with the clip bound scaled alike (alpha > 0).
    LlrFrame scaled(double alpha) const;
};

/// Transmitted label bits, n x m.
struct BitFrame {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::uint8_t> bits;

    int operator()(std::size_t i, std::size_t b) const { return bits[i * m + b]; }
};

LlrFrame compute_llrs(const SampleBatch& batch, const Constellation& c, const ChannelParams& params,
                      double clip = kDefaultLlrClip);

/// Label bits of the batch's transmitted symbols.
BitFrame label_bits(const SampleBatch& batch, const Constellation& c);

struct BitUncertainty {
    double u_s = 0.0;              // bits per symbol
    std::vector<double> per_bit;   // one entry per bit level, sums to u_s
};

/// Empirical mean over samples of sum_b log2(1 + exp(-(1 - 2 b) s l)).
BitUncertainty bit_uncertainty(const LlrFrame& llrs, const BitFrame& bits, double s);

struct SOptimum {
    double s_opt = 0.0;
    double u_s = 0.0;
    std::vector<double> per_bit;
};

/// min over s in [0, s_hi] of bit_uncertainty. A 17-point scan brackets the
/// minimum (s_hi doubles from 4 while the scan minimum sits on the upper
/// edge, up to 64) and golden-section search refines it.
SOptimum minimize_over_s(const LlrFrame& llrs, const BitFrame& bits);

struct MetricReport {
    double s_opt = 0.0;
    double u_s = 0.0;   // bits per symbol
    double r_abc = 0.0; // 1 - u_s / m
    double r_a = 0.0;   // max(0, h_x - u_s), bits per channel use
    double h_x = 0.0;   // input entropy of the model distribution
    std::vector<double> per_bit_uncertainty;
};

/// Assembles a report so that the rate identities hold exactly.
MetricReport make_report(const SOptimum& opt, int m, double h_x);

/// LLRs from the model, scored against the transmitted bits.
MetricReport evaluate(const SampleBatch& batch, const Constellation& c, const ChannelParams& params);

struct SymbolUncertainty {
    double s_opt = 0.0;
    double u_s = 0.0; // +inf when a transmitted point has zero model probability
    std::vector<std::size_t> offending; // sample indices with q(x_i, y_i) = 0
};

/// Symbol-metric counterpart of the bit-wise uncertainty, minimized over s
/// with the same search.
SymbolUncertainty symbol_uncertainty(const SampleBatch& batch, const Constellation& c, const ChannelParams& params);

} // namespace pasem
