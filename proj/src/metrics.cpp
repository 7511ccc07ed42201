#include "pasem/metrics.hpp"

#include "mixture_kernel.hpp"
#include "pasem/error.hpp"
#include "scalar_search.hpp"
#include "softplus_sum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace pasem {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x)
{
    const double e = std::exp(-std::abs(x));
    // log1p(e) == e to double precision once e < 2^-53.
    return std::max(x, 0.0) + (e < 0x1p-53 ? e : std::log1p(e));
}

void check_frames(const LlrFrame& llrs, const BitFrame& bits)
{
    if (llrs.n != bits.n || llrs.m != bits.m) throw InvalidArgument("LLR and bit frames have different shapes");
    if (llrs.n == 0) throw InvalidArgument("LLR frame is empty");
}

} // namespace

LlrFrame LlrFrame::scaled(double alpha) const
{
    if (!(alpha > 0.0)) throw InvalidArgument("LLR scale must be > 0");
    LlrFrame out = *this;
    out.clip = clip * alpha;
    for (double& l : out.llrs) l *= alpha;
    return out;
}

LlrFrame compute_llrs(const SampleBatch& batch, const Constellation& c, const ChannelParams& params, double clip)
{
    if (batch.observations.empty()) throw InvalidArgument("sample batch is empty");
    if (!(clip > 0.0)) throw InvalidArgument("LLR clip must be > 0");
    const detail::MixtureKernel kernel(c, params);
    const auto& support = kernel.support();
    const std::size_t m = static_cast<std::size_t>(c.bits());
    const std::size_t K = support.size();

    const std::size_t side = kernel.side();
    const std::size_t half = m / 2;

    // I bits are the leading half of the label and depend only on the I
    // level (Q bits likewise), so each bit level reduces to sums of the
    // per-axis marginals. level_bit[b][a] is the label bit b of level a.
    std::vector<std::array<std::int8_t, detail::MixtureKernel::kMaxSide>> level_bit(m);
    for (auto& row : level_bit) row.fill(-1);
    std::vector<std::array<bool, 2>> has_side(m, {false, false});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t b = 0; b < m; ++b) {
            const int bit = c.label_bit(support[k], static_cast<int>(b));
            const std::size_t level = b < half ? c.level_i(support[k]) : c.level_q(support[k]);
            level_bit[b][level] = static_cast<std::int8_t>(bit);
            has_side[b][static_cast<std::size_t>(bit)] = true;
        }
    for (std::size_t b = 0; b < m; ++b)
        if (!has_side[b][0] && !has_side[b][1])
            throw InvalidModel("bit level " + std::to_string(b) + " has no supported point");

    LlrFrame out;
    out.n = batch.size();
    out.m = m;
    out.clip = clip;
    out.llrs.resize(out.n * m);

    detail::MixtureKernel::AxisArray marg_i{}, marg_q{}, e_i{}, e_q{};
    for (std::size_t i = 0; i < out.n; ++i) {
        kernel.marginals(batch.observations[i], marg_i.data(), marg_q.data(), e_i.data(), e_q.data(), nullptr);
        for (std::size_t b = 0; b < m; ++b) {
            const auto& marg = b < half ? marg_i : marg_q;
            double s0 = 0.0;
            double s1 = 0.0;
            for (std::size_t a = 0; a < side; ++a) {
                if (level_bit[b][a] == 0) s0 += marg[a];
                else if (level_bit[b][a] == 1) s1 += marg[a];
            }
            double l;
            if (s1 == 0.0)
                l = clip;
            else if (s0 == 0.0)
                l = -clip;
            else
                l = std::clamp(std::log(s0) - std::log(s1), -clip, clip);
            out.llrs[i * m + b] = l;
        }
    }
    return out;
}

BitFrame label_bits(const SampleBatch& batch, const Constellation& c)
{
    if (!batch.has_symbols()) throw InvalidArgument("label bits require the transmitted symbols");
    const auto& x = *batch.symbols;
    BitFrame out;
    out.n = x.size();
    out.m = static_cast<std::size_t>(c.bits());
    out.bits.resize(out.n * out.m);
    for (std::size_t i = 0; i < out.n; ++i) {
        if (x[i] >= c.size()) throw InvalidArgument("symbol index out of range");
        for (std::size_t b = 0; b < out.m; ++b)
            out.bits[i * out.m + b] = static_cast<std::uint8_t>(c.label_bit(x[i], static_cast<int>(b)));
    }
    return out;
}

BitUncertainty bit_uncertainty(const LlrFrame& llrs, const BitFrame& bits, double s)
{
    check_frames(llrs, bits);
    if (!(s >= 0.0)) throw InvalidArgument("s must be >= 0");
    BitUncertainty out;
    out.per_bit.assign(llrs.m, 0.0);
    if (s == 0.0) {
        // log2(1 + e^0) = 1 per bit level.
        std::fill(out.per_bit.begin(), out.per_bit.end(), 1.0);
        out.u_s = static_cast<double>(llrs.m);
        return out;
    }
    for (std::size_t i = 0; i < llrs.n; ++i)
        for (std::size_t b = 0; b < llrs.m; ++b) {
            const double sign = bits(i, b) ? -1.0 : 1.0;
            out.per_bit[b] += softplus(-sign * s * llrs(i, b));
        }
    const double scale = 1.0 / (static_cast<double>(llrs.n) * std::numbers::ln2);
    for (double& u : out.per_bit) {
        u *= scale;
        out.u_s += u;
    }
    return out;
}

SOptimum minimize_over_s(const LlrFrame& llrs, const BitFrame& bits)
{
    check_frames(llrs, bits);
    // Signed reliabilities (1 - 2b) l; the objective only depends on these.
    std::vector<double> z(llrs.llrs.size());
    for (std::size_t i = 0; i < llrs.n; ++i)
        for (std::size_t b = 0; b < llrs.m; ++b) z[i * llrs.m + b] = bits(i, b) ? -llrs(i, b) : llrs(i, b);
    const double scale = 1.0 / (static_cast<double>(llrs.n) * std::numbers::ln2);
    // Saturated reliabilities (+/- clip) are common at high SNR; count them
    // once instead of summing them term by term.
    double n_pos = 0.0;
    double n_neg = 0.0;
    std::erase_if(z, [&](double v) {
        if (v == llrs.clip) return n_pos += 1.0, true;
        if (v == -llrs.clip) return n_neg += 1.0, true;
        return false;
    });
    const auto u_at = [&](double s) {
        if (s == 0.0) return static_cast<double>(llrs.m);
        const double acc = n_pos * softplus(-s * llrs.clip) + n_neg * softplus(s * llrs.clip) +
                           detail::softplus_sum(z.data(), z.size(), s);
        return acc * scale;
    };
    const auto best = detail::minimize_nonnegative(u_at);
    const auto at = bit_uncertainty(llrs, bits, best.x);
    return {best.x, at.u_s, at.per_bit};
}

MetricReport make_report(const SOptimum& opt, int m, double h_x)
{
    MetricReport r;
    r.s_opt = opt.s_opt;
    r.u_s = opt.u_s;
    r.per_bit_uncertainty = opt.per_bit;
    r.h_x = h_x;
    r.r_abc = 1.0 - r.u_s / static_cast<double>(m);
    r.r_a = std::max(0.0, r.h_x - r.u_s);
    return r;
}

MetricReport evaluate(const SampleBatch& batch, const Constellation& c, const ChannelParams& params)
{
    if (!batch.has_symbols()) throw InvalidArgument("evaluation requires the transmitted symbols");
    const auto llrs = compute_llrs(batch, c, params);
    const auto bits = label_bits(batch, c);
    return make_report(minimize_over_s(llrs, bits), c.bits(), entropy(params.dist));
}

SymbolUncertainty symbol_uncertainty(const SampleBatch& batch, const Constellation& c, const ChannelParams& params)
{
    if (!batch.has_symbols()) throw InvalidArgument("symbol uncertainty requires the transmitted symbols");
    params.validate(c);
    const auto& x = *batch.symbols;
    const std::size_t n = batch.size();

    std::vector<std::size_t> support;
    for (std::size_t j : c.active_indices())
        if (params.dist[j] > 0.0) support.push_back(j);
    if (support.empty()) throw InvalidArgument("symbol distribution has no mass on the active points");

    // log q(x_j, y_i) up to the common -log(pi sigma2) term, which cancels.
    const std::size_t K = support.size();
    std::vector<double> logq(n * K);
    std::vector<double> logq_true(n);
    SymbolUncertainty out;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx y = batch.observations[i];
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t j = support[k];
            logq[i * K + k] = std::log(params.dist[j]) - std::norm(y - params.delta * c.point(j)) / params.sigma2;
        }
        const std::size_t t = x[i];
        if (t >= c.size() || !c.is_active(t) || params.dist[t] == 0.0) {
            out.offending.push_back(i);
            continue;
        }
        logq_true[i] = std::log(params.dist[t]) - std::norm(y - params.delta * c.point(t)) / params.sigma2;
    }
    if (!out.offending.empty()) {
        out.u_s = std::numeric_limits<double>::infinity();
        out.s_opt = 1.0;
        return out;
    }

    const auto u_at = [&](double s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &logq[i * K];
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, s * row[k]);
            double sum = 0.0;
            for (std::size_t k = 0; k < K; ++k) sum += std::exp(s * row[k] - mx);
            acc += mx + std::log(sum) - s * logq_true[i];
        }
        return acc / (static_cast<double>(n) * std::numbers::ln2);
    };
    const auto best = detail::minimize_nonnegative(u_at);
    out.s_opt = best.x;
    out.u_s = best.value;
    return out;
}

} // namespace pasem
