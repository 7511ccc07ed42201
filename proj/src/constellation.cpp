#include "pasem/constellation.hpp"

#include "pasem/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pasem {

namespace {

std::uint32_t gray(std::uint32_t a) { return a ^ (a >> 1); }

std::uint32_t gray_inverse(std::uint32_t g)
{
    std::uint32_t a = 0;
    for (; g; g >>= 1) a ^= g;
    return a;
}

} // namespace

Constellation Constellation::square_qam(int m)
{
    if (m < 2 || m > 10 || (m % 2) != 0)
        throw InvalidArgument("square QAM needs an even number of bits in [2, 10], got " + std::to_string(m));

    const int half = m / 2;
    const std::size_t side = std::size_t{1} << half;
    const std::size_t M = std::size_t{1} << m;

    Constellation c;
    c.m_ = m;
    c.axis_.resize(side);
    for (std::size_t a = 0; a < side; ++a)
        c.axis_[a] = 2.0 * static_cast<double>(a) - static_cast<double>(side - 1);

    c.points_.resize(M);
    c.lvl_i_.resize(M);
    c.lvl_q_.resize(M);
    const std::uint32_t low_mask = (1u << half) - 1u;
    for (std::uint32_t label = 0; label < M; ++label) {
        const std::size_t li = gray_inverse(label >> half);
        const std::size_t lq = gray_inverse(label & low_mask);
        c.lvl_i_[label] = li;
        c.lvl_q_[label] = lq;
        c.points_[label] = {c.axis_[li], c.axis_[lq]};
    }
    c.active_.assign(M, 1);
    c.active_idx_.resize(M);
    std::iota(c.active_idx_.begin(), c.active_idx_.end(), std::size_t{0});
    return c;
}

std::string Constellation::label_string(std::size_t j) const
{
    std::string s(static_cast<std::size_t>(m_), '0');
    for (int b = 0; b < m_; ++b)
        if (label_bit(j, b)) s[static_cast<std::size_t>(b)] = '1';
    return s;
}

std::optional<std::size_t> Constellation::find(cplx x, double tol) const
{
    // Grid lookup: round each coordinate to the nearest odd level.
    const auto level = [&](double v) -> std::optional<std::size_t> {
        const double side = static_cast<double>(axis_.size());
        const double a = std::round((v + side - 1.0) / 2.0);
        if (a < 0.0 || a > side - 1.0) return std::nullopt;
        const auto idx = static_cast<std::size_t>(a);
        if (std::abs(axis_[idx] - v) > tol) return std::nullopt;
        return idx;
    };
    const auto li = level(x.real());
    const auto lq = level(x.imag());
    if (!li || !lq) return std::nullopt;
    const std::uint32_t half = static_cast<std::uint32_t>(m_ / 2);
    const std::size_t j = (static_cast<std::size_t>(gray(static_cast<std::uint32_t>(*li))) << half) |
                          gray(static_cast<std::uint32_t>(*lq));
    return j;
}

Constellation restrict_support(const Constellation& c, std::span<const std::size_t> active)
{
    if (active.empty()) throw InvalidArgument("restrict_support: empty active set");
    Constellation r = c;
    r.active_.assign(c.size(), 0);
    for (std::size_t j : active) {
        if (j >= c.size() || !c.is_active(j))
            throw InvalidArgument("restrict_support: index " + std::to_string(j) + " is not a point of the constellation");
        r.active_[j] = 1;
    }
    r.active_idx_.clear();
    for (std::size_t j = 0; j < c.size(); ++j)
        if (r.active_[j]) r.active_idx_.push_back(j);
    return r;
}

std::vector<std::size_t> inner_grid_indices(const Constellation& c, std::size_t side)
{
    const std::size_t full = c.axis().size();
    if (side < 2 || side > full || (side % 2) != 0)
        throw InvalidArgument("inner grid side must be even and at most " + std::to_string(full));
    const std::size_t lo = (full - side) / 2;
    const std::size_t hi = lo + side;
    std::vector<std::size_t> idx;
    idx.reserve(side * side);
    for (std::size_t j = 0; j < c.size(); ++j) {
        const std::size_t li = c.level_i(j);
        const std::size_t lq = c.level_q(j);
        if (li >= lo && li < hi && lq >= lo && lq < hi) idx.push_back(j);
    }
    return idx;
}

Constellation restrict_to_inner_grid(const Constellation& c, std::size_t side)
{
    const auto idx = inner_grid_indices(c, side);
    return restrict_support(c, idx);
}

SymbolDistribution SymbolDistribution::from_weights(std::span<const double> weights)
{
    if (weights.empty()) throw InvalidArgument("distribution needs at least one entry");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("distribution weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("distribution weights sum to zero");

    SymbolDistribution d;
    d.pmf_.resize(weights.size());
    double kept = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const double p = weights[j] / total;
        d.pmf_[j] = p < kProbClamp ? 0.0 : p;
        kept += d.pmf_[j];
    }
    if (!(kept > 0.0)) throw InvalidArgument("distribution has no entry above the clamp level");
    for (double& p : d.pmf_) p /= kept;
    return d;
}

SymbolDistribution SymbolDistribution::from_weights_exact(std::span<const double> weights)
{
    if (weights.empty()) throw InvalidArgument("distribution needs at least one entry");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("distribution weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("distribution weights sum to zero");
    SymbolDistribution d;
    d.pmf_.reserve(weights.size());
    for (double w : weights) d.pmf_.push_back(w / total);
    return d;
}

SymbolDistribution SymbolDistribution::uniform(const Constellation& c)
{
    std::vector<double> w(c.size(), 0.0);
    for (std::size_t j : c.active_indices()) w[j] = 1.0;
    return from_weights(w);
}

SymbolDistribution mb_distribution(const Constellation& c, double nu)
{
    if (!std::isfinite(nu) || nu < 0.0) throw InvalidArgument("Maxwell-Boltzmann parameter must be finite and >= 0");

    // Max-exponent subtraction: the largest term is exp(-nu * min energy).
    const double e_min = min_energy(c);
    std::vector<double> w(c.size(), 0.0);
    double total = 0.0;
    for (std::size_t j : c.active_indices()) {
        w[j] = std::exp(-nu * (std::norm(c.point(j)) - e_min));
        total += w[j];
    }
    SymbolDistribution d;
    d.pmf_.resize(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) d.pmf_[j] = w[j] / total;
    d.kind_ = SymbolDistribution::Kind::maxwell_boltzmann;
    d.nu_ = nu;
    return d;
}

double entropy(const SymbolDistribution& d)
{
    double h = 0.0;
    for (double p : d.pmf())
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

double mean_energy(const SymbolDistribution& d, const Constellation& c)
{
    if (d.size() != c.size()) throw InvalidArgument("distribution and constellation sizes differ");
    double e = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) e += d[j] * std::norm(c.point(j));
    return e;
}

double uniform_energy(const Constellation& c)
{
    double e = 0.0;
    for (std::size_t j : c.active_indices()) e += std::norm(c.point(j));
    return e / static_cast<double>(c.active_count());
}

double min_energy(const Constellation& c)
{
    double e = std::numeric_limits<double>::infinity();
    for (std::size_t j : c.active_indices()) e = std::min(e, std::norm(c.point(j)));
    return e;
}

} // namespace pasem
