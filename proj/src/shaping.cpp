#include "pasem/shaping.hpp"

#include "pasem/error.hpp"

#include <cmath>

namespace pasem {

const std::vector<ShapingMode>& shaping_presets()
{
    static const std::vector<ShapingMode> presets = {
        {"mode1", ShapingMode::Kind::maxwell_boltzmann, 5.5, 0},
        {"mode2", ShapingMode::Kind::maxwell_boltzmann, 5.0, 0},
        {"mode3", ShapingMode::Kind::maxwell_boltzmann, 4.5, 0},
        {"mode4", ShapingMode::Kind::inner_support, std::log2(36.0), 6},
    };
    return presets;
}

const ShapingMode& shaping_preset(std::string_view name)
{
    for (const auto& p : shaping_presets())
        if (p.name == name) return p;
    throw InvalidArgument("unknown shaping mode '" + std::string(name) + "'");
}

double mb_nu_for_entropy(const Constellation& c, double target_bits)
{
    const double h_max = std::log2(static_cast<double>(c.active_count()));
    if (!(target_bits > 0.0) || target_bits > h_max)
        throw OutOfRange("target entropy must lie in (0, " + std::to_string(h_max) + "] bits");
    const auto h = [&](double nu) { return entropy(mb_distribution(c, nu)); };
    double lo = 0.0;
    double hi = 1.0 / uniform_energy(c);
    while (h(hi) > target_bits) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw NumericError("entropy target below the reachable range");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > target_bits ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SymbolDistribution ShapingMode::distribution(const Constellation& c) const
{
    switch (kind) {
    case Kind::maxwell_boltzmann:
        return mb_distribution(c, mb_nu_for_entropy(c, target_entropy));
    case Kind::inner_support: {
        const auto inner = restrict_to_inner_grid(c, support_side);
        return SymbolDistribution::uniform(inner);
    }
    }
    throw InvalidArgument("unknown shaping kind");
}

ChannelParams preset_params(const ShapingMode& mode, const Constellation& c, double snr_db, double delta)
{
    auto dist = mode.distribution(c);
    const double sigma2 = sigma2_for_snr(snr_db, delta, dist, c);
    ChannelParams p{delta, sigma2, std::move(dist)};
    p.validate(c);
    return p;
}

} // namespace pasem
