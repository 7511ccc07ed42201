#pragma once

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pasem {

/// Named transmit distributions over 64-QAM used by the simulator and the
/// sweep harness. Maxwell-Boltzmann presets are pinned by their entropy;
/// the support preset is uniform over the inner 6x6 sub-grid (36 points).
struct ShapingMode {
    enum class Kind { maxwell_boltzmann, inner_support };

    std::string name;
    Kind kind = Kind::maxwell_boltzmann;
    double target_entropy = 0.0; // bits
    std::size_t support_side = 0; // inner_support only

    SymbolDistribution distribution(const Constellation& c) const;
};

const std::vector<ShapingMode>& shaping_presets();

/// Throws InvalidArgument for unknown names.
const ShapingMode& shaping_preset(std::string_view name);

/// nu >= 0 with entropy(mb_distribution(c, nu)) = target_bits, by bisection.
double mb_nu_for_entropy(const Constellation& c, double target_bits);

/// Parameters for a preset at a given SNR (dB) and gain.
ChannelParams preset_params(const ShapingMode& mode, const Constellation& c, double snr_db, double delta = 1.0);

} // namespace pasem
