#pragma once

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"
#include "pasem/estimation.hpp"
#include "pasem/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pasem::io {

// Sample files:
//   binary  little-endian float32 pairs (re, im), no header, 8 bytes per sample
//   csv     one "re,im" line per sample, 9 significant digits, no header

enum class SampleFormat { binary, csv };

/// Format from an explicit name ("bin"/"binary"/"csv") or else the file
/// extension (.bin, .csv).
SampleFormat resolve_format(const std::filesystem::path& path, std::optional<std::string> name = std::nullopt);

std::vector<cplx> read_samples(const std::filesystem::path& path, SampleFormat format);
void write_samples(const std::filesystem::path& path, std::span<const cplx> samples, SampleFormat format);

/// Rounds every value to the nearest float32, i.e. what a binary file holds.
std::vector<cplx> quantize_f32(std::span<const cplx> samples);

/// Maps stored points back to constellation indices (exact grid match required).
std::vector<std::size_t> symbols_from_points(const Constellation& c, std::span<const cplx> points);
std::vector<cplx> points_from_symbols(const Constellation& c, std::span<const std::size_t> symbols);

/// Path of the sidecar JSON for an observation file: same stem, .json.
std::filesystem::path sidecar_path(const std::filesystem::path& observations);

using nlohmann::json;

json to_json(const Constellation& c);
json to_json(const ChannelParams& p);
json to_json(const EmResult& r);
json to_json(const MetricReport& r);

/// Reads {delta, sigma2, pmf[] | nu} either at the top level or under "params".
/// When the document names a constellation ({"constellation": {"m": ...}}) it
/// must agree with `c`.
ChannelParams params_from_json(const json& j, const Constellation& c);

/// Bits per symbol named by a document, if any.
std::optional<int> constellation_bits(const json& j);

json sidecar(const Constellation& c, const ChannelParams& truth, std::size_t n, std::uint64_t seed);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace pasem::io
