#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pasem {

using cplx = std::complex<double>;

/// Square QAM alphabet on the odd-integer grid with per-dimension binary
/// reflected Gray labels (I-bits are the high half of the label).
///
/// Points are stored in label order, so point index j carries label j. A
/// constellation may be a restricted view: every point keeps its index and
/// label, but only the active ones take part in metric and estimation sums.
class Constellation {
public:
    static Constellation square_qam(int m);

    int bits() const { return m_; }
    std::size_t size() const { return points_.size(); }

    const std::vector<cplx>& points() const { return points_; }
    cplx point(std::size_t j) const { return points_[j]; }
    std::uint32_t label(std::size_t j) const { return static_cast<std::uint32_t>(j); }
    /// Label bit `b` of point j, b = 0 is the leftmost (most significant) bit.
    int label_bit(std::size_t j, int b) const { return static_cast<int>((j >> (m_ - 1 - b)) & 1u); }
    std::string label_string(std::size_t j) const;

    bool is_active(std::size_t j) const { return active_[j] != 0; }
    const std::vector<std::size_t>& active_indices() const { return active_idx_; }
    std::size_t active_count() const { return active_idx_.size(); }
    bool is_restricted() const { return active_idx_.size() != points_.size(); }

    // Grid structure: point j sits at (axis[level_i(j)], axis[level_q(j)]).
    const std::vector<double>& axis() const { return axis_; }
    std::size_t level_i(std::size_t j) const { return lvl_i_[j]; }
    std::size_t level_q(std::size_t j) const { return lvl_q_[j]; }

    /// Index of the point equal to `x` (within `tol`), if any.
    std::optional<std::size_t> find(cplx x, double tol = 1e-9) const;

    friend Constellation restrict_support(const Constellation& c, std::span<const std::size_t> active);

private:
    Constellation() = default;

    int m_ = 0;
    std::vector<cplx> points_;
    std::vector<double> axis_;
    std::vector<std::size_t> lvl_i_;
    std::vector<std::size_t> lvl_q_;
    std::vector<std::uint8_t> active_;
    std::vector<std::size_t> active_idx_;
};

/// Builds the 2^m point square QAM, m even in [2, 10].
inline Constellation build_square_qam(int m) { return Constellation::square_qam(m); }

/// View of `c` exposing only the points listed in `active` (point indices).
Constellation restrict_support(const Constellation& c, std::span<const std::size_t> active);

/// Restriction to the innermost side x side sub-grid (side even, e.g. 6 gives
/// the 36 points with coordinates in {±1, ±3, ±5}).
Constellation restrict_to_inner_grid(const Constellation& c, std::size_t side);

/// Indices of the innermost side x side sub-grid of the full grid.
std::vector<std::size_t> inner_grid_indices(const Constellation& c, std::size_t side);

/// Probability mass function over the points of a constellation.
class SymbolDistribution {
public:
    enum class Kind { general, maxwell_boltzmann };

    /// Normalizes nonnegative weights. Entries whose normalized value falls
    /// below 1e-12 are set to zero and the rest renormalized.
    static SymbolDistribution from_weights(std::span<const double> weights);
    /// Normalizes without the clamp. For estimates whose small entries carry
    /// real posterior mass and must stay positive.
    static SymbolDistribution from_weights_exact(std::span<const double> weights);
    static SymbolDistribution uniform(const Constellation& c);

    const std::vector<double>& pmf() const { return pmf_; }
    double operator[](std::size_t j) const { return pmf_[j]; }
    std::size_t size() const { return pmf_.size(); }
    Kind kind() const { return kind_; }
    /// Present only for Maxwell-Boltzmann distributions.
    std::optional<double> nu() const { return nu_; }

    friend SymbolDistribution mb_distribution(const Constellation& c, double nu);

private:
    SymbolDistribution() = default;

    std::vector<double> pmf_;
    Kind kind_ = Kind::general;
    std::optional<double> nu_;
};

inline constexpr double kProbClamp = 1e-12;

/// p_j proportional to exp(-nu |x_j|^2) over the active points (zero elsewhere).
SymbolDistribution mb_distribution(const Constellation& c, double nu);

/// Entropy in bits, 0 log 0 = 0.
double entropy(const SymbolDistribution& d);

/// E[|X|^2] under d.
double mean_energy(const SymbolDistribution& d, const Constellation& c);

/// Mean energy of the uniform distribution over the active points.
double uniform_energy(const Constellation& c);

/// Smallest |x|^2 among active points.
double min_energy(const Constellation& c);

} // namespace pasem
