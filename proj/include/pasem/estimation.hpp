#pragma once

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"
#include "pasem/metrics.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pasem {

enum class DistributionMode { general_pmf, maxwell_boltzmann };

/// E-step posteriors Q_i(x_j), one row per observation, one column per point
/// of the constellation (inactive or zero-prior points hold exact zeros).
class PosteriorMatrix {
public:
    PosteriorMatrix() = default;
    PosteriorMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), q_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return q_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return q_[i * cols_ + j]; }
    std::span<const double> row(std::size_t i) const { return {q_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {q_.data() + i * cols_, cols_}; }

    /// Rescales every row to sum to one (rows of zeros are left unchanged).
    void normalize_rows();

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> q_;
};

struct EStep {
    PosteriorMatrix posterior;
    double log_likelihood; // L(theta) = sum_i log p_Y(y_i; theta)
};

EStep e_step(const SampleBatch& batch, const Constellation& c, const ChannelParams& params);

/// Writes posteriors into `q` (resized as needed) and returns L(theta).
double e_step_into(const SampleBatch& batch, const Constellation& c, const ChannelParams& params,
                   PosteriorMatrix& q);

/// L(theta) without materializing the posteriors.
double data_log_likelihood(const SampleBatch& batch, const Constellation& c, const ChannelParams& params);

/// Closed-form maximizer of the expected complete-data log-likelihood:
/// gain, then noise variance with the new gain, then the distribution.
/// `prob_floor` (general mode only) lifts active entries to at least that value.
ChannelParams m_step(const SampleBatch& batch, const Constellation& c, const PosteriorMatrix& q,
                     DistributionMode mode, double prob_floor = 0.0);

/// sum_i sum_j q_ij log(p(y_i | x_j; theta) p_j), the quantity m_step maximizes.
double m_step_objective(const SampleBatch& batch, const Constellation& c, const PosteriorMatrix& q,
                        const ChannelParams& params);

/// nu >= 0 with E_nu[|X|^2] = target_energy. Throws OutOfRange when the
/// target is not reachable for nu >= 0.
double fit_mb_nu(const Constellation& c, double target_energy);

struct KMeansInit {
    std::size_t k = 0; // 0 selects all M points
};

struct EmConfig {
    std::size_t max_iters = 100;
    double ll_rel_tol = 1e-8;
    DistributionMode distribution_mode = DistributionMode::general_pmf;
    double prob_floor = 0.0;
    std::variant<KMeansInit, ChannelParams> init = KMeansInit{};

    void validate() const;
};

struct EmResult {
    ChannelParams params;
    std::vector<double> log_likelihood_trace;
    std::size_t iterations_used = 0;
    bool converged = false;
    bool degenerate = false;
    std::optional<std::size_t> chosen_k;
    std::string diagnostic;
};

EmResult em_fit(const SampleBatch& batch, const Constellation& c, const EmConfig& config);

/// Constellation-constrained Lloyd iterations on the innermost k = side^2
/// points; the centers are delta * x_j and only delta is refit.
ChannelParams kmeans_init(const SampleBatch& batch, const Constellation& c, std::size_t k);

inline constexpr double kKMeansProbFloor = 1e-6;

/// How multi-start branches are ranked. Bit-metric uncertainty needs the
/// transmitted symbols; without them the data log-likelihood is used.
enum class Selection { uncertainty, likelihood };

struct BranchOutcome {
    std::size_t k = 0;
    std::optional<double> score; // empty when the branch failed
    std::size_t iterations_used = 0;
    std::vector<double> log_likelihood_trace;
    std::string error;
};

struct MultiStartResult {
    EmResult result;
    std::size_t chosen_k = 0;
    Selection selection = Selection::uncertainty;
    std::vector<BranchOutcome> branches;
    std::optional<MetricReport> report; // of the chosen branch, under uncertainty selection
};

/// Runs em_fit from a K-Means start for every k and keeps the branch with the
/// smallest score (ties go to the smaller k).
MultiStartResult multi_init_em(const SampleBatch& batch, const Constellation& c, std::span<const std::size_t> ks,
                               const EmConfig& config);

MultiStartResult multi_init_em(const SampleBatch& batch, const Constellation& c, std::span<const std::size_t> ks,
                               const EmConfig& config, Selection selection);

/// Supervised ML estimate from the transmitted symbols.
ChannelParams da_fit(const SampleBatch& batch, const Constellation& c);

} // namespace pasem
