#include "pasem/estimation.hpp"

#include "mixture_kernel.hpp"
#include "simd.hpp"
#include "pasem/error.hpp"
#include "pasem/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace pasem {

namespace {

// Noise variances are kept strictly positive; an exact zero (noiseless
// supervised data) is reported as the smallest normal double.
double positive_variance(double v) { return std::max(v, std::numeric_limits<double>::min()); }

double mean_power(const SampleBatch& batch)
{
    double acc = 0.0;
    for (const cplx& y : batch.observations) acc += std::norm(y);
    return acc / static_cast<double>(batch.size());
}

void check_batch(const SampleBatch& batch)
{
    if (batch.observations.empty()) throw InvalidArgument("sample batch is empty");
    if (batch.symbols && batch.symbols->size() != batch.observations.size())
        throw InvalidArgument("symbol and observation counts differ");
}

// Per-sample posterior moments and per-point occupancies: everything the
// M-step needs from the posteriors.
struct PosteriorStats {
    std::vector<cplx> mean_x;   // E_Q[X] per sample
    std::vector<double> var_x;  // E_Q[|X|^2] - |E_Q[X]|^2 per sample
    std::vector<double> energy; // E_Q[|X|^2] per sample
    std::vector<double> occupancy;

    PosteriorStats(std::size_t n, std::size_t M) : mean_x(n), var_x(n), energy(n), occupancy(M, 0.0) {}
};

// Accumulates row i from posterior weights w[k] / sum over points idx[k].
template <class Weight>
void accumulate_row(PosteriorStats& st, std::size_t i, const Constellation& c, std::span<const std::size_t> idx,
                    Weight&& weight)
{
    cplx mx{0.0, 0.0};
    double e = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double q = weight(k);
        if (q == 0.0) continue;
        const cplx x = c.point(idx[k]);
        st.occupancy[idx[k]] += q;
        mx += q * x;
        e += q * std::norm(x);
    }
    st.mean_x[i] = mx;
    st.energy[i] = e;
    st.var_x[i] = std::max(e - std::norm(mx), 0.0);
}

ChannelParams maximize(const SampleBatch& batch, const Constellation& c, const PosteriorStats& st,
                       DistributionMode mode, double prob_floor)
{
    const std::size_t n = batch.size();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (batch.observations[i] * std::conj(st.mean_x[i])).real();
        den += st.energy[i];
    }
    if (!(den > 0.0)) throw NumericError("gain update is degenerate: posterior energy is zero");
    const double delta = num / den;
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw NumericError("gain update produced a non-positive gain (" + std::to_string(delta) + ")");

    // sum_j q_ij |y_i - delta x_j|^2 = |y_i - delta E[X]|^2 + delta^2 Var[X]
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sse += std::norm(batch.observations[i] - delta * st.mean_x[i]) + delta * delta * st.var_x[i];
    const double sigma2 = positive_variance(sse / static_cast<double>(n));

    if (mode == DistributionMode::maxwell_boltzmann) {
        const double target = den / static_cast<double>(n);
        // nu is constrained to [0, inf); above the uniform energy the
        // constrained optimum is nu = 0.
        const double nu = target >= uniform_energy(c) ? 0.0 : fit_mb_nu(c, target);
        return {delta, sigma2, mb_distribution(c, nu)};
    }

    std::vector<double> p(c.size(), 0.0);
    for (std::size_t j : c.active_indices()) {
        p[j] = st.occupancy[j] / static_cast<double>(n);
        if (prob_floor > 0.0) p[j] = std::max(p[j], prob_floor);
    }
    // No clamp: tiny occupancies are part of the exact maximizer, and zeroing
    // them would send the objective to -inf.
    return {delta, sigma2, SymbolDistribution::from_weights_exact(p)};
}

// E-step fused with the moment accumulation; returns L(theta). Moments come
// from the axis marginals. Occupancies of product-form rows are collected as
// sum_i e_i e_q^T / s_i and weighted by the prior once at the end.
template <std::size_t S>
PASEM_HOT_INLINE double expectation_fixed(const SampleBatch& batch, const Constellation& c, const detail::MixtureKernel& kernel,
                         PosteriorStats& st)
{
    constexpr std::size_t G = S * S;
    double axis[S];
    double axis2[S];
    for (std::size_t a = 0; a < S; ++a) {
        axis[a] = c.axis()[a];
        axis2[a] = axis[a] * axis[a];
    }
    std::vector<double> outer(G, 0.0);
    std::vector<double> direct(G, 0.0);
    std::vector<double> grid(G);
    detail::MixtureKernel::AxisArray rows{}, cols{}, e_i{}, e_q{};
    double ll = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = kernel.marginals_fixed<S>(batch.observations[i], rows.data(), cols.data(), e_i.data(),
                                                   e_q.data(), grid.data());
        ll += row.log_sum;
        const double inv = 1.0 / row.sum;
        if (row.product_form) {
            for (std::size_t a = 0; a < S; ++a) e_i[a] *= inv;
            detail::add_outer<S>(outer.data(), e_i.data(), e_q.data());
        } else {
            for (std::size_t g = 0; g < G; ++g) direct[g] += grid[g] * inv;
        }
        double mr = 0.0, mi = 0.0, e = 0.0;
        for (std::size_t a = 0; a < S; ++a) {
            mr += axis[a] * rows[a];
            mi += axis[a] * cols[a];
            e += axis2[a] * (rows[a] + cols[a]);
        }
        const cplx mx{mr * inv, mi * inv};
        st.mean_x[i] = mx;
        st.energy[i] = e * inv;
        st.var_x[i] = std::max(st.energy[i] - std::norm(mx), 0.0);
    }
    for (std::size_t g = 0; g < G; ++g) st.occupancy[kernel.point_at(g)] = kernel.prior_at(g) * outer[g] + direct[g];
    return ll - static_cast<double>(batch.size()) * kernel.log_norm();
}

PASEM_VECTOR_CLONES
double expectation_with(const SampleBatch& batch, const Constellation& c, const detail::MixtureKernel& kernel,
                        PosteriorStats& st)
{
    switch (kernel.side()) {
    case 2: return expectation_fixed<2>(batch, c, kernel, st);
    case 4: return expectation_fixed<4>(batch, c, kernel, st);
    case 8: return expectation_fixed<8>(batch, c, kernel, st);
    case 16: return expectation_fixed<16>(batch, c, kernel, st);
    case 32: return expectation_fixed<32>(batch, c, kernel, st);
    default: throw InvalidArgument("unsupported constellation grid side");
    }
}

double expectation(const SampleBatch& batch, const Constellation& c, const ChannelParams& params,
                   PosteriorStats& st)
{
    const detail::MixtureKernel kernel(c, params);
    return expectation_with(batch, c, kernel, st);
}

} // namespace

void PosteriorMatrix::normalize_rows()
{
    for (std::size_t i = 0; i < rows_; ++i) {
        auto r = row(i);
        const double s = std::accumulate(r.begin(), r.end(), 0.0);
        if (s > 0.0)
            for (double& v : r) v /= s;
    }
}

double e_step_into(const SampleBatch& batch, const Constellation& c, const ChannelParams& params,
                   PosteriorMatrix& q)
{
    check_batch(batch);
    const detail::MixtureKernel kernel(c, params);
    const std::size_t n = batch.size();
    if (q.rows() != n || q.cols() != c.size()) q = PosteriorMatrix(n, c.size());

    std::vector<double> w(kernel.grid_size());
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = kernel.weights(batch.observations[i], w);
        ll += row.log_sum;
        auto qi = q.row(i);
        const double inv = 1.0 / row.sum;
        for (std::size_t g = 0; g < w.size(); ++g) qi[kernel.point_at(g)] = w[g] * inv;
    }
    return ll - static_cast<double>(n) * kernel.log_norm();
}

EStep e_step(const SampleBatch& batch, const Constellation& c, const ChannelParams& params)
{
    PosteriorMatrix q;
    const double ll = e_step_into(batch, c, params, q);
    return {std::move(q), ll};
}

double data_log_likelihood(const SampleBatch& batch, const Constellation& c, const ChannelParams& params)
{
    check_batch(batch);
    const detail::MixtureKernel kernel(c, params);
    detail::MixtureKernel::AxisArray rows{}, cols{}, e_i{}, e_q{};
    double ll = 0.0;
    for (const cplx& y : batch.observations)
        ll += kernel.marginals(y, rows.data(), cols.data(), e_i.data(), e_q.data(), nullptr).log_sum;
    return ll - static_cast<double>(batch.size()) * kernel.log_norm();
}

ChannelParams m_step(const SampleBatch& batch, const Constellation& c, const PosteriorMatrix& q,
                     DistributionMode mode, double prob_floor)
{
    check_batch(batch);
    const std::size_t n = batch.size();
    const std::size_t M = c.size();
    if (q.rows() != n || q.cols() != M) throw InvalidArgument("posterior matrix dimensions do not match");

    std::vector<std::size_t> all(M);
    std::iota(all.begin(), all.end(), std::size_t{0});
    PosteriorStats st(n, M);
    for (std::size_t i = 0; i < n; ++i) {
        const auto qi = q.row(i);
        accumulate_row(st, i, c, all, [&](std::size_t j) { return qi[j]; });
    }
    return maximize(batch, c, st, mode, prob_floor);
}

double m_step_objective(const SampleBatch& batch, const Constellation& c, const PosteriorMatrix& q,
                        const ChannelParams& params)
{
    const std::size_t n = batch.size();
    const double log_norm = std::log(std::numbers::pi * params.sigma2);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto qi = q.row(i);
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (qi[j] == 0.0) continue;
            const double p = params.dist[j];
            if (p == 0.0) return -std::numeric_limits<double>::infinity();
            const double d2 = std::norm(batch.observations[i] - params.delta * c.point(j));
            obj += qi[j] * (std::log(p) - log_norm - d2 / params.sigma2);
        }
    }
    return obj;
}

double fit_mb_nu(const Constellation& c, double target_energy)
{
    const double e_min = min_energy(c);
    const double e_uni = uniform_energy(c);
    if (!std::isfinite(target_energy)) throw InvalidArgument("target energy must be finite");
    if (target_energy > e_uni)
        throw OutOfRange("target energy " + std::to_string(target_energy) + " exceeds the uniform energy " +
                         std::to_string(e_uni) + " (upper bound, nu = 0)");
    if (target_energy <= e_min)
        throw OutOfRange("target energy " + std::to_string(target_energy) + " is not above the minimum point energy " +
                         std::to_string(e_min) + " (lower bound, nu -> inf)");
    if (target_energy == e_uni) return 0.0;

    const auto energy = [&](double nu) { return mean_energy(mb_distribution(c, nu), c); };

    // Energy decreases strictly in nu: expand until the bracket holds the target.
    double lo = 0.0;
    double hi = 1.0 / e_uni;
    while (energy(hi) > target_energy) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("fit_mb_nu: bracket expansion failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (energy(mid) > target_energy)
            lo = mid;
        else
            hi = mid;
    }
    const double e_lo = energy(lo);
    const double e_hi = energy(hi);
    return std::abs(e_lo - target_energy) <= std::abs(e_hi - target_energy) ? lo : hi;
}

void EmConfig::validate() const
{
    if (max_iters < 1) throw InvalidArgument("EM needs max_iters >= 1");
    if (!(ll_rel_tol > 0.0)) throw InvalidArgument("EM tolerance must be > 0");
    if (!(prob_floor >= 0.0) || prob_floor >= 1.0) throw InvalidArgument("probability floor must lie in [0, 1)");
}

EmResult em_fit(const SampleBatch& batch, const Constellation& c, const EmConfig& config)
{
    check_batch(batch);
    config.validate();

    ChannelParams params = std::holds_alternative<ChannelParams>(config.init)
                               ? std::get<ChannelParams>(config.init)
                               : kmeans_init(batch, c, std::get<KMeansInit>(config.init).k);
    params.validate(c);
    if (config.distribution_mode == DistributionMode::maxwell_boltzmann && !params.dist.nu()) {
        // Start inside the model family; from an arbitrary pmf the first
        // constrained M-step could lower L.
        const double e = mean_energy(params.dist, c);
        params.dist = mb_distribution(c, e >= uniform_energy(c) ? 0.0 : fit_mb_nu(c, e));
    }

    const double collapse_level = 1e-15 * mean_power(batch);
    EmResult result{params, {}, 0, false, false, std::nullopt, {}};
    PosteriorStats stats(batch.size(), c.size());
    for (std::size_t t = 1; t <= config.max_iters; ++t) {
        const double ll = expectation(batch, c, params, stats);
        result.log_likelihood_trace.push_back(ll);
        result.iterations_used = t;
        if (t >= 2) {
            const double prev = result.log_likelihood_trace[t - 2];
            const double rel = (ll - prev) / std::max(std::abs(prev), std::numeric_limits<double>::min());
            if (rel < config.ll_rel_tol) {
                result.converged = true;
                break;
            }
        }
        params = maximize(batch, c, stats, config.distribution_mode, config.prob_floor);
        result.params = params;
        if (params.sigma2 < collapse_level) {
            result.degenerate = true;
            result.diagnostic = "noise variance collapsed to " + std::to_string(params.sigma2) +
                                " (below 1e-15 of the mean observation power)";
            break;
        }
    }
    result.params = params;
    return result;
}

ChannelParams kmeans_init(const SampleBatch& batch, const Constellation& c, std::size_t k)
{
    check_batch(batch);
    if (k == 0) k = c.size();
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(k))));
    if (side * side != k || side % 2 != 0 || k > c.size())
        throw InvalidArgument("K-Means needs k = s^2 with s even and k <= " + std::to_string(c.size()) + ", got " +
                              std::to_string(k));
    const auto inner = inner_grid_indices(c, side);
    for (std::size_t j : inner)
        if (!c.is_active(j)) throw InvalidArgument("K-Means sub-grid includes points outside the active support");

    const std::size_t full = c.axis().size();
    const std::size_t lo = (full - side) / 2;
    const double half_span = static_cast<double>(full - 1);
    double e_inner = 0.0;
    for (std::size_t j : inner) e_inner += std::norm(c.point(j));
    e_inner /= static_cast<double>(inner.size());

    const double power = mean_power(batch);
    if (!(power > 0.0)) throw NumericError("K-Means: observations carry no power");
    double delta = std::sqrt(power / e_inner);

    // Nearest sub-grid level along one axis for the scaled coordinate v / delta.
    const auto nearest = [&](double v) {
        const double a = std::round((v / delta + half_span) / 2.0);
        const double clamped = std::clamp(a, static_cast<double>(lo), static_cast<double>(lo + side - 1));
        return static_cast<std::size_t>(clamped);
    };

    const std::size_t n = batch.size();
    const auto& axis = c.axis();
    std::vector<std::size_t> ai(n, 0), aq(n, 0);
    for (int it = 0; it < 100; ++it) {
        bool changed = it == 0;
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx y = batch.observations[i];
            const std::size_t li = nearest(y.real());
            const std::size_t lq = nearest(y.imag());
            changed = changed || li != ai[i] || lq != aq[i];
            ai[i] = li;
            aq[i] = lq;
            num += y.real() * axis[li] + y.imag() * axis[lq];
            den += axis[li] * axis[li] + axis[lq] * axis[lq];
        }
        if (!(num > 0.0)) throw NumericError("K-Means: gain fit is not positive");
        delta = num / den;
        if (!changed) break;
    }

    std::vector<double> counts(c.size(), 0.0);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = c.find({axis[ai[i]], axis[aq[i]]});
        counts[*j] += 1.0;
        sse += std::norm(batch.observations[i] - delta * c.point(*j));
    }
    // A perfectly clustered batch would give zero variance, which EM treats
    // as a collapse; keep the start just above that level.
    const double sigma2 = std::max(sse / static_cast<double>(n), 1e-12 * power);

    std::vector<double> p(c.size(), 0.0);
    for (std::size_t j : c.active_indices())
        p[j] = std::max(counts[j] / static_cast<double>(n), kKMeansProbFloor);
    return {delta, sigma2, SymbolDistribution::from_weights(p)};
}

MultiStartResult multi_init_em(const SampleBatch& batch, const Constellation& c, std::span<const std::size_t> ks,
                               const EmConfig& config)
{
    return multi_init_em(batch, c, ks, config,
                         batch.has_symbols() ? Selection::uncertainty : Selection::likelihood);
}

MultiStartResult multi_init_em(const SampleBatch& batch, const Constellation& c, std::span<const std::size_t> ks,
                               const EmConfig& config, Selection selection)
{
    if (ks.empty()) throw InvalidArgument("multi-start EM needs at least one k");
    if (selection == Selection::uncertainty && !batch.has_symbols())
        throw InvalidArgument("uncertainty-based selection requires transmitted symbols");

    std::vector<std::size_t> order(ks.begin(), ks.end());
    std::sort(order.begin(), order.end());

    std::optional<MultiStartResult> best;
    double best_score = 0.0;
    std::vector<BranchOutcome> outcomes;
    std::string errors;
    for (std::size_t k : order) {
        BranchOutcome outcome{k, std::nullopt, 0, {}, {}};
        try {
            EmConfig cfg = config;
            cfg.init = KMeansInit{k};
            EmResult r = em_fit(batch, c, cfg);
            outcome.iterations_used = r.iterations_used;
            outcome.log_likelihood_trace = r.log_likelihood_trace;
            if (r.degenerate) throw NumericError(r.diagnostic);
            std::optional<MetricReport> report;
            if (selection == Selection::uncertainty) report = evaluate(batch, c, r.params);
            const double score = report ? report->u_s : -data_log_likelihood(batch, c, r.params);
            outcome.score = score;
            if (!best || score < best_score) {
                r.chosen_k = k;
                best_score = score;
                best = MultiStartResult{std::move(r), k, selection, {}, std::move(report)};
            }
        } catch (const std::exception& e) {
            outcome.error = e.what();
            errors += " k=" + std::to_string(k) + ": " + e.what() + ";";
        }
        outcomes.push_back(outcome);
    }
    if (!best) throw NumericError("every multi-start branch failed:" + errors);
    best->branches = std::move(outcomes);
    return std::move(*best);
}

ChannelParams da_fit(const SampleBatch& batch, const Constellation& c)
{
    check_batch(batch);
    if (!batch.has_symbols()) throw InvalidArgument("data-aided estimation requires transmitted symbols");
    const auto& x = *batch.symbols;
    const std::size_t n = batch.size();

    double num = 0.0;
    double den = 0.0;
    std::vector<double> counts(c.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] >= c.size()) throw InvalidArgument("symbol index out of range");
        const cplx xi = c.point(x[i]);
        num += (batch.observations[i] * std::conj(xi)).real();
        den += std::norm(xi);
        counts[x[i]] += 1.0;
    }
    if (!(den > 0.0)) throw NumericError("data-aided gain is degenerate: symbols carry no energy");
    const double delta = num / den;
    if (!(delta > 0.0)) throw NumericError("data-aided gain is not positive");

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += std::norm(batch.observations[i] - delta * c.point(x[i]));
    return {delta, positive_variance(sse / static_cast<double>(n)), SymbolDistribution::from_weights(counts)};
}

} // namespace pasem
