// Acceptance run: one PASS/FAIL line per criterion, then a summary.
// Exit status is nonzero if any criterion fails.

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"
#include "pasem/estimation.hpp"
#include "pasem/metrics.hpp"
#include "pasem/random.hpp"
#include "pasem/shaping.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

using namespace pasem;

namespace {

constexpr std::size_t kSeeds = 20;
constexpr std::size_t kN = 20000;
const std::vector<std::size_t> kKs{4, 16, 36, 64};

int failures = 0;

void verdict(int id, bool ok, const std::string& detail)
{
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Criterion 4 and 9 bookkeeping, fed by every run below.
struct Audit {
    std::size_t traces = 0;
    std::size_t monotone_violations = 0;
    double worst_drop = 0.0; // in units of n
    std::size_t reports = 0;
    std::size_t identity_violations = 0;

    void trace(const std::vector<double>& ll, std::size_t n)
    {
        ++traces;
        for (std::size_t t = 1; t < ll.size(); ++t) {
            const double drop = (ll[t - 1] - ll[t]) / static_cast<double>(n);
            worst_drop = std::max(worst_drop, drop);
            if (drop > 1e-7) ++monotone_violations;
        }
    }
    void multi(const MultiStartResult& r, std::size_t n)
    {
        for (const auto& b : r.branches) trace(b.log_likelihood_trace, n);
    }
    void report(const MetricReport& r, int m)
    {
        ++reports;
        const bool ok = r.r_abc == 1.0 - r.u_s / m && r.r_a == std::max(0.0, r.h_x - r.u_s);
        if (!ok) ++identity_violations;
    }
};

Audit audit;

double quantile_nearest_rank(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::max<std::size_t>(rank, 1) - 1];
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------- 1, 2

struct CellSpec {
    const char* mode;
    std::array<double, 5> snr_db;
};

// Five points per preset spanning roughly R_abc 0.76 to 0.94.
const std::array<CellSpec, 3> kCells{{
    {"mode1", {12.0, 13.0, 14.0, 15.0, 16.0}},
    {"mode2", {10.5, 11.5, 12.5, 13.5, 14.5}},
    {"mode3", {9.0, 10.0, 11.0, 12.0, 13.0}},
}};

void agreement_and_speed(const Constellation& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    EmConfig cfg;
    std::vector<double> iters;
    double worst_gap = 0.0;
    std::string worst_cell;
    double rabc_lo = 1.0, rabc_hi = 0.0;
    bool all_ok = true;

    double slowest_grid = 0.0;
    for (const auto& spec : kCells) {
        const auto t_grid = std::chrono::steady_clock::now();
        const ShapingMode& mode = shaping_preset(spec.mode);
        for (double snr : spec.snr_db) {
            const ChannelParams truth = preset_params(mode, c, snr);
            double sum_da = 0.0, sum_em = 0.0, sum_abc = 0.0;
            std::vector<double> cell_iters;
            for (std::size_t s = 0; s < kSeeds; ++s) {
                const std::uint64_t seed = 1000 + s;
                const SampleBatch batch = simulate(c, truth, kN, seed);
                const MetricReport da = evaluate(batch, c, da_fit(batch, c));
                const MultiStartResult em = multi_init_em(batch, c, kKs, cfg);
                audit.report(da, c.bits());
                audit.report(*em.report, c.bits());
                audit.multi(em, kN);
                sum_da += da.r_a;
                sum_em += em.report->r_a;
                sum_abc += da.r_abc;
                cell_iters.push_back(static_cast<double>(em.result.iterations_used));
            }
            const double k = static_cast<double>(kSeeds);
            const double gap = std::abs(sum_em / k - sum_da / k);
            rabc_lo = std::min(rabc_lo, sum_abc / k);
            rabc_hi = std::max(rabc_hi, sum_abc / k);
            all_ok = all_ok && gap <= 0.01;
            if (gap >= worst_gap) {
                worst_gap = gap;
                worst_cell = fmt("%s@%.1fdB", spec.mode, snr);
            }
            std::printf("  cell %s %5.1f dB  R_abc(DA) %.3f  R_a DA %.4f EM %.4f  |gap| %.4f  iters median %.0f max %.0f\n",
                        spec.mode, snr, sum_abc / k, sum_da / k, sum_em / k, gap, median(cell_iters),
                        *std::max_element(cell_iters.begin(), cell_iters.end()));
            std::fflush(stdout);
            iters.insert(iters.end(), cell_iters.begin(), cell_iters.end());
        }
        slowest_grid = std::max(slowest_grid, seconds_since(t_grid));
    }
    // The time limit applies to one 5-point x 20-seed grid; three presets are run.
    const double runtime = seconds_since(t0);
    const std::size_t cells = kCells.size() * 5;
    verdict(1, all_ok && slowest_grid <= 300.0,
            fmt("%zu cells x %zu seeds, n=%zu, mean R_abc span [%.3f, %.3f], worst |mean gap| %.4f at %s (limit 0.01), "
                "slowest preset grid %.1f s (limit 300), all presets %.1f s",
                cells, kSeeds, kN, rabc_lo, rabc_hi, worst_gap, worst_cell.c_str(), slowest_grid, runtime));

    const double med = median(iters);
    const double p95 = quantile_nearest_rank(iters, 0.95);
    verdict(2, med < 30.0 && p95 <= 50.0,
            fmt("chosen-branch iterations over %zu runs: median %.1f (limit < 30), p95 %.0f (limit <= 50), max %.0f",
                iters.size(), med, p95, *std::max_element(iters.begin(), iters.end())));
}

// ---------------------------------------------------------------- 3

constexpr double kMode4Snr = 15.0;

void support_detection(const Constellation& c)
{
    const ShapingMode& mode = shaping_preset("mode4");
    const ChannelParams truth = preset_params(mode, c, kMode4Snr);
    const auto inner = inner_grid_indices(c, 6);
    std::vector<bool> active(c.size(), false);
    for (std::size_t j : inner) active[j] = true;

    EmConfig cfg;
    std::size_t hits = 0;
    double worst_leak = 0.0;
    std::string picks;
    for (std::size_t s = 0; s < kSeeds; ++s) {
        const SampleBatch batch = simulate(c, truth, kN, 2000 + s);
        const MultiStartResult r = multi_init_em(batch, c, kKs, cfg);
        audit.multi(r, kN);
        audit.report(*r.report, c.bits());
        double leak = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j)
            if (!active[j]) leak += r.result.params.dist[j];
        worst_leak = std::max(worst_leak, leak);
        if (r.chosen_k == 36 && leak <= 0.01) ++hits;
        picks += std::to_string(r.chosen_k) + (s + 1 < kSeeds ? "," : "");
    }
    verdict(3, hits >= 18,
            fmt("mode4 at %.1f dB: k=36 with inactive mass <= 0.01 in %zu/20 seeds (need 18), worst inactive mass %.2e, "
                "picks [%s]",
                kMode4Snr, hits, worst_leak, picks.c_str()));
}

// ---------------------------------------------------------------- 5

// sum_ij q_ij [log p_j - log(pi sigma2) - |y_i - delta x_j|^2 / sigma2], written out independently.
double toy_gain_noise_part(const SampleBatch& b, const Constellation& c, const PosteriorMatrix& q, double delta,
                           double sigma2)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double w = q(i, j);
            if (w == 0.0) continue;
            const cplx r = b.observations[i] - delta * c.point(j);
            acc += w * (-std::log(std::numbers::pi * sigma2) - std::norm(r) / sigma2);
        }
    return acc;
}

// Coarse-to-fine grid search: each round scans `pts` points per coordinate
// around the incumbent and shrinks the box by 5 (four old spacings survive).
template <std::size_t D>
double zoom_grid_max(const std::function<double(const std::array<double, D>&)>& f, std::array<double, D> center,
                     std::array<double, D> half, int rounds, int pts)
{
    double best = f(center);
    for (int r = 0; r < rounds; ++r) {
        std::array<double, D> incumbent = center;
        std::array<int, D> idx{};
        for (;;) {
            std::array<double, D> x;
            for (std::size_t d = 0; d < D; ++d)
                x[d] = center[d] - half[d] + 2.0 * half[d] * idx[d] / (pts - 1);
            const double v = f(x);
            if (v > best) {
                best = v;
                incumbent = x;
            }
            std::size_t d = 0;
            while (d < D && ++idx[d] == pts) idx[d++] = 0;
            if (d == D) break;
        }
        center = incumbent;
        for (auto& h : half) h /= 5.0;
    }
    return best;
}

void mstep_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    const Constellation c = Constellation::square_qam(2);
    Rng rng(77);
    double worst = 0.0;
    std::size_t bad = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 9.0); // 2..10
        const double d0 = 0.5 + 1.5 * rng.uniform();
        const double s0 = 0.05 + rng.uniform();
        std::vector<double> w(4);
        for (auto& v : w) v = 0.1 + rng.uniform();
        const ChannelParams gen{d0, s0, SymbolDistribution::from_weights(w)};
        SampleBatch batch = simulate(c, gen, n, 500 + inst);
        // Posteriors from a deliberately different model.
        for (auto& v : w) v = 0.1 + rng.uniform();
        const ChannelParams other{d0 * (0.7 + 0.6 * rng.uniform()), s0 * (0.5 + rng.uniform()),
                                  SymbolDistribution::from_weights(w)};
        const PosteriorMatrix q = e_step(batch, c, other).posterior;

        const ChannelParams est = m_step(batch, c, q, DistributionMode::general_pmf);
        std::array<double, 4> counts{};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 4; ++j) counts[j] += q(i, j);
        double attained = toy_gain_noise_part(batch, c, q, est.delta, est.sigma2);
        for (std::size_t j = 0; j < 4; ++j) attained += counts[j] * std::log(est.dist[j]);

        // Oracle: the objective separates into a (delta, sigma2) part and a pmf part.
        const double a = zoom_grid_max<2>(
            [&](const std::array<double, 2>& x) {
                if (x[1] <= 0.0) return -std::numeric_limits<double>::infinity();
                return toy_gain_noise_part(batch, c, q, x[0], x[1]);
            },
            {2.5, 2.5}, {2.5, 2.5}, 14, 41);
        // pmf part over softmax logits (last logit pinned to 0) so that
        // near-zero optima are reachable.
        const double b = zoom_grid_max<3>(
            [&](const std::array<double, 3>& t) {
                const double lse = std::log(std::exp(t[0]) + std::exp(t[1]) + std::exp(t[2]) + 1.0);
                return counts[0] * (t[0] - lse) + counts[1] * (t[1] - lse) + counts[2] * (t[2] - lse) -
                       counts[3] * lse;
            },
            {-15.0, -15.0, -15.0}, {30.0, 30.0, 30.0}, 14, 21);
        const double oracle = a + b;
        const double gap = std::abs(attained - oracle);
        const double lib = m_step_objective(batch, c, q, est);
        worst = std::max({worst, gap, std::abs(lib - attained)});
        if (gap > 1e-6 || std::abs(lib - attained) > 1e-9 * std::max(1.0, std::abs(attained))) ++bad;
    }
    const double runtime = seconds_since(t0);
    verdict(5, bad == 0 && runtime <= 60.0,
            fmt("100 toy 4-QAM instances (n 2..10): %zu outside 1e-6 of the grid oracle, worst gap %.2e, runtime %.1f s",
                bad, worst, runtime));
}

// ---------------------------------------------------------------- 6

void consistency(const Constellation& c)
{
    const ChannelParams truth{1.0, sigma2_for_snr(18.0, 1.0, mb_distribution(c, 0.05), c), mb_distribution(c, 0.05)};
    EmConfig cfg;
    cfg.distribution_mode = DistributionMode::maxwell_boltzmann;
    std::size_t ok_d = 0, ok_s = 0, ok_tv = 0;
    double wd = 0.0, ws = 0.0, wtv = 0.0, max_it = 0.0;
    for (std::size_t s = 0; s < kSeeds; ++s) {
        const SampleBatch batch = simulate(c, truth, kN, 3000 + s);
        const EmResult r = em_fit(batch, c, cfg);
        audit.trace(r.log_likelihood_trace, kN);
        const double ed = std::abs(r.params.delta - truth.delta) / truth.delta;
        const double es = std::abs(r.params.sigma2 - truth.sigma2) / truth.sigma2;
        double tv = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) tv += std::abs(r.params.dist[j] - truth.dist[j]);
        tv *= 0.5;
        ok_d += ed < 0.01;
        ok_s += es < 0.05;
        ok_tv += tv < 0.02;
        wd = std::max(wd, ed);
        ws = std::max(ws, es);
        wtv = std::max(wtv, tv);
        max_it = std::max(max_it, static_cast<double>(r.iterations_used));
    }
    verdict(6, ok_d >= 19 && ok_s >= 19 && ok_tv >= 19,
            fmt("MB-mode EM at 18 dB, nu=0.05: delta %zu/20 (worst %.2e), sigma2 %zu/20 (worst %.2e), TV %zu/20 "
                "(worst %.2e), max iterations %.0f",
                ok_d, wd, ok_s, ws, ok_tv, wtv, max_it));
}

// ---------------------------------------------------------------- 7

// Bit-metric GMI of Gray-labeled uniform 16-QAM: twice that of Gray 4-PAM
// with per-dimension noise variance sigma2 / 2, by trapezoidal quadrature.
double gmi_16qam_oracle(double sigma2)
{
    const std::array<double, 4> lv{-3.0, -1.0, 1.0, 3.0};
    const std::array<int, 4> label{0b00, 0b01, 0b11, 0b10};
    const double var = sigma2 / 2.0;
    const double sd = std::sqrt(var);
    double loss = 0.0; // sum over bits of E log2(1 + exp(-(1 - 2b) l))
    for (int a = 0; a < 4; ++a) {
        const int steps = 40000;
        const double lo = lv[a] - 12.0 * sd;
        const double h = 24.0 * sd / steps;
        double acc = 0.0;
        for (int k = 0; k <= steps; ++k) {
            const double y = lo + h * k;
            const double pdf = std::exp(-(y - lv[a]) * (y - lv[a]) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
            double f = 0.0;
            for (int bit = 0; bit < 2; ++bit) {
                double s0 = 0.0, s1 = 0.0;
                for (int x = 0; x < 4; ++x) {
                    const double e = std::exp(-(y - lv[x]) * (y - lv[x]) / (2.0 * var));
                    ((label[x] >> (1 - bit)) & 1 ? s1 : s0) += e;
                }
                const int tx = (label[a] >> (1 - bit)) & 1;
                f += std::log2((s0 + s1) / (tx ? s1 : s0));
            }
            acc += (k == 0 || k == steps ? 0.5 : 1.0) * pdf * f;
        }
        loss += 0.25 * acc * h;
    }
    return 2.0 * (2.0 - loss);
}

void gmi_oracle()
{
    const Constellation c = Constellation::square_qam(4);
    const auto uni = SymbolDistribution::uniform(c);
    const ChannelParams p{1.0, sigma2_for_snr(12.0, 1.0, uni, c), uni};
    const SampleBatch batch = simulate(c, p, 100000, 4242);
    const MetricReport r = evaluate(batch, c, p);
    audit.report(r, c.bits());
    const double oracle = gmi_16qam_oracle(p.sigma2);
    const double gap = std::abs(r.r_a - oracle);
    verdict(7, gap <= 0.02,
            fmt("16-QAM uniform 12 dB, n=1e5: R_a %.5f, quadrature GMI %.5f, |diff| %.5f (limit 0.02), s_opt %.4f",
                r.r_a, oracle, gap, r.s_opt));
}

// ---------------------------------------------------------------- 8

void matched_s(const Constellation& c)
{
    const ChannelParams truth = preset_params(shaping_preset("mode1"), c, 14.0);
    std::size_t hits = 0;
    double lo = 1e9, hi = -1e9;
    for (std::size_t s = 0; s < kSeeds; ++s) {
        const SampleBatch batch = simulate(c, truth, kN, 5000 + s);
        const MetricReport r = evaluate(batch, c, truth);
        audit.report(r, c.bits());
        hits += r.s_opt >= 0.95 && r.s_opt <= 1.05;
        lo = std::min(lo, r.s_opt);
        hi = std::max(hi, r.s_opt);
    }
    verdict(8, hits >= 18,
            fmt("mode1 14 dB true parameters: s_opt in [0.95, 1.05] for %zu/20 seeds (need 18), range [%.4f, %.4f]",
                hits, lo, hi));
}

// ---------------------------------------------------------------- 9

void identities(const Constellation& c)
{
    // u_s at s = 0 on a real frame, plus every report emitted above.
    const ChannelParams truth = preset_params(shaping_preset("mode2"), c, 12.0);
    const SampleBatch batch = simulate(c, truth, 5000, 6000);
    const LlrFrame llrs = compute_llrs(batch, c, truth);
    const BitFrame bits = label_bits(batch, c);
    const double u0 = bit_uncertainty(llrs, bits, 0.0).u_s;
    audit.report(evaluate(batch, c, truth), c.bits());
    verdict(9, u0 == static_cast<double>(c.bits()) && audit.identity_violations == 0,
            fmt("u_s(s=0) = %.17g (m = %d); rate identities violated in %zu of %zu reports", u0, c.bits(),
                audit.identity_violations, audit.reports));
}

} // namespace

int main()
{
    const auto t0 = std::chrono::steady_clock::now();
    const Constellation c64 = Constellation::square_qam(6);

    mstep_oracle();
    gmi_oracle();
    matched_s(c64);
    consistency(c64);
    support_detection(c64);
    agreement_and_speed(c64);
    verdict(4, audit.monotone_violations == 0,
            fmt("%zu EM traces, %zu steps decreasing by more than 1e-7 n, largest decrease %.2e n",
                audit.traces, audit.monotone_violations, audit.worst_drop));
    identities(c64);

    std::printf("acceptance: %d criteria failed, total %.1f s\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
