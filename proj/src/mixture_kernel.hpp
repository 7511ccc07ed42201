#pragma once

// Per-sample evaluation of the weighted mixture p_j exp(-|y - delta x_j|^2 / sigma2).
// Shared by the E-step and the LLR demapper.
//
// Weights live on the full square grid, g = level_i * side + level_q, with
// exact zeros at points outside the support. Since |y - delta x|^2 splits
// over I and Q, the weight of cell (a, b) is P[a][b] e_i[a] e_q[b] up to a
// common factor, and most consumers only need the axis marginals
//   rows[a] = e_i[a] (P e_q)[a],   cols[b] = e_q[b] (P^T e_i)[b].

#include "pasem/channel.hpp"
#include "pasem/constellation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <span>
#include <vector>

// Hot helpers are forced inline so callers built as AVX2 clones get AVX2
// code for them too.
#if defined(__GNUC__)
#define PASEM_HOT_INLINE inline __attribute__((always_inline))
#else
#define PASEM_HOT_INLINE inline
#endif

namespace pasem::detail {

inline constexpr double kUnderflowGuard = 1e-280;

class MixtureKernel {
public:
    static constexpr std::size_t kMaxSide = 32;
    using AxisArray = std::array<double, kMaxSide>;

    MixtureKernel(const Constellation& c, const ChannelParams& params);

    /// Points with nonzero prior on the active support, ascending index.
    const std::vector<std::size_t>& support() const { return support_; }

    std::size_t side() const { return side_; }
    std::size_t grid_size() const { return side_ * side_; }
    /// Constellation index of grid cell g.
    std::size_t point_at(std::size_t g) const { return grid_point_[g]; }
    /// Prior of grid cell g (0 off the support).
    double prior_at(std::size_t g) const { return p_[g]; }

    struct Row {
        double log_sum;    // log sum_j p_j exp(-|y - delta x_j|^2 / sigma2)
        double sum;        // sum of the (scaled) weights
        bool product_form; // weights equal P[a][b] e_i[a] e_q[b]
    };

    /// Axis marginals of the scaled weights. When the result is not in
    /// product form (the nearest points carry no mass and the separable
    /// weights underflow), grid receives the full weight grid instead of
    /// e_i / e_q; grid may be null when the caller only needs marginals.
    Row marginals(cplx y, double* rows, double* cols, double* e_i, double* e_q, double* grid) const;

    /// Fills w (grid_size() entries) with the scaled weights; w[g] / sum is
    /// the posterior of point_at(g).
    Row weights(cplx y, std::span<double> w) const;

    double log_norm() const { return log_norm_; } // log(pi sigma2)

    /// marginals() for a grid side known at compile time (S == side()).
    template <std::size_t S>
    Row marginals_fixed(cplx y, double* rows, double* cols, double* e_i, double* e_q, double* grid) const;

private:
    Row fallback(const double* di, const double* dq, double* rows, double* cols, double* grid) const;

    std::size_t side_;
    double delta_;
    double inv_delta_;
    double inv_sigma2_;
    double step_ratio_; // exp(-2 (delta * spacing)^2 / sigma2)
    double log_norm_;
    std::vector<double> axis_;
    std::vector<std::size_t> support_;
    std::vector<std::size_t> grid_point_;
    std::vector<double> p_;     // grid order
    std::vector<double> pt_;    // transposed
    std::vector<double> log_p_; // grid order, -inf off the support
};

/// acc[a][b] += u[a] v[b] for an S x S row-major acc.
template <std::size_t S>
PASEM_HOT_INLINE void add_outer(double* acc, const double* u, const double* v)
{
#if defined(__GNUC__)
    if constexpr (S % 2 == 0) {
        using v2d = double __attribute__((vector_size(16)));
        constexpr std::size_t V = S / 2;
        v2d vv[V];
        std::memcpy(vv, v, sizeof vv);
        for (std::size_t a = 0; a < S; ++a) {
            const double ua = u[a];
            for (std::size_t k = 0; k < V; ++k) {
                v2d x;
                std::memcpy(&x, acc + a * S + 2 * k, sizeof x);
                x += ua * vv[k];
                std::memcpy(acc + a * S + 2 * k, &x, sizeof x);
            }
        }
        return;
    }
#endif
    for (std::size_t a = 0; a < S; ++a)
        for (std::size_t b = 0; b < S; ++b) acc[a * S + b] += u[a] * v[b];
}

// e[a] = exp(-(d[a] - d[best]) / sigma2) for squared distances d to the
// levels of an equispaced axis, best being the nearest level. Walking away
// from it, the ratio e[a+1] / e[a] is multiplied by `step` at each level.
// The first ratios on either side multiply to `step` as well, which saves an
// exp() unless that product is too small to divide by.
PASEM_HOT_INLINE void axis_weights(const double* d, std::size_t side, std::size_t best, double inv_sigma2, double step,
                         double* e)
{
    e[best] = 1.0;
    double r_up = 1.0;
    if (best + 1 < side) {
        r_up = std::exp(-(d[best + 1] - d[best]) * inv_sigma2);
        double r = r_up;
        for (std::size_t a = best + 1; a < side; ++a) {
            e[a] = e[a - 1] * r;
            r *= step;
        }
    }
    if (best > 0) {
        double r = best + 1 < side && step > 1e-200 ? step / r_up : std::exp(-(d[best - 1] - d[best]) * inv_sigma2);
        for (std::size_t a = best; a-- > 0;) {
            e[a] = e[a + 1] * r;
            r *= step;
        }
    }
}

// pe = Pt^T u and pq = P^T v for S x S row-major Pt, P: row b of each matrix
// is scaled by u[b] (resp. v[b]) and accumulated. GCC and Clang get explicit
// two-lane vectors; their auto-vectorizer handles this pattern poorly.
template <std::size_t S>
PASEM_HOT_INLINE void dual_matvec(const double* pt, const double* p, const double* u, const double* v, double* pe, double* pq)
{
#if defined(__GNUC__)
    if constexpr (S % 2 == 0) {
        using v2d = double __attribute__((vector_size(16)));
        constexpr std::size_t V = S / 2;
        v2d acc_e[V] = {};
        v2d acc_q[V] = {};
        for (std::size_t b = 0; b < S; ++b) {
            const double ub = u[b];
            const double vb = v[b];
            for (std::size_t k = 0; k < V; ++k) {
                v2d x;
                v2d y;
                std::memcpy(&x, pt + b * S + 2 * k, sizeof x);
                std::memcpy(&y, p + b * S + 2 * k, sizeof y);
                acc_e[k] += x * ub;
                acc_q[k] += y * vb;
            }
        }
        std::memcpy(pe, acc_e, sizeof acc_e);
        std::memcpy(pq, acc_q, sizeof acc_q);
        return;
    }
#endif
    for (std::size_t a = 0; a < S; ++a) pe[a] = pq[a] = 0.0;
    for (std::size_t b = 0; b < S; ++b)
        for (std::size_t a = 0; a < S; ++a) {
            pe[a] += pt[b * S + a] * u[b];
            pq[a] += p[b * S + a] * v[b];
        }
}

// Nearest level of the odd-integer axis {-(S-1), ..., S-1} to v.
PASEM_HOT_INLINE std::size_t nearest_level(double v, std::size_t side)
{
    const double a = std::clamp((v + static_cast<double>(side - 1)) * 0.5, 0.0, static_cast<double>(side - 1));
    return static_cast<std::size_t>(a + 0.5);
}
template <std::size_t S>
PASEM_HOT_INLINE MixtureKernel::Row MixtureKernel::marginals_fixed(cplx y, double* rows, double* cols, double* e_i, double* e_q,
                                                  double* grid) const
{
    double di[S];
    double dq[S];
    for (std::size_t a = 0; a < S; ++a) {
        const double ri = y.real() - delta_ * axis_[a];
        const double rq = y.imag() - delta_ * axis_[a];
        di[a] = ri * ri;
        dq[a] = rq * rq;
    }
    const std::size_t bi = nearest_level(y.real() * inv_delta_, S);
    const std::size_t bq = nearest_level(y.imag() * inv_delta_, S);
    axis_weights(di, S, bi, inv_sigma2_, step_ratio_, e_i);
    axis_weights(dq, S, bq, inv_sigma2_, step_ratio_, e_q);
    const double min_i = di[bi];
    const double min_q = dq[bq];

    // (P e_q)[a] and (P^T e_i)[b], accumulated along contiguous rows.
    double pe[S];
    double pq[S];
    dual_matvec<S>(pt_.data(), p_.data(), e_q, e_i, pe, pq);
    double sum = 0.0;
    for (std::size_t a = 0; a < S; ++a) {
        rows[a] = e_i[a] * pe[a];
        cols[a] = e_q[a] * pq[a];
        sum += rows[a];
    }
    if (sum >= kUnderflowGuard) return {std::log(sum) - (min_i + min_q) * inv_sigma2_, sum, true};
    return fallback(di, dq, rows, cols, grid);
}

} // namespace pasem::detail
