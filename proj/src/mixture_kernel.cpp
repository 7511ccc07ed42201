#include "mixture_kernel.hpp"

#include "pasem/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pasem::detail {

MixtureKernel::MixtureKernel(const Constellation& c, const ChannelParams& params)
    : side_(c.axis().size()),
      delta_(params.delta),
      inv_delta_(1.0 / params.delta),
      inv_sigma2_(1.0 / params.sigma2),
      log_norm_(std::log(std::numbers::pi * params.sigma2)),
      axis_(c.axis())
{
    params.validate(c);
    if (side_ > kMaxSide) throw InvalidArgument("constellation grid too large");
    const double spacing = side_ > 1 ? delta_ * (axis_[1] - axis_[0]) : 0.0;
    step_ratio_ = std::exp(-2.0 * spacing * spacing * inv_sigma2_);

    const std::size_t G = side_ * side_;
    grid_point_.resize(G);
    p_.assign(G, 0.0);
    pt_.assign(G, 0.0);
    log_p_.assign(G, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < c.size(); ++j) grid_point_[c.level_i(j) * side_ + c.level_q(j)] = j;
    for (std::size_t j : c.active_indices()) {
        const double p = params.dist[j];
        if (p > 0.0) {
            const std::size_t a = c.level_i(j);
            const std::size_t b = c.level_q(j);
            support_.push_back(j);
            p_[a * side_ + b] = p;
            pt_[b * side_ + a] = p;
            log_p_[a * side_ + b] = std::log(p);
        }
    }
    if (support_.empty()) throw InvalidArgument("symbol distribution has no mass on the active points");
}

MixtureKernel::Row MixtureKernel::fallback(const double* di, const double* dq, double* rows, double* cols,
                                           double* grid) const
{
    const std::size_t side = side_;
    const std::size_t G = side * side;
    std::vector<double> local;
    if (!grid) {
        local.resize(G);
        grid = local.data();
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < G; ++g) {
        grid[g] = log_p_[g] - (di[g / side] + dq[g % side]) * inv_sigma2_;
        mx = std::max(mx, grid[g]);
    }
    double sum = 0.0;
    std::fill(rows, rows + side, 0.0);
    std::fill(cols, cols + side, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
        grid[g] = std::exp(grid[g] - mx);
        rows[g / side] += grid[g];
        cols[g % side] += grid[g];
        sum += grid[g];
    }
    return {mx + std::log(sum), sum, false};
}

MixtureKernel::Row MixtureKernel::marginals(cplx y, double* rows, double* cols, double* e_i, double* e_q,
                                            double* grid) const
{
    switch (side_) {
    case 2: return marginals_fixed<2>(y, rows, cols, e_i, e_q, grid);
    case 4: return marginals_fixed<4>(y, rows, cols, e_i, e_q, grid);
    case 8: return marginals_fixed<8>(y, rows, cols, e_i, e_q, grid);
    case 16: return marginals_fixed<16>(y, rows, cols, e_i, e_q, grid);
    case 32: return marginals_fixed<32>(y, rows, cols, e_i, e_q, grid);
    default: throw InvalidArgument("unsupported constellation grid side " + std::to_string(side_));
    }
}

MixtureKernel::Row MixtureKernel::weights(cplx y, std::span<double> w) const
{
    AxisArray rows{}, cols{}, e_i{}, e_q{};
    const Row r = marginals(y, rows.data(), cols.data(), e_i.data(), e_q.data(), w.data());
    if (r.product_form)
        for (std::size_t a = 0; a < side_; ++a)
            for (std::size_t b = 0; b < side_; ++b) w[a * side_ + b] = p_[a * side_ + b] * e_i[a] * e_q[b];
    return r;
}

} // namespace pasem::detail
