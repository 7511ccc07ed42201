#pragma once

#include <cstddef>

namespace pasem::detail {

/// sum_i log(1 + exp(-s z_i)) over finite z.
double softplus_sum(const double* z, std::size_t n, double s);

} // namespace pasem::detail
