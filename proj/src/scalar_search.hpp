#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace pasem::detail {

struct ScalarMinimum {
    double x;
    double value;
};

/// Minimizes f over [0, hi]. A 17-point scan locates the bracket (hi doubles
/// from 4 up to 64 while the scan minimum sits on the upper edge), then
/// golden-section search narrows it to |x| tolerance 1e-5. Assumes f is
/// unimodal; the scan guards against poor brackets.
template <class F>
ScalarMinimum minimize_nonnegative(F&& f)
{
    constexpr std::size_t kScan = 17;
    constexpr double kXTol = 1e-5;

    double hi = 4.0;
    std::array<double, kScan> xs{};
    std::array<double, kScan> fs{};
    for (std::size_t k = 0; k < kScan; ++k) {
        xs[k] = hi * static_cast<double>(k) / static_cast<double>(kScan - 1);
        fs[k] = f(xs[k]);
    }
    std::size_t best = 0;
    for (;;) {
        best = 0;
        for (std::size_t k = 1; k < kScan; ++k)
            if (fs[k] < fs[best]) best = k;
        if (best != kScan - 1 || hi >= 64.0) break;
        // Doubling the range: the even old points become the lower half.
        const auto old_x = xs;
        const auto old_f = fs;
        hi *= 2.0;
        for (std::size_t k = 0; k < kScan; ++k) {
            if (2 * k < kScan) {
                xs[k] = old_x[2 * k];
                fs[k] = old_f[2 * k];
            } else {
                xs[k] = hi * static_cast<double>(k) / static_cast<double>(kScan - 1);
                fs[k] = f(xs[k]);
            }
        }
    }

    ScalarMinimum out{xs[best], fs[best]};
    double a = xs[best == 0 ? 0 : best - 1];
    double b = xs[best == kScan - 1 ? best : best + 1];

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > kXTol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if (fc < out.value) out = {c, fc};
    if (fd < out.value) out = {d, fd};
    return out;
}

} // namespace pasem::detail
