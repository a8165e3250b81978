#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "demoplan/core/errors.hpp"

namespace demoplan::segmentation {

/// Equal-width bin index of every sample over the series' own [min, max].
/// Returns nothing for a constant series.
inline std::optional<std::vector<int>> bin_indices(std::span<const double> values, int bins) {
    if (values.empty()) return std::nullopt;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return std::nullopt;
    std::vector<int> out(values.size());
    const double width = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto cell = static_cast<int>(std::floor((values[i] - lo) / width * bins));
        out[i] = std::clamp(cell, 0, bins - 1);
    }
    return out;
}

namespace detail {

inline double information_term(double joint, double n, double left, double right) {
    return joint / n * std::log2(joint * n / (left * right));
}

// Terms are summed in ascending order, so
// MI(x, y) and MI(y, x) agree bit for bit.
inline double ordered_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

struct JointHistogram {
    int bins = 0;
    int n = 0;
    std::vector<int> joint; // bins x bins, row = x
    std::vector<int> x_marginal;
    std::vector<int> y_marginal;
};

inline JointHistogram histogram(const std::vector<int>& bx, const std::vector<int>& by, int bins) {
    JointHistogram h;
    h.bins = bins;
    h.n = static_cast<int>(bx.size());
    h.joint.assign(static_cast<std::size_t>(bins * bins), 0);
    h.x_marginal.assign(static_cast<std::size_t>(bins), 0);
    h.y_marginal.assign(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < bx.size(); ++i) {
        ++h.joint[static_cast<std::size_t>(bx[i] * bins + by[i])];
        ++h.x_marginal[static_cast<std::size_t>(bx[i])];
        ++h.y_marginal[static_cast<std::size_t>(by[i])];
    }
    return h;
}

inline double plug_in(const JointHistogram& h) {
    std::vector<double> terms;
    const double n = h.n;
    for (int i = 0; i < h.bins; ++i)
        for (int j = 0; j < h.bins; ++j) {
            const int c = h.joint[static_cast<std::size_t>(i * h.bins + j)];
            if (c > 0) terms.push_back(information_term(c, n, h.x_marginal[i], h.y_marginal[j]));
        }
    return ordered_sum(terms);
}

/// Exact expectation of the plug-in estimate when the pairing of x and y
/// samples is a uniformly random permutation (fixed marginals).
inline double expected_plug_in(const JointHistogram& h) {
    const int n = h.n;
    std::vector<double> lf(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) lf[k] = std::lgamma(k + 1.0);
    double sum = 0.0;
    for (int i = 0; i < h.bins; ++i) {
        const int a = h.x_marginal[i];
        if (a == 0) continue;
        for (int j = 0; j < h.bins; ++j) {
            const int b = h.y_marginal[j];
            if (b == 0) continue;
            const double fixed = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
            for (int c = std::max(1, a + b - n); c <= std::min(a, b); ++c) {
                const double log_p = fixed - lf[c] - lf[a - c] - lf[b - c] - lf[n - a - b + c];
                sum += information_term(c, n, a, b) * std::exp(log_p);
            }
        }
    }
    return sum;
}

inline void require_pair(std::span<const double> x, std::span<const double> y, int bins) {
    if (x.size() != y.size())
        throw ValidationError("mutual information needs series of equal length (got " + std::to_string(x.size()) +
                              " and " + std::to_string(y.size()) + ")");
    if (x.size() < 2) throw ValidationError("mutual information needs at least 2 samples");
    if (bins < 2) throw ValidationError("mutual information needs at least 2 bins");
}

} // namespace detail

/// Plug-in mutual information in bits between two equally long series,
/// each discretized into `bins` equal-width cells over its own range.
inline double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
    detail::require_pair(x, y, bins);
    const auto bx = bin_indices(x, bins);
    const auto by = bin_indices(y, bins);
    if (!bx || !by) return 0.0;
    return std::max(0.0, detail::plug_in(detail::histogram(*bx, *by, bins)));
}

/// Shannon entropy in bits of the same equal-width discretization.
inline double entropy(std::span<const double> x, int bins) {
    if (x.size() < 2) throw ValidationError("entropy needs at least 2 samples");
    const auto bx = bin_indices(x, bins);
    if (!bx) return 0.0;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (int b : *bx) ++counts[static_cast<std::size_t>(b)];
    std::vector<double> terms;
    const double n = static_cast<double>(x.size());
    for (int c : counts)
        if (c > 0) terms.push_back(detail::information_term(c, n, c, c));
    return std::max(0.0, detail::ordered_sum(terms));
}

struct CorrectedInformation {
    double plug_in = 0.0;  ///< clamped at zero
    double expected = 0.0; ///< its expectation under independence
};

/// Plug-in estimate together with its expected value for independently
/// paired samples with the observed marginals.
inline CorrectedInformation mutual_information_with_baseline(std::span<const double> x, std::span<const double> y,
                                                              int bins) {
    detail::require_pair(x, y, bins);
    const auto bx = bin_indices(x, bins);
    const auto by = bin_indices(y, bins);
    if (!bx || !by) return {};
    const auto h = detail::histogram(*bx, *by, bins);
    return {std::max(0.0, detail::plug_in(h)), detail::expected_plug_in(h)};
}

} // namespace demoplan::segmentation
