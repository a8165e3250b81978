#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "demoplan/core/demonstration.hpp"
#include "demoplan/core/errors.hpp"
#include "demoplan/segmentation/mutual_information.hpp"

namespace demoplan::segmentation {

struct WindowConfig {
    int window_length = 31;         ///< frames, odd
    int bins = 8;                   ///< per axis
    double mi_zero_tol = 0.5;       ///< bits, on the chance-corrected smoothed series
    int smoothing_halfwidth = 5;    ///< frames
    double min_prominence = 0.0;    ///< bits; the effective gate is max(this, prominence_fraction * series max)
    double prominence_fraction = 0.1;

    int half() const noexcept { return window_length / 2; }

    void validate() const {
        if (window_length < 5 || window_length % 2 == 0)
            throw ValidationError("window length must be odd and at least 5, got " + std::to_string(window_length));
        if (bins < 2) throw ValidationError("bins must be at least 2");
        if (!(mi_zero_tol > 0.0)) throw ValidationError("mi_zero_tol must be positive");
        if (smoothing_halfwidth < 0) throw ValidationError("smoothing halfwidth must be non-negative");
        if (min_prominence < 0.0 || prominence_fraction < 0.0 || (min_prominence == 0.0 && prominence_fraction == 0.0))
            throw ValidationError("minimum prominence must be positive");
    }
};

/// Windowed hand/object mutual information. Entry j belongs to the window
/// centred on sample index j + w/2 of the underlying trajectories.
struct MISeries {
    WindowConfig config;
    std::vector<std::int64_t> frames; ///< centre frame of each window
    std::vector<double> raw;          ///< sum over x, y, z of the plug-in estimate
    std::vector<double> corrected;    ///< max(0, sum over axes of plug-in minus its independence baseline)
    std::vector<double> smoothed;     ///< moving average of `corrected`

    std::size_t size() const noexcept { return raw.size(); }
    std::size_t first_sample() const noexcept { return static_cast<std::size_t>(config.half()); }
    double peak() const { return smoothed.empty() ? 0.0 : *std::max_element(smoothed.begin(), smoothed.end()); }
};

/// Centred moving average, truncated at the ends.
inline std::vector<double> moving_average(std::span<const double> values, int halfwidth) {
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    std::vector<double> out(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, i - halfwidth);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, i + halfwidth);
        double sum = 0.0;
        for (auto k = lo; k <= hi; ++k) sum += values[k];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

inline MISeries mi_series(const Trajectory& hand, const Trajectory& object, const WindowConfig& cfg) {
    cfg.validate();
    if (!hand.same_frames(object))
        throw ValidationError("trajectories '" + hand.entity_id() + "' and '" + object.entity_id() +
                              "' are not frame-aligned");
    const auto w = static_cast<std::size_t>(cfg.window_length);
    if (hand.size() < w)
        throw ValidationError("trajectory has " + std::to_string(hand.size()) + " samples; at least " +
                              std::to_string(w) + " (one window) are required");

    std::vector<double> hx[3], ox[3];
    for (int axis = 0; axis < 3; ++axis) {
        hx[axis] = hand.axis(axis);
        ox[axis] = object.axis(axis);
    }

    MISeries out;
    out.config = cfg;
    const std::size_t count = hand.size() - w + 1;
    out.frames.resize(count);
    out.raw.resize(count);
    out.corrected.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        out.frames[j] = hand[j + w / 2].frame();
        double raw = 0.0;
        double excess = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            const std::span<const double> hs(hx[axis].data() + j, w);
            const std::span<const double> os(ox[axis].data() + j, w);
            const auto info = mutual_information_with_baseline(hs, os, cfg.bins);
            raw += info.plug_in;
            excess += info.plug_in - info.expected;
        }
        out.raw[j] = raw;
        out.corrected[j] = std::max(0.0, excess);
    }
    out.smoothed = moving_average(out.corrected, cfg.smoothing_halfwidth);
    return out;
}

} // namespace demoplan::segmentation
