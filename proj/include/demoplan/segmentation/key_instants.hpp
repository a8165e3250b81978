#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "demoplan/core/demonstration.hpp"
#include "demoplan/core/errors.hpp"
#include "demoplan/segmentation/mi_series.hpp"

namespace demoplan::segmentation {

/// Inclusive range of demonstration frames, with the matching range of series entries.
struct FrameInterval {
    std::int64_t first = 0;
    std::int64_t last = 0;
    std::size_t first_entry = 0;
    std::size_t last_entry = 0;

    bool contains(std::int64_t frame) const noexcept { return frame >= first && frame <= last; }
    friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

enum class InstantKind { approach, mi_minimum };

struct KeyInstant {
    std::int64_t frame = 0;
    InstantKind kind = InstantKind::mi_minimum;
    RigidTransform tp; ///< manipulated object in the background object's frame
};

/// Interactions are the maximal runs where the smoothed series exceeds
/// mi_zero_tol, at least w/2 entries long. Each run edge is then moved to
/// where the series crosses half of its level within one window of that edge.
inline std::vector<FrameInterval> detect_interaction(const MISeries& series, const WindowConfig& cfg) {
    const auto& s = series.smoothed;
    const auto n = s.size();
    const auto min_length = static_cast<std::size_t>(cfg.window_length / 2);
    const auto w = static_cast<std::size_t>(cfg.window_length);
    std::vector<FrameInterval> out;
    std::size_t i = 0;
    while (i < n) {
        if (!(s[i] > cfg.mi_zero_tol)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && s[j + 1] > cfg.mi_zero_tol) ++j;
        if (j - i + 1 >= min_length) {
            const double start_level = *std::max_element(s.begin() + i, s.begin() + std::min(j, i + w) + 1) / 2.0;
            const double end_level = *std::max_element(s.begin() + (j > i + w ? j - w : i), s.begin() + j + 1) / 2.0;
            std::size_t a = i;
            while (a < j && s[a] < start_level) ++a;
            std::size_t b = j;
            while (b > a && s[b] < end_level) --b;
            out.push_back({series.frames[a], series.frames[b], a, b});
        }
        i = j + 1;
    }
    return out;
}

namespace detail {

inline std::size_t entry_of(const MISeries& series, std::int64_t frame) {
    const auto it = std::lower_bound(series.frames.begin(), series.frames.end(), frame);
    if (it == series.frames.end() || *it != frame)
        throw ValidationError("frame " + std::to_string(frame) + " lies outside the MI series");
    return static_cast<std::size_t>(it - series.frames.begin());
}

/// Depth of the local minimum at `i` relative to the lower of the highest
/// points reached on either side before the series drops below s[i] again.
inline double prominence(const std::vector<double>& s, std::size_t i, std::size_t lo, std::size_t hi) {
    double left = s[i];
    for (std::size_t k = i; k > lo && s[k - 1] >= s[i]; --k) left = std::max(left, s[k - 1]);
    double right = s[i];
    for (std::size_t k = i; k < hi && s[k + 1] >= s[i]; ++k) right = std::max(right, s[k + 1]);
    return std::min(left, right) - s[i];
}

} // namespace detail

/// Relative pose of `om` in `obkg` at the given frame.
inline RigidTransform target_pose_at(const Trajectory& om, const Trajectory& obkg, std::int64_t frame) {
    return relative_pose(om[om.index_of(frame)].pose(), obkg[obkg.index_of(frame)].pose());
}

/// Local minima of the smoothed series strictly inside `interval` whose
/// prominence reaches max(min_prominence, prominence_fraction * series peak).
/// A flat-bottomed minimum is reported at its first frame.
inline std::vector<KeyInstant> detect_key_instants(const MISeries& series, const FrameInterval& interval,
                                                   const WindowConfig& cfg, const Trajectory& om,
                                                   const Trajectory& obkg) {
    const std::size_t lo = detail::entry_of(series, interval.first);
    const std::size_t hi = detail::entry_of(series, interval.last);
    if (hi < lo) throw ValidationError("interval ends before it starts");
    const auto& s = series.smoothed;
    const double gate = std::max(cfg.min_prominence, cfg.prominence_fraction * series.peak());
    std::vector<KeyInstant> out;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        if (!(s[i] < s[i - 1] && s[i] <= s[i + 1])) continue;
        if (detail::prominence(s, i, lo, hi) < gate) continue;
        const auto frame = series.frames[i];
        out.push_back({frame, InstantKind::mi_minimum, target_pose_at(om, obkg, frame)});
    }
    return out;
}

/// Mean centroid distance between the two objects over the window centred on
/// sample index `centre`, summed in sample order.
inline double windowed_mean_distance(const Trajectory& om, const Trajectory& obkg, std::size_t centre, int window_length) {
    const auto half = static_cast<std::size_t>(window_length / 2);
    double sum = 0.0;
    for (std::size_t k = centre - half; k <= centre + half; ++k) sum += (om[k].position() - obkg[k].position()).norm();
    return sum / static_cast<double>(window_length);
}

/// First window centre, at or after `search_from`, where the windowed mean
/// distance between the objects drops below d_th.
inline KeyInstant detect_approach_instant(const Trajectory& om, const Trajectory& obkg, const WindowConfig& cfg,
                                          double d_th, std::optional<std::int64_t> search_from = std::nullopt) {
    cfg.validate();
    if (!om.same_frames(obkg))
        throw ValidationError("trajectories '" + om.entity_id() + "' and '" + obkg.entity_id() + "' are not frame-aligned");
    const auto half = static_cast<std::size_t>(cfg.half());
    if (om.size() < static_cast<std::size_t>(cfg.window_length))
        throw ValidationError("trajectory is shorter than one window");
    std::size_t start = half;
    if (search_from) {
        const auto it = std::lower_bound(om.samples().begin(), om.samples().end(), *search_from,
                                         [](const PoseSample& s, std::int64_t f) { return s.frame() < f; });
        start = std::max(start, static_cast<std::size_t>(it - om.samples().begin()));
    }
    for (std::size_t c = start; c + half < om.size(); ++c) {
        if (windowed_mean_distance(om, obkg, c, cfg.window_length) < d_th) {
            const auto frame = om[c].frame();
            return {frame, InstantKind::approach, target_pose_at(om, obkg, frame)};
        }
    }
    throw Error("no approach detected: '" + om.entity_id() + "' never comes within " + std::to_string(d_th) +
                " m of '" + obkg.entity_id() + "' on average over a window");
}

} // namespace demoplan::segmentation
