#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "demoplan/core/errors.hpp"
#include "demoplan/core/transform.hpp"

namespace demoplan {

/// One recorded pose. The wire quaternion is kept next to the matrix so that a
/// recording survives save/load bit-identically.
class PoseSample {
public:
    PoseSample(std::int64_t frame, double time, const Vec3& position, const Quaternion& orientation)
        : frame_(frame), time_(time), orientation_(orientation),
          pose_(RigidTransform::from_quaternion(orientation, position)) {}

    PoseSample(std::int64_t frame, double time, const RigidTransform& pose)
        : frame_(frame), time_(time), orientation_(pose.quaternion()),
          pose_(RigidTransform::from_quaternion(orientation_, pose.translation())) {}

    std::int64_t frame() const noexcept { return frame_; }
    double time() const noexcept { return time_; }
    const Quaternion& orientation() const noexcept { return orientation_; }
    const RigidTransform& pose() const noexcept { return pose_; }
    const Vec3& position() const noexcept { return pose_.translation(); }

    friend bool operator==(const PoseSample& a, const PoseSample& b) {
        return a.frame_ == b.frame_ && a.time_ == b.time_ && a.orientation_.coeffs() == b.orientation_.coeffs() &&
               a.pose_ == b.pose_;
    }

private:
    std::int64_t frame_;
    double time_;
    Quaternion orientation_;
    RigidTransform pose_;
};

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::string entity_id, std::vector<PoseSample> samples)
        : entity_id_(std::move(entity_id)), samples_(std::move(samples)) {
        validate();
    }

    const std::string& entity_id() const noexcept { return entity_id_; }
    const std::vector<PoseSample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const PoseSample& operator[](std::size_t i) const { return samples_.at(i); }

    /// One coordinate (0 = x, 1 = y, 2 = z) of the position over [first, first + count).
    std::vector<double> axis(int coordinate, std::size_t first = 0, std::size_t count = SIZE_MAX) const {
        const std::size_t end = count == SIZE_MAX ? samples_.size() : std::min(samples_.size(), first + count);
        std::vector<double> out;
        out.reserve(end > first ? end - first : 0);
        for (std::size_t i = first; i < end; ++i) out.push_back(samples_[i].position()[coordinate]);
        return out;
    }

    /// Index of the sample with the given frame number.
    std::size_t index_of(std::int64_t frame) const {
        const auto it = std::lower_bound(samples_.begin(), samples_.end(), frame,
                                         [](const PoseSample& s, std::int64_t f) { return s.frame() < f; });
        if (it == samples_.end() || it->frame() != frame)
            throw ValidationError("trajectory '" + entity_id_ + "' has no frame " + std::to_string(frame));
        return static_cast<std::size_t>(it - samples_.begin());
    }

    bool same_frames(const Trajectory& other) const {
        return std::equal(samples_.begin(), samples_.end(), other.samples_.begin(), other.samples_.end(),
                          [](const PoseSample& a, const PoseSample& b) { return a.frame() == b.frame(); });
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    void validate() const {
        for (std::size_t i = 1; i < samples_.size(); ++i) {
            if (samples_[i].frame() <= samples_[i - 1].frame())
                throw ValidationError("trajectory '" + entity_id_ + "': frame indices not strictly increasing at frame " +
                                      std::to_string(samples_[i].frame()));
            if (samples_[i].time() < samples_[i - 1].time())
                throw ValidationError("trajectory '" + entity_id_ + "': timestamps decrease at frame " +
                                      std::to_string(samples_[i].frame()));
        }
    }

    std::string entity_id_;
    std::vector<PoseSample> samples_;
};

struct InteractionPoint {
    std::string label;
    Vec3 offset = Vec3::Zero(); ///< relative to the object's centroid frame

    friend bool operator==(const InteractionPoint&, const InteractionPoint&) = default;
};

class ObjectModel {
public:
    ObjectModel() = default;
    ObjectModel(std::string name, std::vector<InteractionPoint> points)
        : name_(std::move(name)), points_(std::move(points)) {
        if (points_.empty()) throw ValidationError("object model '" + name_ + "' has no interaction points");
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (std::size_t j = i + 1; j < points_.size(); ++j)
                if (points_[i].label == points_[j].label)
                    throw ValidationError("object model '" + name_ + "' repeats interaction point '" +
                                          points_[i].label + "'");
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<InteractionPoint>& interaction_points() const noexcept { return points_; }

    const InteractionPoint* find(const std::string& label) const {
        for (const auto& p : points_)
            if (p.label == label) return &p;
        return nullptr;
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto& p : points_) out.push_back(p.label);
        return out;
    }

    /// World position of an interaction point given the object's current world pose.
    Vec3 world_point(const InteractionPoint& ip, const RigidTransform& world_pose) const {
        return world_pose.rotation() * ip.offset + world_pose.translation();
    }

    friend bool operator==(const ObjectModel&, const ObjectModel&) = default;

private:
    std::string name_;
    std::vector<InteractionPoint> points_;
};

/// Hand and object trajectories of one recorded demonstration.
struct Demonstration {
    Trajectory hand;
    std::map<std::string, Trajectory> objects;
    std::map<std::string, ObjectModel> models;
    std::string manipulated;
    std::string background;

    const Trajectory& object(const std::string& name) const {
        const auto it = objects.find(name);
        if (it == objects.end()) throw SchemaError("demonstration has no trajectory for object '" + name + "'");
        return it->second;
    }
    const ObjectModel& model(const std::string& name) const {
        const auto it = models.find(name);
        if (it == models.end()) throw SchemaError("demonstration has no model for object '" + name + "'");
        return it->second;
    }
    const Trajectory& manipulated_trajectory() const { return object(manipulated); }
    const Trajectory& background_trajectory() const { return object(background); }

    void validate() const {
        if (manipulated.empty() || background.empty())
            throw SchemaError("demonstration must declare manipulated and background objects");
        if (manipulated == background) throw SchemaError("manipulated and background object must differ");
        for (const auto* name : {&manipulated, &background}) {
            object(*name);
            model(*name);
        }
        for (const auto& [name, traj] : objects)
            if (!traj.same_frames(hand))
                throw ValidationError("object '" + name + "' does not cover the same frames as the hand");
    }

    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

} // namespace demoplan
