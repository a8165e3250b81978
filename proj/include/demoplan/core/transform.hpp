#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "demoplan/core/errors.hpp"

namespace demoplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quaternion = Eigen::Quaterniond;

inline constexpr double kRotationTolerance = 1e-9;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Frobenius norm of R^T R - I.
inline double orthonormality_error(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).norm();
}

/// Closest rotation to `r` in the Frobenius sense (polar factor).
inline Mat3 orthonormalize(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
    return u * v.transpose();
}

/// Rigid body pose: rotation followed by translation (meters).
class RigidTransform {
public:
    RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

    /// Rotations drifting up to 1e-6 from orthonormal are projected back; worse ones throw.
    RigidTransform(const Mat3& rotation, const Vec3& translation)
        : rotation_(rotation), translation_(translation) {
        if (!rotation_.allFinite() || !translation_.allFinite())
            throw ValidationError("rigid transform has non-finite entries");
        const double drift = orthonormality_error(rotation_);
        if (drift > 1e-6 || rotation_.determinant() <= 0.0)
            throw ValidationError("rotation is not a proper orthonormal matrix");
        if (drift > kRotationTolerance) rotation_ = orthonormalize(rotation_);
    }

    static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
    static RigidTransform from_quaternion(const Quaternion& q, const Vec3& t) {
        return {q.normalized().toRotationMatrix(), t};
    }
    static RigidTransform rotation_x(double rad) { return {Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix(), Vec3::Zero()}; }
    static RigidTransform rotation_y(double rad) { return {Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix(), Vec3::Zero()}; }
    static RigidTransform rotation_z(double rad) { return {Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()}; }

    const Mat3& rotation() const noexcept { return rotation_; }
    const Vec3& translation() const noexcept { return translation_; }

    RigidTransform inverse() const {
        const Mat3 rt = rotation_.transpose();
        return {rt, -(rt * translation_)};
    }

    /// Unit quaternion with w >= 0.
    Quaternion quaternion() const {
        Quaternion q(rotation_);
        q.normalize();
        if (q.w() < 0.0) q.coeffs() = -q.coeffs();
        return q;
    }

    Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = rotation_;
        m.topRightCorner<3, 1>() = translation_;
        return m;
    }

    RigidTransform with_translation(const Vec3& t) const { return {rotation_, t}; }

    friend bool operator==(const RigidTransform& a, const RigidTransform& b) {
        return a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
    }

private:
    Mat3 rotation_;
    Vec3 translation_;
};

/// a ∘ b: applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    Mat3 r = a.rotation() * b.rotation();
    if (orthonormality_error(r) > kRotationTolerance) r = orthonormalize(r);
    return {r, a.rotation() * b.translation() + a.translation()};
}

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) { return compose(a, b); }

/// Pose of the manipulated object expressed in the background object's frame.
inline RigidTransform relative_pose(const RigidTransform& world_om, const RigidTransform& world_obkg) {
    return compose(world_obkg.inverse(), world_om);
}

/// Frobenius norm of the 4x4 difference from identity.
inline double deviation_from_identity(const RigidTransform& t) {
    return (t.matrix() - Mat4::Identity()).norm();
}

inline bool approx_equal(const RigidTransform& a, const RigidTransform& b, double tol) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= tol;
}

} // namespace demoplan
