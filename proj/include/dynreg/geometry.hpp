#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <vector>

namespace dynreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
/// One feature vector per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * @brief Ordered 3D points with optional unit normals and per-point features.
 *
 * `normals` is either empty or the same length as `points`; `features` has
 * either zero rows or one row per point. Coordinates are meters by convention.
 */
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    FeatureMatrix features;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !points.empty() && normals.size() == points.size(); }
    bool has_features() const {
        return !points.empty() && static_cast<std::size_t>(features.rows()) == points.size() &&
               features.cols() > 0;
    }
    Eigen::Index feature_width() const { return features.cols(); }

    /// Throws InvalidInputError if any invariant is broken.
    void validate() const;

    /// Copy of the listed points (with their normals and features).
    PointCloud select(std::span<const std::size_t> indices) const;
};

/// Rotation in SO(3) plus translation; maps p to rotation * p + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    /// Validates the rotation block; throws InvalidInputError when it is not in SO(3).
    static RigidTransform from_matrix(const Mat4& m, double tolerance = 1e-6);

    Mat4 matrix() const;
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;
    bool is_valid(double tolerance = 1e-9) const;
};

/// `outer` after `inner`: x -> outer(inner(x)).
RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

/// Rotation of `degrees` about `axis` (normalized internally).
RigidTransform rotation_about(const Vec3& axis, double degrees, const Vec3& translation = Vec3::Zero());

/// Project an arbitrary 3x3 matrix onto the closest rotation.
Mat3 nearest_rotation(const Mat3& m);

/// Axis-aligned bounding box volume; zero for fewer than two points.
double bounding_box_volume(std::span<const Vec3> points);

}  // namespace dynreg
