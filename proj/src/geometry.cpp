#include "dynreg/geometry.hpp"

#include "dynreg/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace dynreg {

void PointCloud::validate() const {
    if (!normals.empty() && normals.size() != points.size()) {
        throw InvalidInputError("normals length " + std::to_string(normals.size()) +
                                " does not match point count " + std::to_string(points.size()));
    }
    if (features.rows() != 0 && static_cast<std::size_t>(features.rows()) != points.size()) {
        throw InvalidInputError("feature rows " + std::to_string(features.rows()) +
                                " do not match point count " + std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) {
            throw InvalidInputError("non-finite coordinate at point " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!normals[i].allFinite() || std::abs(normals[i].norm() - 1.0) > 1e-6) {
            throw InvalidInputError("normal " + std::to_string(i) + " is not unit length");
        }
    }
    if (features.size() > 0 && !features.allFinite()) {
        throw InvalidInputError("non-finite feature value");
    }
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    const bool with_normals = has_normals();
    const bool with_features = has_features();
    if (with_normals) out.normals.reserve(indices.size());
    if (with_features) out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        out.points.push_back(points[i]);
        if (with_normals) out.normals.push_back(normals[i]);
        if (with_features) out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

RigidTransform RigidTransform::from_matrix(const Mat4& m, double tolerance) {
    RigidTransform t;
    t.rotation = m.topLeftCorner<3, 3>();
    t.translation = m.topRightCorner<3, 1>();
    if (!m.allFinite() || !t.is_valid(tolerance)) {
        throw InvalidInputError("matrix is not a rigid transform");
    }
    const Eigen::RowVector4d last = m.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tolerance) {
        throw InvalidInputError("homogeneous row must be 0 0 0 1");
    }
    // Snap to SO(3) so downstream invariants hold at 1e-9.
    t.rotation = nearest_rotation(t.rotation);
    return t;
}

Mat4 RigidTransform::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

bool RigidTransform::is_valid(double tolerance) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tolerance) return false;
    return std::abs(rotation.determinant() - 1.0) <= tolerance;
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
    RigidTransform t;
    t.rotation = outer.rotation * inner.rotation;
    t.translation = outer.rotation * inner.translation + outer.translation;
    return t;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(transform.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const Vec3& n : cloud.normals) out.normals.push_back(transform.rotation * n);
    out.features = cloud.features;
    return out;
}

RigidTransform rotation_about(const Vec3& axis, double degrees, const Vec3& translation) {
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(degrees * M_PI / 180.0, axis.normalized()).toRotationMatrix();
    t.translation = translation;
    return t;
}

Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

double bounding_box_volume(std::span<const Vec3> points) {
    if (points.size() < 2) return 0.0;
    Vec3 lo = points.front();
    Vec3 hi = points.front();
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = hi - lo;
    return extent.x() * extent.y() * extent.z();
}

}  // namespace dynreg
