#pragma once

#include "dynreg/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dynreg {

struct Neighbor {
    std::size_t index;
    double distance2;  ///< squared Euclidean distance

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
    }
};

/**
 * @brief Static kd-tree over a point set.
 *
 * Results are exactly those of a brute-force scan using squared distances:
 * k-nearest results are ordered by (distance, index), radius results by index,
 * so ties always resolve to the lower index. Read-only after construction and
 * safe to share across threads.
 */
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(std::span<const Vec3> points);
    explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(std::span<const Vec3>(cloud.points)) {}

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// The k nearest points, sorted by (distance, index). Returns min(k, size()) entries.
    std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

    /// Index of the nearest point (lowest index on ties). Requires a non-empty index.
    std::size_t nearest(const Vec3& query) const;

    /// All i with |p_i - q| <= radius, ascending by index.
    std::vector<std::size_t> radius(const Vec3& query, double radius) const;

    /// Same set as radius(), with squared distances, ascending by index.
    std::vector<Neighbor> radius_with_distances(const Vec3& query, double radius) const;

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::size_t begin = 0;
        std::size_t end = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t begin, std::size_t end);
    void search_knn(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;
    void search_radius(int node, const Vec3& q, double r2, std::vector<Neighbor>& out) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace dynreg
