#include "dynreg/spatial_index.hpp"

#include <algorithm>
#include <numeric>

namespace dynreg {
namespace {

constexpr std::size_t kLeafSize = 8;

double box_distance2(const Eigen::AlignedBox3d& box, const Vec3& q) {
    return box.squaredExteriorDistance(q);
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, points_.size());
    }
}

int SpatialIndex::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    for (std::size_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;

    Eigen::Index axis = 0;
    box.sizes().maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                         const double va = points_[a][axis];
                         const double vb = points_[b][axis];
                         return va < vb || (va == vb && a < b);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void SpatialIndex::search_knn(int node_id, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[node_id];
    // Equal distances must still be visited so lower indices can displace the worst entry.
    if (heap.size() == k && box_distance2(node.box, q) > heap.front().distance2) return;
    if (node.left < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const double dl = box_distance2(nodes_[node.left].box, q);
    const double dr = box_distance2(nodes_[node.right].box, q);
    if (dl <= dr) {
        search_knn(node.left, q, k, heap);
        search_knn(node.right, q, k, heap);
    } else {
        search_knn(node.right, q, k, heap);
        search_knn(node.left, q, k, heap);
    }
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0 || points_.empty()) return heap;
    k = std::min(k, points_.size());
    heap.reserve(k);
    search_knn(0, query, k, heap);
    std::sort(heap.begin(), heap.end());
    return heap;
}

std::size_t SpatialIndex::nearest(const Vec3& query) const {
    return knn(query, 1).front().index;
}

void SpatialIndex::search_radius(int node_id, const Vec3& q, double r2, std::vector<Neighbor>& out) const {
    const Node& node = nodes_[node_id];
    if (box_distance2(node.box, q) > r2) return;
    if (node.left < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const double d2 = (points_[idx] - q).squaredNorm();
            if (d2 <= r2) out.push_back({idx, d2});
        }
        return;
    }
    search_radius(node.left, q, r2, out);
    search_radius(node.right, q, r2, out);
}

std::vector<Neighbor> SpatialIndex::radius_with_distances(const Vec3& query, double radius) const {
    std::vector<Neighbor> out;
    if (points_.empty() || radius < 0.0) return out;
    search_radius(0, query, radius * radius, out);
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    return out;
}

std::vector<std::size_t> SpatialIndex::radius(const Vec3& query, double radius) const {
    const auto found = radius_with_distances(query, radius);
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const Neighbor& n : found) out.push_back(n.index);
    return out;
}

}  // namespace dynreg
