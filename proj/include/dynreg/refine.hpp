#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/sampling.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dynreg {

struct ClusterConfig {
    double eps = 0.125;          ///< initial neighborhood radius (m)
    std::size_t min_pts = 3;     ///< initial density threshold, counting the point itself
    double eps_growth = 1.1;
    std::size_t min_pts_step = 1;
    /// Points below this weight are dropped before clustering; unset means the 25th percentile.
    std::optional<double> similarity_floor;
    /// Cluster on d(i,j) * 2 / (w_i + w_j + 1e-6) instead of plain Euclidean distance.
    bool weighted_distance = true;

    void validate() const;
};

constexpr int kNoise = -1;

struct ClusterResult {
    std::vector<int> labels;     ///< per input point; kNoise for noise and filtered points
    std::size_t cluster_count = 0;
    double final_eps = 0.0;
    std::size_t final_min_pts = 0;
    std::size_t rounds = 0;      ///< DBSCAN passes executed
    double applied_floor = 0.0;
};

/// Distance used by the clusterer between points i and j.
inline double weighted_distance(double euclidean, double wi, double wj) {
    return euclidean * 2.0 / (wi + wj + 1e-6);
}

/**
 * @brief One DBSCAN pass (RangeQuery / ExpandCluster), points visited in index order.
 *
 * Neighborhoods include the point itself. `weights` is ignored when
 * `weighted` is false.
 */
std::vector<int> dbscan(std::span<const Vec3> points, std::span<const double> weights, double eps,
                        std::size_t min_pts, bool weighted);

/**
 * @brief Adaptive density clustering of matched points.
 *
 * Re-runs DBSCAN with eps *= eps_growth and min_pts += min_pts_step while the
 * cluster count strictly increases, and returns the labeling of the round
 * with the largest count together with the parameters that produced it.
 */
ClusterResult adaptive_dbscan(std::span<const Vec3> points, std::span<const double> weights,
                              const ClusterConfig& config);

/// Mean of each cluster's members, ordered by label. Noise is ignored.
std::vector<Vec3> cluster_centroids(std::span<const Vec3> points, const ClusterResult& result);

/**
 * Indices of the `budget` candidates closest to any center (ties by index),
 * returned in ascending (distance, index) order. All candidates when the
 * budget covers the pool.
 */
std::vector<std::size_t> neighborhood_augmentation(std::span<const Vec3> candidates, std::span<const Vec3> centers,
                                                   std::size_t budget);

enum class NodeStrategy { dbscan, random, average_center };

std::string to_string(NodeStrategy s);
NodeStrategy node_strategy_from_string(const std::string& name);

struct RefineConfig {
    std::size_t node_budget = 0;     ///< N_r; 0 means "same as the global node count"
    std::size_t search_level = 2;    ///< pyramid level supplying augmentation candidates
    NodeStrategy strategy = NodeStrategy::dbscan;
    std::uint64_t seed = 0;          ///< random-node ablation only
};

struct RefinedNodes {
    PointCloud src_nodes;
    PointCloud tgt_nodes;
    std::vector<std::size_t> src_pool_indices;
    std::vector<std::size_t> tgt_pool_indices;
    ClusterResult src_clusters;
    ClusterResult tgt_clusters;
    std::vector<Vec3> src_centers;
    std::vector<Vec3> tgt_centers;
};

/**
 * @brief Next-iteration coarse nodes from the matched points of the last stage.
 *
 * Each side is clustered independently on its matched positions with the pair
 * weights; the N_r pool points nearest to the cluster centroids become the new
 * nodes, carrying the pool's features. Throws RefineFailure when either side
 * yields no cluster.
 */
RefinedNodes refined_nodes(std::span<const Vec3> matched_src, std::span<const Vec3> matched_tgt,
                           std::span<const double> weights, const PointCloud& src_pool, const PointCloud& tgt_pool,
                           const ClusterConfig& cluster, const RefineConfig& refine, std::size_t node_budget);

/// Pyramid form: pools are the search_level clouds.
RefinedNodes refined_nodes(std::span<const Vec3> matched_src, std::span<const Vec3> matched_tgt,
                           std::span<const double> weights, const SamplingPyramid& src_pyramid,
                           const SamplingPyramid& tgt_pyramid, const ClusterConfig& cluster,
                           const RefineConfig& refine, std::size_t node_budget);

}  // namespace dynreg
