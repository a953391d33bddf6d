#include "dynreg/refine.hpp"

#include "dynreg/errors.hpp"
#include "dynreg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

namespace dynreg {
namespace {

/// Linear-interpolated percentile (q in [0, 1]) of a non-empty sample.
double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

class RangeQuery {
public:
    RangeQuery(std::span<const Vec3> points, std::span<const double> weights, bool weighted)
        : points_(points), weights_(weights), weighted_(weighted), index_(points) {
        for (double w : weights) max_weight_ = std::max(max_weight_, w);
    }

    /// Neighbors of point i (including i) at clustering radius eps, ascending by index.
    std::vector<std::size_t> operator()(std::size_t i, double eps) const {
        if (!weighted_) return index_.radius(points_[i], eps);
        // Any j with d'(i, j) <= eps lies within this Euclidean radius.
        const double reach = eps * (weights_[i] + max_weight_ + 1e-6) / 2.0 * (1.0 + 1e-9);
        std::vector<std::size_t> out;
        for (const Neighbor& nb : index_.radius_with_distances(points_[i], reach)) {
            const double d = std::sqrt(nb.distance2);
            if (weighted_distance(d, weights_[i], weights_[nb.index]) <= eps) out.push_back(nb.index);
        }
        return out;
    }

private:
    std::span<const Vec3> points_;
    std::span<const double> weights_;
    bool weighted_;
    SpatialIndex index_;
    double max_weight_ = 0.0;
};

constexpr int kUnvisited = -2;

std::vector<int> run_dbscan(const RangeQuery& query, std::size_t n, double eps, std::size_t min_pts) {
    std::vector<int> labels(n, kUnvisited);
    int cluster = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (labels[p] != kUnvisited) continue;
        const std::vector<std::size_t> seeds = query(p, eps);
        if (seeds.size() < min_pts) {
            labels[p] = kNoise;
            continue;
        }
        labels[p] = cluster;
        std::deque<std::size_t> frontier(seeds.begin(), seeds.end());
        while (!frontier.empty()) {
            const std::size_t q = frontier.front();
            frontier.pop_front();
            if (labels[q] == kNoise) labels[q] = cluster;  // border point
            if (labels[q] != kUnvisited) continue;
            labels[q] = cluster;
            const std::vector<std::size_t> reach = query(q, eps);
            if (reach.size() >= min_pts) frontier.insert(frontier.end(), reach.begin(), reach.end());
        }
        ++cluster;
    }
    return labels;
}

std::size_t count_clusters(const std::vector<int>& labels) {
    int top = -1;
    for (int l : labels) top = std::max(top, l);
    return static_cast<std::size_t>(top + 1);
}

std::vector<Vec3> matched_centers(std::span<const Vec3> points, std::span<const double> weights,
                                  const ClusterConfig& cluster, ClusterResult& out) {
    out = adaptive_dbscan(points, weights, cluster);
    return cluster_centroids(points, out);
}

}  // namespace

void ClusterConfig::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigurationError("cluster eps must be positive");
    if (min_pts < 2) throw ConfigurationError("cluster min_pts must be at least 2");
    if (!(eps_growth > 1.0)) throw ConfigurationError("cluster eps growth must exceed 1");
    if (similarity_floor && !(*similarity_floor >= 0.0 && *similarity_floor < 1.0)) {
        throw ConfigurationError("similarity floor must lie in [0, 1)");
    }
}

std::vector<int> dbscan(std::span<const Vec3> points, std::span<const double> weights, double eps,
                        std::size_t min_pts, bool weighted) {
    if (weighted && weights.size() != points.size()) throw InvalidInputError("dbscan weights length mismatch");
    const RangeQuery query(points, weights, weighted);
    return run_dbscan(query, points.size(), eps, min_pts);
}

ClusterResult adaptive_dbscan(std::span<const Vec3> points, std::span<const double> weights,
                              const ClusterConfig& config) {
    config.validate();
    if (points.size() != weights.size()) throw InvalidInputError("cluster points and weights differ in length");
    for (double w : weights) {
        if (!std::isfinite(w)) throw InvalidInputError("cluster weights must be finite");
    }

    ClusterResult result;
    result.labels.assign(points.size(), kNoise);
    result.final_eps = config.eps;
    result.final_min_pts = config.min_pts;
    if (points.empty()) return result;

    result.applied_floor = config.similarity_floor
                               ? *config.similarity_floor
                               : percentile(std::vector<double>(weights.begin(), weights.end()), 0.25);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (weights[i] >= result.applied_floor) kept.push_back(i);
    }
    if (kept.empty()) return result;

    std::vector<Vec3> sub_points;
    std::vector<double> sub_weights;
    sub_points.reserve(kept.size());
    sub_weights.reserve(kept.size());
    for (std::size_t i : kept) {
        sub_points.push_back(points[i]);
        sub_weights.push_back(weights[i]);
    }
    // The distances do not change between rounds; only eps and min_pts do.
    const RangeQuery query(sub_points, sub_weights, config.weighted_distance);

    double eps = config.eps;
    std::size_t min_pts = config.min_pts;
    std::vector<int> best_labels;
    std::size_t best_count = 0;
    double best_eps = eps;
    std::size_t best_min_pts = min_pts;
    std::size_t rounds = 0;
    while (true) {
        std::vector<int> labels = run_dbscan(query, kept.size(), eps, min_pts);
        ++rounds;
        const std::size_t m = count_clusters(labels);
        if (rounds == 1 || m > best_count) {
            const bool improved = m > best_count;
            best_labels = std::move(labels);
            best_count = m;
            best_eps = eps;
            best_min_pts = min_pts;
            if (!improved) break;
            eps *= config.eps_growth;
            min_pts += config.min_pts_step;
            continue;
        }
        break;
    }

    for (std::size_t s = 0; s < kept.size(); ++s) result.labels[kept[s]] = best_labels[s];
    result.cluster_count = best_count;
    result.final_eps = best_eps;
    result.final_min_pts = best_min_pts;
    result.rounds = rounds;
    return result;
}

std::vector<Vec3> cluster_centroids(std::span<const Vec3> points, const ClusterResult& result) {
    if (points.size() != result.labels.size()) throw InvalidInputError("labels do not match the point count");
    std::vector<Vec3> sums(result.cluster_count, Vec3::Zero());
    std::vector<std::size_t> counts(result.cluster_count, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int l = result.labels[i];
        if (l < 0) continue;
        sums[static_cast<std::size_t>(l)] += points[i];
        ++counts[static_cast<std::size_t>(l)];
    }
    std::vector<Vec3> out;
    out.reserve(sums.size());
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (counts[c] > 0) out.push_back(sums[c] / static_cast<double>(counts[c]));
    }
    return out;
}

std::vector<std::size_t> neighborhood_augmentation(std::span<const Vec3> candidates, std::span<const Vec3> centers,
                                                   std::size_t budget) {
    if (candidates.empty()) throw InvalidInputError("augmentation needs a non-empty candidate pool");
    if (centers.empty()) throw InvalidInputError("augmentation needs at least one center");
    if (budget < 1) throw ConfigurationError("augmentation budget must be at least 1");

    const SpatialIndex index(centers);
    std::vector<Neighbor> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        scored.push_back({i, index.knn(candidates[i], 1).front().distance2});
    }
    const std::size_t keep = std::min(budget, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end());
    std::vector<std::size_t> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(scored[i].index);
    return out;
}

std::string to_string(NodeStrategy s) {
    switch (s) {
        case NodeStrategy::dbscan: return "dbscan";
        case NodeStrategy::random: return "random";
        case NodeStrategy::average_center: return "average-center";
    }
    return "dbscan";
}

NodeStrategy node_strategy_from_string(const std::string& name) {
    if (name == "dbscan") return NodeStrategy::dbscan;
    if (name == "random") return NodeStrategy::random;
    if (name == "average-center" || name == "average_center") return NodeStrategy::average_center;
    throw ConfigurationError("unknown node strategy '" + name + "'");
}

RefinedNodes refined_nodes(std::span<const Vec3> matched_src, std::span<const Vec3> matched_tgt,
                           std::span<const double> weights, const PointCloud& src_pool, const PointCloud& tgt_pool,
                           const ClusterConfig& cluster, const RefineConfig& refine, std::size_t node_budget) {
    if (matched_src.size() != weights.size() || matched_tgt.size() != weights.size()) {
        throw InvalidInputError("matched points and weights differ in length");
    }
    if (src_pool.empty() || tgt_pool.empty()) throw RefineFailure("refine candidate pool is empty");
    const std::size_t budget = refine.node_budget > 0 ? refine.node_budget : node_budget;
    if (budget < 1) throw ConfigurationError("refined node budget must be at least 1");

    RefinedNodes out;
    switch (refine.strategy) {
        case NodeStrategy::dbscan: {
            out.src_centers = matched_centers(matched_src, weights, cluster, out.src_clusters);
            out.tgt_centers = matched_centers(matched_tgt, weights, cluster, out.tgt_clusters);
            if (out.src_centers.empty() || out.tgt_centers.empty()) {
                throw RefineFailure("clustering of matched points produced no cluster");
            }
            out.src_pool_indices = neighborhood_augmentation(src_pool.points, out.src_centers, budget);
            out.tgt_pool_indices = neighborhood_augmentation(tgt_pool.points, out.tgt_centers, budget);
            break;
        }
        case NodeStrategy::average_center: {
            if (matched_src.empty()) throw RefineFailure("no matched points to average");
            Vec3 src_mean = Vec3::Zero();
            Vec3 tgt_mean = Vec3::Zero();
            for (std::size_t i = 0; i < matched_src.size(); ++i) {
                src_mean += matched_src[i];
                tgt_mean += matched_tgt[i];
            }
            out.src_centers = {src_mean / static_cast<double>(matched_src.size())};
            out.tgt_centers = {tgt_mean / static_cast<double>(matched_tgt.size())};
            out.src_pool_indices = neighborhood_augmentation(src_pool.points, out.src_centers, budget);
            out.tgt_pool_indices = neighborhood_augmentation(tgt_pool.points, out.tgt_centers, budget);
            break;
        }
        case NodeStrategy::random: {
            std::mt19937_64 rng(refine.seed);
            auto pick = [&](std::size_t n) {
                std::vector<std::size_t> idx(n);
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                const std::size_t keep = std::min(budget, n);
                for (std::size_t i = 0; i < keep; ++i) {
                    std::uniform_int_distribution<std::size_t> dist(i, n - 1);
                    std::swap(idx[i], idx[dist(rng)]);
                }
                idx.resize(keep);
                return idx;
            };
            out.src_pool_indices = pick(src_pool.size());
            out.tgt_pool_indices = pick(tgt_pool.size());
            break;
        }
    }
    std::sort(out.src_pool_indices.begin(), out.src_pool_indices.end());
    std::sort(out.tgt_pool_indices.begin(), out.tgt_pool_indices.end());
    out.src_nodes = src_pool.select(out.src_pool_indices);
    out.tgt_nodes = tgt_pool.select(out.tgt_pool_indices);
    return out;
}

RefinedNodes refined_nodes(std::span<const Vec3> matched_src, std::span<const Vec3> matched_tgt,
                           std::span<const double> weights, const SamplingPyramid& src_pyramid,
                           const SamplingPyramid& tgt_pyramid, const ClusterConfig& cluster,
                           const RefineConfig& refine, std::size_t node_budget) {
    if (refine.search_level >= src_pyramid.depth() || refine.search_level >= tgt_pyramid.depth()) {
        throw ConfigurationError("refine search level beyond pyramid depth");
    }
    return refined_nodes(matched_src, matched_tgt, weights, src_pyramid.cloud(refine.search_level),
                         tgt_pyramid.cloud(refine.search_level), cluster, refine, node_budget);
}

}  // namespace dynreg
