#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/sampling.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace dynreg {

struct Correspondence {
    std::size_t src;
    std::size_t tgt;
    double weight;  ///< similarity in [0, 1]

    friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Index pairs into a source and a target cloud with per-pair similarity.
struct CorrespondenceSet {
    std::vector<Correspondence> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
    void add(std::size_t s, std::size_t t, double w) { pairs.push_back({s, t, w}); }

    /// Throws InvalidInputError on out-of-range indices, bad weights or duplicate pairs.
    void validate(std::size_t src_size, std::size_t tgt_size) const;

    friend bool operator==(const CorrespondenceSet&, const CorrespondenceSet&) = default;
};

/// Drops repeated (src, tgt) pairs, keeping the first position and the largest weight.
CorrespondenceSet merge_unique(const CorrespondenceSet& corr);

/// Node -> fine-level member indices (each fine point in at most one patch).
struct PatchAssignment {
    std::vector<std::vector<std::size_t>> members;

    std::size_t node_count() const { return members.size(); }
};

struct MatchingParams {
    std::size_t k = 256;              ///< coarse correspondences kept
    std::size_t patch_cap = 32;       ///< max fine points per node
    int sinkhorn_iterations = 100;
    double dustbin_logit = 1.0;
    double kernel_scale = 1.0;        ///< multiplies the median feature distance in the similarity kernel
    double temperature = 0.1;         ///< optimal-transport logits are similarity / temperature
};

/**
 * @brief Log-domain Sinkhorn with a dustbin row and column.
 *
 * Returns the full (m+1) x (n+1) matrix on the assignment scale: the first m
 * rows and first n columns sum to 1, the dustbin row sums to n and the dustbin
 * column to m (up to convergence; columns are exact after the final pass).
 */
Eigen::MatrixXd sinkhorn_augmented(const Eigen::MatrixXd& scores, int iterations, double dustbin_logit);

/// The m x n transport block of sinkhorn_augmented().
Eigen::MatrixXd sinkhorn_normalize(const Eigen::MatrixXd& scores, int iterations, double dustbin_logit);

/// exp(-|f_i - f_j|^2 / 2 sigma^2) with sigma = kernel_scale * median pairwise distance.
Eigen::MatrixXd feature_similarity(const FeatureMatrix& src, const FeatureMatrix& tgt, double kernel_scale);

/// Top-k node pairs of the normalized similarity; weights are transport scores.
CorrespondenceSet coarse_match(const PointCloud& src_nodes, const PointCloud& tgt_nodes, const MatchingParams& params);

/// Nearest-node grouping of `fine` around `nodes`, each patch truncated to its `cap` nearest members.
PatchAssignment group_points(const PointCloud& nodes, const PointCloud& fine, std::size_t cap);

/// Same, between two pyramid levels. Requires node_level > fine_level.
PatchAssignment group_points(const SamplingPyramid& pyramid, std::size_t node_level, std::size_t fine_level,
                             std::size_t cap);

/// Augmented transport matrix of a patch pair (see sinkhorn_augmented).
Eigen::MatrixXd fine_transport(const PointCloud& src_patch, const PointCloud& tgt_patch, const MatchingParams& params);

/**
 * Mutual-top pairs of the patch transport, indices local to the patches.
 * A row or column whose best entry is its dustbin produces no pair.
 */
CorrespondenceSet fine_match(const PointCloud& src_patch, const PointCloud& tgt_patch, const MatchingParams& params);

}  // namespace dynreg
