#pragma once

#include "dynreg/errors.hpp"
#include "dynreg/geometry.hpp"
#include "dynreg/matching.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dynreg {

struct SolverConfig {
    double acceptance_threshold = 0.1;  ///< inlier residual bound tau_t (m)
    int refinement_rounds = 5;          ///< refits over the global inlier set

    void validate() const;
};

/**
 * @brief Closed-form minimizer of sum_i w_i |R x_i + t - y_i|^2.
 *
 * Weighted centroids, SVD of the weighted cross-covariance, reflection fixed
 * through the sign of the determinant. Throws DegenerateGeometryError for
 * fewer than three positively weighted pairs or collinear configurations.
 */
RigidTransform weighted_kabsch(std::span<const Vec3> src, std::span<const Vec3> tgt, std::span<const double> weights);

/// Pairs with |R x + t - y| strictly below tau.
std::size_t count_inliers(const RigidTransform& transform, const CorrespondenceSet& corr, const PointCloud& src,
                          const PointCloud& tgt, double tau);

CorrespondenceSet select_inliers(const RigidTransform& transform, const CorrespondenceSet& corr,
                                 const PointCloud& src, const PointCloud& tgt, double tau);

/// weighted_kabsch over the positions referenced by `corr`.
RigidTransform fit_correspondences(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt);

struct LgrResult {
    RigidTransform transform;
    CorrespondenceSet inliers;                        ///< surviving subset of all_corrs
    std::size_t selected_patch = 0;
    std::vector<std::optional<std::size_t>> candidate_inliers;  ///< per patch; empty when skipped
    int refinement_rounds_applied = 0;
};

/**
 * @brief Local-to-global registration.
 *
 * Fits one transform per patch (weights = pair similarity), keeps the one
 * with the most inliers over `all_corrs` (lowest patch index on ties), then
 * alternates refit and inlier re-selection. A refit that would lose inliers
 * is discarded and refinement stops. Degenerate patches are skipped.
 */
LgrResult local_to_global(const std::vector<CorrespondenceSet>& patch_corrs, const CorrespondenceSet& all_corrs,
                          const PointCloud& src, const PointCloud& tgt, const SolverConfig& config);

}  // namespace dynreg
