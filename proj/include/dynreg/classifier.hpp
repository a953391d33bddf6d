#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/matching.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace dynreg {

/// How a correspondence set collapses to the scalar compared against the thresholds.
enum class Scorer {
    sc,   ///< max row sum of the SC matrix
    sc2,  ///< second-order consistency, rescaled to the same count scale
    ir,   ///< inlier count of the stage transform over its candidate set
};

std::string to_string(Scorer s);
Scorer scorer_from_string(const std::string& name);

enum class Decision { exit_success, continue_, exit_degraded };

std::string to_string(Decision d);
Decision decision_from_string(const std::string& name);

struct ClassifierConfig {
    double sigma_d = 0.1;                  ///< distance tolerance of the SC kernel (m)
    double global_threshold = 200.0;       ///< N_g
    std::vector<double> local_thresholds;  ///< N_l^i for i = 1, 2, ...; empty means generated
    double local_start_fraction = 0.1;     ///< generated N_l^1 = fraction * N_g
    double local_step = 10.0;              ///< generated N_l^{i+1} - N_l^i
    bool compare_deltas = true;            ///< local rule on score deltas (true) or raw scores
    bool enabled = true;                   ///< false: never exit early
    Scorer scorer = Scorer::sc;

    void validate() const;
};

/**
 * @brief Pairwise spatial consistency of a correspondence set.
 *
 * SC_ij = max(0, 1 - d_ij^2 / sigma_d^2) with
 * d_ij = | |x_i - x_j| - |y_i - y_j| |. Throws InvalidInputError for fewer
 * than two pairs.
 */
Eigen::MatrixXd sc_matrix(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt, double sigma_d);

/// Maximum row sum.
double sc_score(const Eigen::MatrixXd& matrix);

/**
 * Same value as sc_score(sc_matrix(...)) without storing the matrix; defined
 * for every size (0 pairs -> 0, 1 pair -> 1).
 */
double sc_score(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt, double sigma_d);

/**
 * Second-order consistency: H = [SC > 0], SC2 = H .* (H * H). Returns the max
 * row sum of SC2 divided by the max row sum of H, which equals k for k
 * mutually consistent pairs.
 */
double sc2_score(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt, double sigma_d);

/// Stage score under the configured scorer. `candidates` and `transform` are used by the IR scorer only.
double stage_score(const CorrespondenceSet& inliers, const CorrespondenceSet& candidates,
                   const RigidTransform& transform, const PointCloud& src, const PointCloud& tgt,
                   double acceptance_threshold, const ClassifierConfig& config);

/// N_l^i for local stage i >= 1; explicit lists clamp to their last entry.
double local_threshold(const ClassifierConfig& config, int stage);

/**
 * @brief Early-exit rule after a stage (0 = global, i >= 1 = local stage i).
 *
 * Global: exit_success iff score >= N_g. Local: exit_degraded iff
 * (score - previous) < N_l^i (or score < N_l^i with compare_deltas off).
 * Always continue_ when the classifier is disabled. Throws ContractViolation
 * if a local stage has no previous score.
 */
Decision decide(int stage, double score, std::optional<double> previous, const ClassifierConfig& config);

}  // namespace dynreg
