#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/matching.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace dynreg {

struct MetricConfig {
    double rmse_threshold = 0.2;  ///< meters
    double rre_threshold = 5.0;   ///< degrees
    double rte_threshold = 2.0;   ///< meters

    void validate() const;
};

/// |t_est - t_gt|.
double rte(const RigidTransform& est, const RigidTransform& gt);

/// arccos((trace(R_est^T R_gt) - 1) / 2) in degrees, argument clamped to [-1, 1].
double rre(const RigidTransform& est, const RigidTransform& gt);

/// sqrt(mean |T(p_i) - q_i|^2). Throws UndefinedMetricError for an empty set.
double rmse(std::span<const Vec3> src, std::span<const Vec3> tgt, const RigidTransform& est);

/// Same over ground-truth index pairs into two clouds.
double rmse(const CorrespondenceSet& gt_corr, const PointCloud& src, const PointCloud& tgt, const RigidTransform& est);

/// Per-pair outcome; a pair whose registration threw is recorded with failed = true.
struct PairMetrics {
    double rre = 0.0;
    double rte = 0.0;
    double rmse = 0.0;
    bool failed = false;
};

enum class RecallMode { rmse_based, pose_based };

/// Fraction of pairs with RMSE < tau (rmse_based) or RRE < 5 deg and RTE < 2 m (pose_based).
double registration_recall(std::span<const PairMetrics> results, const MetricConfig& config, RecallMode mode);

/// Whether a single pair counts as registered under `mode`.
bool is_registered(const PairMetrics& m, const MetricConfig& config, RecallMode mode);

struct LossConfig {
    double positive_margin = 1.4;  ///< Delta_p
    double negative_margin = 0.1;  ///< Delta_n
    double overlap_floor = 0.1;    ///< positives need at least this overlap ratio
    double loss_weight = 1.0;      ///< lambda in L = L_c + lambda * L_p

    void validate() const;
};

/// One anchor patch: feature distances to its positive and negative patches.
struct CircleAnchor {
    std::vector<double> positive_distances;
    std::vector<double> positive_overlaps;  ///< same length as positive_distances
    std::vector<double> negative_distances;
};

/**
 * @brief Overlap-aware circle loss on one side, from feature distances.
 *
 * Mean over anchors of
 *   log(1 + sum_p exp(sqrt(o_p) * beta_p * (d_p - Delta_p)) * sum_n exp(beta_n * (Delta_n - d_n)))
 * with beta_p = max(0, d_p - Delta_p) and beta_n = max(0, Delta_n - d_n).
 * Positives below the overlap floor are ignored. No anchors -> 0.
 */
double circle_loss(std::span<const CircleAnchor> anchors, const LossConfig& config);

/// Anchor built from feature vectors: distances are Euclidean feature distances.
CircleAnchor circle_anchor(const Eigen::VectorXd& anchor, const std::vector<Eigen::VectorXd>& positives,
                           const std::vector<double>& positive_overlaps,
                           const std::vector<Eigen::VectorXd>& negatives);

/// (L_c on P + L_c on Q) / 2.
double coarse_matching_loss(std::span<const CircleAnchor> anchors_p, std::span<const CircleAnchor> anchors_q,
                            const LossConfig& config);

/// One sampled ground-truth node correspondence with its augmented assignment matrix.
struct AssignmentTerm {
    Eigen::MatrixXd assignment;                              ///< (m+1) x (n+1), last row/col are dustbins
    std::vector<std::pair<std::size_t, std::size_t>> matched;  ///< M_i
    std::vector<std::size_t> unmatched_src;                  ///< I_i (rows routed to the dustbin column)
    std::vector<std::size_t> unmatched_tgt;                  ///< J_i (columns routed to the dustbin row)
};

struct LossValue {
    double value = 0.0;
    bool clamped = false;  ///< some required probability was below 1e-12 and was clamped
};

/// Mean over terms of the negative log-likelihood of the required entries. No terms -> 0.
LossValue point_matching_loss(std::span<const AssignmentTerm> terms);

/// L_c + lambda * L_p.
double total_loss(double coarse, double point_matching, const LossConfig& config);

}  // namespace dynreg
