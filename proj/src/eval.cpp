#include "dynreg/eval.hpp"

#include "dynreg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dynreg {
namespace {

constexpr double kProbabilityFloor = 1e-12;

double required_log(const Eigen::MatrixXd& m, std::size_t r, std::size_t c, bool& clamped) {
    if (r >= static_cast<std::size_t>(m.rows()) || c >= static_cast<std::size_t>(m.cols())) {
        throw InvalidInputError("assignment index out of range");
    }
    double p = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    if (!(p >= kProbabilityFloor)) {
        p = kProbabilityFloor;
        clamped = true;
    }
    return std::log(p);
}

}  // namespace

void MetricConfig::validate() const {
    if (!(rmse_threshold > 0.0) || !(rre_threshold > 0.0) || !(rte_threshold > 0.0)) {
        throw ConfigurationError("metric thresholds must be positive");
    }
}

double rte(const RigidTransform& est, const RigidTransform& gt) { return (est.translation - gt.translation).norm(); }

double rre(const RigidTransform& est, const RigidTransform& gt) {
    const double c = ((est.rotation.transpose() * gt.rotation).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

double rmse(std::span<const Vec3> src, std::span<const Vec3> tgt, const RigidTransform& est) {
    if (src.size() != tgt.size()) throw InvalidInputError("rmse inputs differ in length");
    if (src.empty()) throw UndefinedMetricError("rmse of an empty correspondence set");
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) sum += (est.apply(src[i]) - tgt[i]).squaredNorm();
    return std::sqrt(sum / static_cast<double>(src.size()));
}

double rmse(const CorrespondenceSet& gt_corr, const PointCloud& src, const PointCloud& tgt, const RigidTransform& est) {
    if (gt_corr.empty()) throw UndefinedMetricError("rmse of an empty correspondence set");
    double sum = 0.0;
    for (const Correspondence& c : gt_corr.pairs) {
        if (c.src >= src.size() || c.tgt >= tgt.size()) throw InvalidInputError("correspondence index out of range");
        sum += (est.apply(src.points[c.src]) - tgt.points[c.tgt]).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(gt_corr.size()));
}

bool is_registered(const PairMetrics& m, const MetricConfig& config, RecallMode mode) {
    if (m.failed) return false;
    if (mode == RecallMode::rmse_based) return m.rmse < config.rmse_threshold;
    return m.rre < config.rre_threshold && m.rte < config.rte_threshold;
}

double registration_recall(std::span<const PairMetrics> results, const MetricConfig& config, RecallMode mode) {
    config.validate();
    if (results.empty()) throw UndefinedMetricError("registration recall of an empty result list");
    const auto ok = std::count_if(results.begin(), results.end(),
                                  [&](const PairMetrics& m) { return is_registered(m, config, mode); });
    return static_cast<double>(ok) / static_cast<double>(results.size());
}

void LossConfig::validate() const {
    if (!(positive_margin > negative_margin) || !(negative_margin > 0.0)) {
        throw ConfigurationError("loss margins must satisfy Delta_p > Delta_n > 0");
    }
    if (!(overlap_floor >= 0.0 && overlap_floor <= 1.0)) throw ConfigurationError("overlap floor must lie in [0, 1]");
    if (!(loss_weight >= 0.0)) throw ConfigurationError("loss weight must be non-negative");
}

double circle_loss(std::span<const CircleAnchor> anchors, const LossConfig& config) {
    config.validate();
    if (anchors.empty()) return 0.0;
    double total = 0.0;
    for (const CircleAnchor& a : anchors) {
        if (a.positive_distances.size() != a.positive_overlaps.size()) {
            throw InvalidInputError("positive distances and overlaps differ in length");
        }
        double pos = 0.0;
        for (std::size_t j = 0; j < a.positive_distances.size(); ++j) {
            const double o = a.positive_overlaps[j];
            if (!(o >= 0.0 && o <= 1.0)) throw InvalidInputError("overlap ratio outside [0, 1]");
            if (o < config.overlap_floor) continue;
            const double d = a.positive_distances[j];
            const double beta = std::max(0.0, d - config.positive_margin);
            pos += std::exp(std::sqrt(o) * beta * (d - config.positive_margin));
        }
        double neg = 0.0;
        for (double d : a.negative_distances) {
            const double beta = std::max(0.0, config.negative_margin - d);
            neg += std::exp(beta * (config.negative_margin - d));
        }
        total += std::log1p(pos * neg);
    }
    return total / static_cast<double>(anchors.size());
}

CircleAnchor circle_anchor(const Eigen::VectorXd& anchor, const std::vector<Eigen::VectorXd>& positives,
                           const std::vector<double>& positive_overlaps,
                           const std::vector<Eigen::VectorXd>& negatives) {
    CircleAnchor a;
    for (const auto& f : positives) a.positive_distances.push_back((anchor - f).norm());
    a.positive_overlaps = positive_overlaps;
    for (const auto& f : negatives) a.negative_distances.push_back((anchor - f).norm());
    return a;
}

double coarse_matching_loss(std::span<const CircleAnchor> anchors_p, std::span<const CircleAnchor> anchors_q,
                            const LossConfig& config) {
    return 0.5 * (circle_loss(anchors_p, config) + circle_loss(anchors_q, config));
}

LossValue point_matching_loss(std::span<const AssignmentTerm> terms) {
    LossValue out;
    if (terms.empty()) return out;
    double total = 0.0;
    for (const AssignmentTerm& t : terms) {
        if (t.assignment.rows() < 1 || t.assignment.cols() < 1) {
            throw InvalidInputError("assignment matrix must include dustbins");
        }
        const auto dust_row = static_cast<std::size_t>(t.assignment.rows() - 1);
        const auto dust_col = static_cast<std::size_t>(t.assignment.cols() - 1);
        double term = 0.0;
        for (const auto& [x, y] : t.matched) term -= required_log(t.assignment, x, y, out.clamped);
        for (std::size_t x : t.unmatched_src) term -= required_log(t.assignment, x, dust_col, out.clamped);
        for (std::size_t y : t.unmatched_tgt) term -= required_log(t.assignment, dust_row, y, out.clamped);
        total += term;
    }
    out.value = total / static_cast<double>(terms.size());
    return out;
}

double total_loss(double coarse, double point_matching, const LossConfig& config) {
    config.validate();
    return coarse + config.loss_weight * point_matching;
}

}  // namespace dynreg
