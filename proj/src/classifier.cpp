#include "dynreg/classifier.hpp"

#include "dynreg/errors.hpp"
#include "dynreg/solver.hpp"

#include <algorithm>
#include <cmath>

namespace dynreg {
namespace {

struct Endpoints {
    std::vector<Vec3> x;
    std::vector<Vec3> y;
};

Endpoints endpoints(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt) {
    Endpoints e;
    e.x.reserve(corr.size());
    e.y.reserve(corr.size());
    for (const Correspondence& c : corr.pairs) {
        if (c.src >= src.size() || c.tgt >= tgt.size()) throw InvalidInputError("correspondence index out of range");
        e.x.push_back(src.points[c.src]);
        e.y.push_back(tgt.points[c.tgt]);
    }
    return e;
}

inline double sc_entry(const Endpoints& e, std::size_t i, std::size_t j, double inv_sigma2) {
    const double d = std::abs((e.x[i] - e.x[j]).norm() - (e.y[i] - e.y[j]).norm());
    return std::max(0.0, 1.0 - d * d * inv_sigma2);
}

void require_sigma(double sigma_d) {
    if (!(sigma_d > 0.0) || !std::isfinite(sigma_d)) throw ConfigurationError("sigma_d must be positive");
}

}  // namespace

std::string to_string(Scorer s) {
    switch (s) {
        case Scorer::sc: return "sc";
        case Scorer::sc2: return "sc2";
        case Scorer::ir: return "ir";
    }
    return "sc";
}

Scorer scorer_from_string(const std::string& name) {
    if (name == "sc") return Scorer::sc;
    if (name == "sc2") return Scorer::sc2;
    if (name == "ir") return Scorer::ir;
    throw ConfigurationError("unknown scorer '" + name + "'");
}

std::string to_string(Decision d) {
    switch (d) {
        case Decision::exit_success: return "exit-success";
        case Decision::continue_: return "continue";
        case Decision::exit_degraded: return "exit-degraded";
    }
    return "continue";
}

Decision decision_from_string(const std::string& name) {
    if (name == "exit-success") return Decision::exit_success;
    if (name == "continue") return Decision::continue_;
    if (name == "exit-degraded") return Decision::exit_degraded;
    throw ParseError("unknown decision '" + name + "'");
}

void ClassifierConfig::validate() const {
    require_sigma(sigma_d);
    if (!std::isfinite(global_threshold)) throw ConfigurationError("global SC threshold must be finite");
    for (double t : local_thresholds) {
        if (!std::isfinite(t)) throw ConfigurationError("local SC thresholds must be finite");
    }
}

Eigen::MatrixXd sc_matrix(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt,
                          double sigma_d) {
    require_sigma(sigma_d);
    if (corr.size() < 2) throw InvalidInputError("SC matrix needs at least two correspondences");
    const Endpoints e = endpoints(corr, src, tgt);
    const std::size_t n = corr.size();
    const double inv_sigma2 = 1.0 / (sigma_d * sigma_d);
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = sc_entry(e, i, j, inv_sigma2);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

double sc_score(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0) return 0.0;
    return matrix.rowwise().sum().maxCoeff();
}

double sc_score(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt, double sigma_d) {
    require_sigma(sigma_d);
    const std::size_t n = corr.size();
    if (n == 0) return 0.0;
    const Endpoints e = endpoints(corr, src, tgt);
    const double inv_sigma2 = 1.0 / (sigma_d * sigma_d);
    std::vector<double> rows(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = sc_entry(e, i, j, inv_sigma2);
            rows[i] += v;
            rows[j] += v;
        }
    }
    return *std::max_element(rows.begin(), rows.end());
}

double sc2_score(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt, double sigma_d) {
    const std::size_t n = corr.size();
    if (n == 0) return 0.0;
    if (n == 1) return 1.0;
    const Eigen::MatrixXd h = (sc_matrix(corr, src, tgt, sigma_d).array() > 0.0).cast<double>().matrix();
    const Eigen::MatrixXd second = h.cwiseProduct(h * h);
    const double h_max = h.rowwise().sum().maxCoeff();
    return second.rowwise().sum().maxCoeff() / h_max;
}

double stage_score(const CorrespondenceSet& inliers, const CorrespondenceSet& candidates,
                   const RigidTransform& transform, const PointCloud& src, const PointCloud& tgt,
                   double acceptance_threshold, const ClassifierConfig& config) {
    switch (config.scorer) {
        case Scorer::sc: return sc_score(inliers, src, tgt, config.sigma_d);
        case Scorer::sc2: return sc2_score(inliers, src, tgt, config.sigma_d);
        case Scorer::ir:
            return static_cast<double>(count_inliers(transform, candidates, src, tgt, acceptance_threshold));
    }
    return 0.0;
}

double local_threshold(const ClassifierConfig& config, int stage) {
    if (stage < 1) throw ContractViolation("local thresholds are indexed from stage 1");
    if (!config.local_thresholds.empty()) {
        const std::size_t i = std::min(static_cast<std::size_t>(stage), config.local_thresholds.size());
        return config.local_thresholds[i - 1];
    }
    return config.local_start_fraction * config.global_threshold + (stage - 1) * config.local_step;
}

Decision decide(int stage, double score, std::optional<double> previous, const ClassifierConfig& config) {
    if (stage < 0) throw ContractViolation("stage index must be non-negative");
    if (stage == 0) {
        if (!config.enabled) return Decision::continue_;
        return score >= config.global_threshold ? Decision::exit_success : Decision::continue_;
    }
    if (!previous) throw ContractViolation("local stage decision needs the previous score");
    if (!config.enabled) return Decision::continue_;
    const double value = config.compare_deltas ? score - *previous : score;
    return value < local_threshold(config, stage) ? Decision::exit_degraded : Decision::continue_;
}

}  // namespace dynreg
