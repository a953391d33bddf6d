#include "dynreg/descriptor.hpp"

#include "dynreg/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dynreg {
namespace {

void normalize_rows(FeatureMatrix& f) {
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double n = f.row(i).norm();
        if (n > 0.0) f.row(i) /= n;
    }
}

FeatureMatrix histogram_features(const PointCloud& cloud, const HistogramParams& p, const SpatialIndex& index) {
    if (!cloud.has_normals()) {
        throw ConfigurationError("geometric-histogram descriptor requires normals");
    }
    if (!(p.radius > 0.0) || p.angle_bins < 1 || p.radial_bins < 1) {
        throw ConfigurationError("invalid histogram parameters");
    }
    const int width = p.angle_bins * p.radial_bins;
    FeatureMatrix f = FeatureMatrix::Zero(static_cast<Eigen::Index>(cloud.size()), width);
    const double half_pi = M_PI / 2.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& ni = cloud.normals[i];
        for (const Neighbor& nb : index.radius_with_distances(cloud.points[i], p.radius)) {
            // |cos| keeps the descriptor independent of normal orientation.
            const double c = std::min(1.0, std::abs(ni.dot(cloud.normals[nb.index])));
            const double angle = std::acos(c);
            const int a = std::min(p.angle_bins - 1, static_cast<int>(angle / half_pi * p.angle_bins));
            const double r = std::sqrt(nb.distance2) / p.radius;
            const int b = std::min(p.radial_bins - 1, static_cast<int>(r * p.radial_bins));
            f(static_cast<Eigen::Index>(i), a * p.radial_bins + b) += 1.0;
        }
    }
    normalize_rows(f);
    return f;
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, int width) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(width);
    do {
        for (int k = 0; k < width; ++k) v[k] = gauss(rng);
    } while (v.norm() < 1e-12);
    return v.normalized();
}

FeatureMatrix oracle_features(const PointCloud& cloud, const OracleParams& p) {
    if (p.width < 1 || !(p.bandwidth > 0.0) || p.noise < 0.0 || p.outlier_fraction < 0.0 ||
        p.outlier_fraction > 1.0) {
        throw ConfigurationError("invalid oracle descriptor parameters");
    }
    const int width = p.width;
    // Random Fourier basis shared by every cloud described with the same basis_seed.
    std::mt19937_64 basis_rng(p.basis_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    Eigen::Matrix<double, Eigen::Dynamic, 3> freq(width, 3);
    Eigen::VectorXd offsets(width);
    for (int k = 0; k < width; ++k) {
        for (int a = 0; a < 3; ++a) freq(k, a) = gauss(basis_rng) / p.bandwidth;
        offsets[k] = phase(basis_rng);
    }

    const auto n = static_cast<Eigen::Index>(cloud.size());
    FeatureMatrix f(n, width);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 world = p.frame.apply(cloud.points[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd arg = freq * world + offsets;
        f.row(i) = arg.array().cos().matrix().transpose();
    }
    normalize_rows(f);

    if (p.noise > 0.0) {
        std::mt19937_64 noise_rng(p.seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> g(0.0, p.noise);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int k = 0; k < width; ++k) f(i, k) += g(noise_rng);
        }
        normalize_rows(f);
    }

    std::mt19937_64 outlier_rng(p.seed ^ 0xc2b2ae3d27d4eb4fULL);
    for (std::size_t idx : oracle_outlier_indices(cloud.size(), p.outlier_fraction, p.seed)) {
        f.row(static_cast<Eigen::Index>(idx)) = random_unit(outlier_rng, width).transpose();
    }
    return f;
}

}  // namespace

std::string to_string(DescriptorBackend::Kind kind) {
    return kind == DescriptorBackend::Kind::oracle ? "oracle" : "histogram";
}

DescriptorBackend::Kind descriptor_kind_from_string(const std::string& name) {
    if (name == "oracle") return DescriptorBackend::Kind::oracle;
    if (name == "histogram" || name == "geometric-histogram") return DescriptorBackend::Kind::geometric_histogram;
    throw ConfigurationError("unknown descriptor kind '" + name + "'");
}

std::vector<std::size_t> oracle_outlier_indices(std::size_t n, double fraction, std::uint64_t seed) {
    const auto count = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first `count` slots are a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(order[i], order[j]);
    }
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

PointCloud describe(const PointCloud& cloud, const DescriptorBackend& backend, const SpatialIndex& index) {
    if (index.size() != cloud.size()) {
        throw ContractViolation("spatial index was not built over this cloud");
    }
    PointCloud out = cloud;
    out.features = backend.kind == DescriptorBackend::Kind::oracle ? oracle_features(cloud, backend.oracle)
                                                                   : histogram_features(cloud, backend.histogram, index);
    return out;
}

std::vector<Vec3> estimate_normals(const PointCloud& cloud, const SpatialIndex& index, std::size_t k) {
    std::vector<Vec3> normals;
    normals.reserve(cloud.size());
    for (const Vec3& p : cloud.points) {
        const auto nbrs = index.knn(p, std::max<std::size_t>(k, 3));
        Vec3 mean = Vec3::Zero();
        for (const Neighbor& nb : nbrs) mean += cloud.points[nb.index];
        mean /= static_cast<double>(nbrs.size());
        Mat3 cov = Mat3::Zero();
        for (const Neighbor& nb : nbrs) {
            const Vec3 d = cloud.points[nb.index] - mean;
            cov += d * d.transpose();
        }
        if (nbrs.size() < 3 || cov.trace() <= 0.0) {
            normals.push_back(Vec3::UnitZ());
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        normals.push_back(eig.eigenvectors().col(0).normalized());
    }
    return normals;
}

}  // namespace dynreg
