#include "dynreg/synthetic.hpp"

#include "dynreg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dynreg {
namespace {

constexpr int kMaxAttempts = 50;
constexpr double kOverlapTolerance = 0.05;

/// Planar rectangle origin + s * u + t * v, s in [0, |u|], t in [0, |v|].
struct Rect {
    Vec3 origin;
    Vec3 u;
    Vec3 v;
};

struct Scene {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    Vec3 center = Vec3::Zero();
    bool angular_sweep = false;
};

/// Bridson Poisson-disk sampling of an a x b rectangle.
std::vector<Eigen::Vector2d> poisson_disk(double a, double b, double r, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double cell = r / std::sqrt(2.0);
    const int gw = std::max(1, static_cast<int>(std::ceil(a / cell)));
    const int gh = std::max(1, static_cast<int>(std::ceil(b / cell)));
    std::vector<int> grid(static_cast<std::size_t>(gw * gh), -1);
    std::vector<Eigen::Vector2d> pts;
    std::vector<std::size_t> active;

    auto cell_of = [&](const Eigen::Vector2d& p) {
        const int cx = std::min(gw - 1, static_cast<int>(p.x() / cell));
        const int cy = std::min(gh - 1, static_cast<int>(p.y() / cell));
        return std::make_pair(cx, cy);
    };
    auto fits = [&](const Eigen::Vector2d& p) {
        if (p.x() < 0.0 || p.y() < 0.0 || p.x() > a || p.y() > b) return false;
        const auto [cx, cy] = cell_of(p);
        for (int y = std::max(0, cy - 2); y <= std::min(gh - 1, cy + 2); ++y) {
            for (int x = std::max(0, cx - 2); x <= std::min(gw - 1, cx + 2); ++x) {
                const int idx = grid[static_cast<std::size_t>(y * gw + x)];
                if (idx >= 0 && (pts[static_cast<std::size_t>(idx)] - p).squaredNorm() < r * r) return false;
            }
        }
        return true;
    };
    auto insert = [&](const Eigen::Vector2d& p) {
        const auto [cx, cy] = cell_of(p);
        grid[static_cast<std::size_t>(cy * gw + cx)] = static_cast<int>(pts.size());
        active.push_back(pts.size());
        pts.push_back(p);
    };

    insert(Eigen::Vector2d(unit(rng) * a, unit(rng) * b));
    while (!active.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
        const std::size_t slot = pick(rng);
        const Eigen::Vector2d base = pts[active[slot]];
        bool placed = false;
        for (int k = 0; k < 30; ++k) {
            const double angle = 2.0 * M_PI * unit(rng);
            const double radius = r * (1.0 + unit(rng));
            const Eigen::Vector2d cand = base + radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            if (fits(cand)) {
                insert(cand);
                placed = true;
                break;
            }
        }
        if (!placed) {
            active[slot] = active.back();
            active.pop_back();
        }
    }
    return pts;
}

void sample_rect(const Rect& rect, double spacing, std::mt19937_64& rng, Scene& scene) {
    const double a = rect.u.norm();
    const double b = rect.v.norm();
    const Vec3 du = rect.u / a;
    const Vec3 dv = rect.v / b;
    const Vec3 n = du.cross(dv).normalized();
    for (const Eigen::Vector2d& p : poisson_disk(a, b, spacing, rng)) {
        scene.points.push_back(rect.origin + p.x() * du + p.y() * dv);
        scene.normals.push_back(n);
    }
}

/// Five faces (no bottom) of an axis-aligned box with its base corner at `corner`.
std::vector<Rect> box_faces(const Vec3& corner, const Vec3& size) {
    const Vec3 ex(size.x(), 0, 0);
    const Vec3 ey(0, size.y(), 0);
    const Vec3 ez(0, 0, size.z());
    return {
        {corner + ez, ex, ey},
        {corner, ez, ex},
        {corner + ey, ex, ez},
        {corner, ey, ez},
        {corner + ex, ez, ey},
    };
}

Scene build_scene(const SceneSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::vector<Rect> rects;
    Scene scene;
    switch (spec.kind) {
        case SceneKind::room: {
            const double w = uniform(3.0, 4.0);
            const double d = uniform(2.5, 3.5);
            const double h = 2.0;
            rects.push_back({Vec3(0, 0, 0), Vec3(w, 0, 0), Vec3(0, d, 0)});
            rects.push_back({Vec3(0, 0, 0), Vec3(0, 0, h), Vec3(w, 0, 0)});
            rects.push_back({Vec3(0, d, 0), Vec3(w, 0, 0), Vec3(0, 0, h)});
            rects.push_back({Vec3(0, 0, 0), Vec3(0, d, 0), Vec3(0, 0, h)});
            rects.push_back({Vec3(w, 0, 0), Vec3(0, 0, h), Vec3(0, d, 0)});
            for (int b = 0; b < 3; ++b) {
                const Vec3 size(uniform(0.3, 0.8), uniform(0.3, 0.8), uniform(0.3, 1.0));
                const Vec3 corner(uniform(0.2, w - size.x() - 0.2), uniform(0.2, d - size.y() - 0.2), 0.0);
                for (const Rect& r : box_faces(corner, size)) rects.push_back(r);
            }
            scene.center = Vec3(w / 2, d / 2, 0);
            scene.angular_sweep = true;
            break;
        }
        case SceneKind::corridor: {
            const double l = uniform(7.0, 9.0);
            const double w = uniform(1.6, 2.2);
            const double h = 2.0;
            rects.push_back({Vec3(0, 0, 0), Vec3(l, 0, 0), Vec3(0, w, 0)});
            rects.push_back({Vec3(0, 0, 0), Vec3(0, 0, h), Vec3(l, 0, 0)});
            rects.push_back({Vec3(0, w, 0), Vec3(l, 0, 0), Vec3(0, 0, h)});
            for (int b = 0; b < 4; ++b) {
                const Vec3 size(uniform(0.3, 0.7), uniform(0.2, 0.5), uniform(0.4, 1.2));
                const double y = (b % 2 == 0) ? 0.0 : w - size.y();
                const Vec3 corner(uniform(0.2, l - size.x() - 0.2), y, 0.0);
                for (const Rect& r : box_faces(corner, size)) rects.push_back(r);
            }
            break;
        }
        case SceneKind::outdoor_strip: {
            const double l = uniform(9.0, 11.0);
            const double w = uniform(3.5, 4.5);
            rects.push_back({Vec3(0, 0, 0), Vec3(l, 0, 0), Vec3(0, w, 0)});
            for (int b = 0; b < 6; ++b) {
                const Vec3 size(uniform(0.6, 1.8), uniform(0.5, 1.5), uniform(0.5, 2.5));
                const Vec3 corner(uniform(0.1, l - size.x() - 0.1), uniform(0.1, w - size.y() - 0.1), 0.0);
                for (const Rect& r : box_faces(corner, size)) rects.push_back(r);
            }
            break;
        }
    }
    for (const Rect& r : rects) sample_rect(r, spec.spacing, rng, scene);
    return scene;
}

/// Uniform random points on the faces of a box placed inside the view's bounds.
void add_clutter(PointCloud& view, std::size_t count, double spacing, std::mt19937_64& rng) {
    if (count == 0 || view.empty()) return;
    Eigen::AlignedBox3d bounds;
    for (const Vec3& p : view.points) bounds.extend(p);
    const double area = static_cast<double>(count) * spacing * spacing * 1.4;
    const double side = std::sqrt(area / 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec3 corner;
    for (int a = 0; a < 3; ++a) {
        const double lo = bounds.min()[a];
        const double hi = std::max(lo, bounds.max()[a] - side);
        corner[a] = lo + (hi - lo) * unit(rng);
    }
    const auto faces = box_faces(corner, Vec3::Constant(side));
    std::uniform_int_distribution<std::size_t> face(0, faces.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const Rect& r = faces[face(rng)];
        view.points.push_back(r.origin + unit(rng) * r.u + unit(rng) * r.v);
        view.normals.push_back(r.u.cross(r.v).normalized());
    }
}

SyntheticPair attempt(const SceneSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Scene scene = build_scene(spec, rng);
    const std::size_t n = scene.points.size();

    // Scene indices in a seeded random order define the point order of both views.
    std::vector<std::size_t> shuffled(n);
    std::iota(shuffled.begin(), shuffled.end(), std::size_t{0});
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<std::size_t> order_rank(n);
    for (std::size_t r = 0; r < n; ++r) order_rank[shuffled[r]] = r;

    // Sweep order: angle about the room center, or position along the long axis.
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = scene.points[i] - scene.center;
        key[i] = scene.angular_sweep ? std::atan2(d.y(), d.x()) : scene.points[i].x();
    }
    std::vector<std::size_t> sweep(n);
    std::iota(sweep.begin(), sweep.end(), std::size_t{0});
    std::stable_sort(sweep.begin(), sweep.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

    const auto view_len = static_cast<std::size_t>(std::llround(spec.view_fraction * static_cast<double>(n)));
    const auto clutter = static_cast<std::size_t>(std::llround(spec.outlier_region_fraction * static_cast<double>(view_len)));
    const auto shared = std::min(
        view_len, static_cast<std::size_t>(std::llround(spec.overlap * static_cast<double>(view_len + clutter))));
    const std::size_t offset = view_len - shared;

    auto take = [&](std::size_t begin) {
        std::vector<std::size_t> ids(sweep.begin() + static_cast<std::ptrdiff_t>(begin),
                                     sweep.begin() + static_cast<std::ptrdiff_t>(begin + view_len));
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return order_rank[a] < order_rank[b]; });
        return ids;
    };
    const std::vector<std::size_t> src_ids = take(0);
    const std::vector<std::size_t> tgt_ids = take(offset);

    SyntheticPair pair;
    pair.gt = random_rigid(rng(), spec.max_rotation_deg, spec.max_translation);
    pair.world_from_src = RigidTransform::identity();
    pair.world_from_tgt = pair.gt.inverse();

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto make_view = [&](const std::vector<std::size_t>& ids) {
        PointCloud view;
        for (std::size_t id : ids) {
            Vec3 p = scene.points[id];
            if (spec.noise > 0.0) p += spec.noise * Vec3(gauss(rng), gauss(rng), gauss(rng));
            view.points.push_back(p);
            view.normals.push_back(scene.normals[id]);
        }
        add_clutter(view, clutter, spec.spacing, rng);
        return view;
    };
    pair.src = make_view(src_ids);
    pair.tgt = apply_transform(make_view(tgt_ids), pair.gt);

    std::vector<std::ptrdiff_t> tgt_slot(n, -1);
    for (std::size_t j = 0; j < tgt_ids.size(); ++j) tgt_slot[tgt_ids[j]] = static_cast<std::ptrdiff_t>(j);
    for (std::size_t i = 0; i < src_ids.size(); ++i) {
        const std::ptrdiff_t j = tgt_slot[src_ids[i]];
        if (j >= 0) pair.gt_correspondences.add(i, static_cast<std::size_t>(j), 1.0);
    }
    pair.measured_overlap = measure_overlap(pair.src, pair.tgt, pair.gt);
    return pair;
}

}  // namespace

std::string to_string(SceneKind k) {
    switch (k) {
        case SceneKind::room: return "room";
        case SceneKind::corridor: return "corridor";
        case SceneKind::outdoor_strip: return "outdoor-strip";
    }
    return "room";
}

SceneKind scene_kind_from_string(const std::string& name) {
    if (name == "room") return SceneKind::room;
    if (name == "corridor") return SceneKind::corridor;
    if (name == "outdoor-strip" || name == "outdoor_strip") return SceneKind::outdoor_strip;
    throw ConfigurationError("unknown scene kind '" + name + "'");
}

void SceneSpec::validate() const {
    if (!(overlap > 0.0 && overlap <= 1.0)) throw ConfigurationError("scene overlap must lie in (0, 1]");
    if (!(noise >= 0.0)) throw ConfigurationError("scene noise must be non-negative");
    if (!(outlier_region_fraction >= 0.0 && outlier_region_fraction < 1.0)) {
        throw ConfigurationError("outlier region fraction must lie in [0, 1)");
    }
    if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0)) {
        throw ConfigurationError("max rotation must lie in [0, 180] degrees");
    }
    if (!(max_translation >= 0.0)) throw ConfigurationError("max translation must be non-negative");
    if (!(spacing > 0.0)) throw ConfigurationError("sampling spacing must be positive");
    if (!(view_fraction > 0.0 && view_fraction <= 1.0)) throw ConfigurationError("view fraction must lie in (0, 1]");
}

RigidTransform random_rigid(std::uint64_t seed, double max_rotation_deg, double max_translation) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec3 axis;
    do {
        axis = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (axis.norm() < 1e-9);
    Vec3 dir;
    do {
        dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (dir.norm() < 1e-9);
    const double angle = max_rotation_deg * unit(rng);
    const double length = max_translation * unit(rng);
    if (angle == 0.0 && length == 0.0) return RigidTransform::identity();
    return rotation_about(axis, angle, dir.normalized() * length);
}

double measure_overlap(const PointCloud& src, const PointCloud& tgt, const RigidTransform& gt, double radius) {
    if (src.empty() || tgt.empty()) return 0.0;
    const PointCloud moved = apply_transform(src, gt);
    const SpatialIndex src_index(moved);
    const SpatialIndex tgt_index(tgt);
    const double r2 = radius * radius;
    std::size_t mutual = 0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
        const Neighbor nb = tgt_index.knn(moved.points[i], 1).front();
        if (nb.distance2 > r2) continue;
        if (src_index.nearest(tgt.points[nb.index]) == i) ++mutual;
    }
    return 2.0 * static_cast<double>(mutual) / static_cast<double>(src.size() + tgt.size());
}

SyntheticPair generate_pair(const SceneSpec& spec) {
    spec.validate();
    double closest = -1.0;
    for (int a = 0; a < kMaxAttempts; ++a) {
        const std::uint64_t seed = spec.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(a) * 0x632be59bd9b4e019ULL;
        SyntheticPair pair = attempt(spec, seed);
        if (std::abs(pair.measured_overlap - spec.overlap) <= kOverlapTolerance) return pair;
        if (closest < 0.0 || std::abs(pair.measured_overlap - spec.overlap) < std::abs(closest - spec.overlap)) {
            closest = pair.measured_overlap;
        }
    }
    throw GenerationError("overlap target " + std::to_string(spec.overlap) + " unreachable after " +
                          std::to_string(kMaxAttempts) + " attempts (closest " + std::to_string(closest) + ")");
}

std::vector<SceneSpec> make_suite(const std::string& name, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const SceneKind kinds[] = {SceneKind::room, SceneKind::corridor, SceneKind::outdoor_strip};
    std::vector<SceneSpec> suite;
    suite.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SceneSpec s;
        s.kind = kinds[i % 3];
        s.seed = rng();
        if (name == "easy") {
            s.overlap = 1.0;
        } else if (name == "exact") {
            s.overlap = 0.4 + 0.5 * unit(rng);
            s.max_rotation_deg = 45.0;
            s.max_translation = 1.0;
        } else if (name == "low-overlap") {
            s.overlap = 0.15 + 0.15 * unit(rng);
            s.noise = 0.005;
            s.spacing = 0.05;
            s.outlier_region_fraction = 0.5;
        } else {
            throw ConfigurationError("unknown suite '" + name + "'");
        }
        suite.push_back(s);
    }
    return suite;
}

}  // namespace dynreg
