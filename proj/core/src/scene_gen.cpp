#include "sbmc/scene.hpp"

#include "sbmc/eval.hpp"
#include "sbmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbmc {
namespace {

constexpr double kMinBoxSide = 0.3;
constexpr double kMaxBoxSide = 0.9;
constexpr double kBoxGap = 0.05;
constexpr double kForegroundFraction = 0.18;
constexpr int kMinPointsPerBox = 24;
// Pull surface samples 1 mm inward so containment tests never hinge on the
// rounding of center +- half-side.
constexpr double kSurfaceInset = 1e-3;

bool boxes_touch(const AABox& a, const AABox& b, double gap) {
    const auto apart = [gap](double ca, double sa, double cb, double sb) {
        return std::abs(ca - cb) >= 0.5 * (sa + sb) + gap;
    };
    return !(apart(a.center.x, a.sx, b.center.x, b.sx) || apart(a.center.y, a.sy, b.center.y, b.sy)
             || apart(a.center.z, a.sz, b.center.z, b.sz));
}

Point3 sample_on_surface(const AABox& box, CounterRng& rng) {
    const double ax = box.sy * box.sz;
    const double ay = box.sx * box.sz;
    const double az = box.sx * box.sy;
    const double pick = rng.next_unit() * 2.0 * (ax + ay + az);
    const double u = rng.next_unit() - 0.5;
    const double v = rng.next_unit() - 0.5;
    const double hx = 0.5 * box.sx - kSurfaceInset;
    const double hy = 0.5 * box.sy - kSurfaceInset;
    const double hz = 0.5 * box.sz - kSurfaceInset;
    Point3 p = box.center;
    if (pick < 2.0 * ax) {
        p.x += pick < ax ? -hx : hx;
        p.y += 2.0 * u * hy;
        p.z += 2.0 * v * hz;
    } else if (pick < 2.0 * (ax + ay)) {
        p.y += pick < 2.0 * ax + ay ? -hy : hy;
        p.x += 2.0 * u * hx;
        p.z += 2.0 * v * hz;
    } else {
        p.z += pick < 2.0 * (ax + ay) + az ? -hz : hz;
        p.x += 2.0 * u * hx;
        p.y += 2.0 * v * hy;
    }
    return p;
}

bool inside_any(const Point3& p, const std::vector<AABox>& boxes) {
    return std::any_of(boxes.begin(), boxes.end(),
                       [&](const AABox& b) { return b.contains(p); });
}

}  // namespace

SyntheticScene gen_scene(std::uint64_t seed, int n_objects, double extent, int n_points,
                         int n_channels) {
    if (n_objects < 0) {
        throw std::invalid_argument("n_objects must be >= 0");
    }
    if (n_points < 1) {
        throw std::invalid_argument("n_points must be >= 1");
    }
    if (n_channels < 0) {
        throw std::invalid_argument("n_channels must be >= 0");
    }
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw std::invalid_argument("extent must be positive");
    }
    if (n_objects > 0 && extent < 2.0) {
        throw std::invalid_argument("extent must be >= 2 to place objects");
    }

    SyntheticScene scene;
    scene.seed = seed;
    CounterRng box_rng(splitmix64(seed ^ 0x5bd1e995u));
    CounterRng point_rng(splitmix64(seed + 0x9e3779b97f4a7c15ULL));
    CounterRng feat_rng(splitmix64(seed * 0x2545f4914f6cdd1dULL + 1));

    const double half = 0.5 * extent;
    for (int obj = 0; obj < n_objects; ++obj) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            AABox box;
            box.sx = box_rng.uniform(kMinBoxSide, kMaxBoxSide);
            box.sy = box_rng.uniform(kMinBoxSide, kMaxBoxSide);
            box.sz = box_rng.uniform(kMinBoxSide, kMaxBoxSide);
            box.class_id = static_cast<int>(box_rng.next_below(kClassCount));
            box.center.x = box_rng.uniform(-half + 0.5 * box.sx, half - 0.5 * box.sx);
            box.center.y = box_rng.uniform(-half + 0.5 * box.sy, half - 0.5 * box.sy);
            box.center.z = 0.5 * box.sz;
            placed = std::none_of(scene.boxes.begin(), scene.boxes.end(), [&](const AABox& other) {
                return boxes_touch(box, other, kBoxGap);
            });
            if (placed) {
                scene.boxes.push_back(box);
            }
        }
        if (!placed) {
            throw std::invalid_argument("box placement infeasible after 1000 attempts");
        }
    }

    int foreground_total = 0;
    int per_box = 0;
    if (n_objects > 0) {
        per_box = std::max(kMinPointsPerBox,
                           static_cast<int>(std::lround(kForegroundFraction * n_points))
                               / n_objects);
        foreground_total = per_box * n_objects;
        if (foreground_total > n_points / 2) {
            throw std::invalid_argument("too many objects for the point budget");
        }
    }

    std::vector<Point3> points;
    points.reserve(n_points);
    for (const AABox& box : scene.boxes) {
        for (int i = 0; i < per_box; ++i) {
            points.push_back(sample_on_surface(box, point_rng));
        }
    }

    const int background_total = n_points - foreground_total;
    const int floor_total = (6 * background_total) / 10;
    long attempts_left = 100L * std::max(background_total, 1);
    for (int i = 0; i < background_total; ++i) {
        Point3 p;
        do {
            p.x = point_rng.uniform(-half, half);
            p.y = point_rng.uniform(-half, half);
            p.z = i < floor_total ? 0.0 : point_rng.uniform(0.0, half);
            if (--attempts_left < 0) {
                throw std::invalid_argument("background placement infeasible");
            }
        } while (inside_any(p, scene.boxes));
        points.push_back(p);
    }

    scene.cloud.positions = std::move(points);
    scene.cloud.features.resize(n_points, n_channels);
    for (int i = 0; i < n_points; ++i) {
        for (int c = 0; c < n_channels; ++c) {
            scene.cloud.features(i, c) = feat_rng.next_unit();
        }
    }
    scene.cloud.validate();

    for (const AABox& box : scene.boxes) {
        const long inside =
            std::count_if(scene.cloud.positions.begin(), scene.cloud.positions.end(),
                          [&](const Point3& p) { return box.contains(p); });
        if (inside < 20) {
            throw std::logic_error("generated box holds fewer than 20 points");
        }
    }
    return scene;
}

}  // namespace sbmc
