#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbmc {

/// Row-per-sample feature storage; channel count is fixed per use site.
using FeatureMatrix = Eigen::MatrixXd;

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3() = default;
    Point3(double px, double py, double pz) : x(px), y(py), z(pz) {}

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    double squared_norm() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(squared_norm()); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    bool operator==(const Point3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

/// Positions and per-point features for one scene. Features may be empty
/// (zero channels) but always carry one row per point.
struct PointCloud {
    std::vector<Point3> positions;
    FeatureMatrix features;  // [N x C], C >= 0

    int size() const { return static_cast<int>(positions.size()); }
    int channels() const { return static_cast<int>(features.cols()); }

    void validate() const;
};

/// Axis-aligned box: center plus full edge lengths, all in meters.
struct AABox {
    Point3 center;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    int class_id = 0;

    AABox() = default;
    AABox(Point3 c, double ex, double ey, double ez, int cls = 0)
        : center(c), sx(ex), sy(ey), sz(ez), class_id(cls) {}

    double volume() const { return sx * sy * sz; }

    /// Boundary-inclusive membership.
    bool contains(const Point3& p) const {
        return std::abs(p.x - center.x) <= 0.5 * sx &&
               std::abs(p.y - center.y) <= 0.5 * sy &&
               std::abs(p.z - center.z) <= 0.5 * sz;
    }

    void validate() const;
};

/// Half the length of the box space diagonal, the ray-length target scale.
double half_diagonal(const AABox& box);

/// Lexicographic (x, y, z) order with ties broken by original index.
/// Downstream index tie-breaking is defined against this ordering.
PointCloud canonical_sort(const PointCloud& cloud);

/// Permutation that canonical_sort applies, for callers tracking identities.
std::vector<int> canonical_order(const PointCloud& cloud);

// Error taxonomy: ParseError carries a 1-based line number, IoError marks
// filesystem-level failures, std::invalid_argument marks precondition breaks.
struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sbmc
