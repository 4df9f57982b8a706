#include "sbmc/types.hpp"

#include <algorithm>
#include <numeric>

namespace sbmc {

void PointCloud::validate() const {
    if (positions.empty()) throw std::invalid_argument("point cloud must contain at least one point");
    if (features.size() > 0 && features.rows() != static_cast<Eigen::Index>(positions.size()))
        throw std::invalid_argument("feature row count does not match point count");
    for (const auto& p : positions)
        if (!p.finite()) throw std::invalid_argument("non-finite point coordinate");
    if (features.size() > 0 && !features.allFinite())
        throw std::invalid_argument("non-finite feature entry");
}

void AABox::validate() const {
    if (!(sx > 0.0 && sy > 0.0 && sz > 0.0))
        throw std::invalid_argument("box size components must be positive");
    if (!center.finite()) throw std::invalid_argument("non-finite box center");
    if (class_id < 0) throw std::invalid_argument("class_id must be >= 0");
}

double half_diagonal(const AABox& box) {
    return 0.5 * std::sqrt(box.sx * box.sx + box.sy * box.sy + box.sz * box.sz);
}

std::vector<int> canonical_order(const PointCloud& cloud) {
    std::vector<int> order(cloud.positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const Point3& pa = cloud.positions[a];
        const Point3& pb = cloud.positions[b];
        if (pa.x != pb.x) return pa.x < pb.x;
        if (pa.y != pb.y) return pa.y < pb.y;
        return pa.z < pb.z;
    });
    return order;
}

PointCloud canonical_sort(const PointCloud& cloud) {
    const std::vector<int> order = canonical_order(cloud);
    PointCloud out;
    out.positions.reserve(cloud.positions.size());
    for (int idx : order) out.positions.push_back(cloud.positions[idx]);
    if (cloud.features.size() > 0) {
        out.features.resize(cloud.features.rows(), cloud.features.cols());
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(order.size()); ++i)
            out.features.row(i) = cloud.features.row(order[i]);
    } else {
        out.features.resize(static_cast<Eigen::Index>(out.positions.size()), 0);
    }
    return out;
}

}  // namespace sbmc
