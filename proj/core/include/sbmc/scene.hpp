#pragma once

#include "sbmc/types.hpp"

#include <cstdint>
#include <vector>

namespace sbmc {

/// A generated desk-scale scene: surface-sampled boxes over a floor plane
/// with uniform clutter. Every box contains at least 20 points and lies
/// inside the extent.
struct SyntheticScene {
    PointCloud cloud;
    std::vector<AABox> boxes;
    std::uint64_t seed = 0;
};

/// Deterministic scene for `seed`. Boxes get random class, size and a
/// non-overlapping floor position; roughly 18% of the points sample box
/// surfaces and the rest split between the floor plane and volume clutter.
/// Throws when a box cannot be placed within 1000 attempts.
SyntheticScene gen_scene(std::uint64_t seed, int n_objects, double extent, int n_points = 2048,
                         int n_channels = 1);

}  // namespace sbmc
