#pragma once

#include "sbmc/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace sbmc {

// Scene files come in two flavours:
//  - ASCII: header "N C", then N lines "x y z f1 ... fC"; ground-truth boxes
//    in a "<path>.boxes" sidecar with lines "cx cy cz sx sy sz class_id".
//    Reals are written with shortest round-trip formatting, so a save/load
//    cycle reproduces doubles bit-exactly.
//  - Binary columnar ("SBMC" magic): little-endian float32 arrays with u64
//    length prefixes, boxes embedded. Values are rounded to float32.
// load_scene dispatches on the magic bytes.

std::pair<PointCloud, std::vector<AABox>> load_scene(const std::string& path);
void save_scene(const std::string& path, const PointCloud& cloud, const std::vector<AABox>& boxes);
void save_scene_binary(const std::string& path, const PointCloud& cloud,
                       const std::vector<AABox>& boxes);

std::vector<AABox> load_boxes(const std::string& path);
void save_boxes(const std::string& path, const std::vector<AABox>& boxes);

/// Detections as "cx cy cz sx sy sz class_id score" lines.
struct DetectionRecord {
    AABox box;
    double score = 0.0;
};
std::vector<DetectionRecord> load_detections(const std::string& path);
void save_detections(const std::string& path, const std::vector<DetectionRecord>& dets);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Binary columnar container primitives, shared with the weight-bundle codec.
namespace colfmt {

inline constexpr char kMagic[4] = {'S', 'B', 'M', 'C'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kKindScene = 1;
inline constexpr std::uint32_t kKindWeights = 2;

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32_array(std::ostream& out, const std::vector<float>& v);
void write_string(std::ostream& out, const std::string& s);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
std::vector<float> read_f32_array(std::istream& in);
std::string read_string(std::istream& in);

void write_header(std::ostream& out, std::uint32_t kind);
std::uint32_t read_header(std::istream& in);  // returns kind

}  // namespace colfmt

}  // namespace sbmc
