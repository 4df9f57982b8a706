#include "sbmc/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbmc {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok, int line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid real '" + tok + "'");
    return v;
}

long parse_long(const std::string& tok, int line) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid integer '" + tok + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream iss(line);
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
}

bool has_binary_magic(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    const bool match = in.gcount() == 4 && std::memcmp(magic, colfmt::kMagic, 4) == 0;
    in.clear();
    in.seekg(0);
    return match;
}

std::pair<PointCloud, std::vector<AABox>> load_scene_binary(std::istream& in);

}  // namespace

std::vector<AABox> load_boxes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open box file: " + path);
    std::vector<AABox> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 7) throw ParseError(line_no, "expected 7 box fields");
        AABox b;
        b.center = {parse_double(toks[0], line_no), parse_double(toks[1], line_no),
                    parse_double(toks[2], line_no)};
        b.sx = parse_double(toks[3], line_no);
        b.sy = parse_double(toks[4], line_no);
        b.sz = parse_double(toks[5], line_no);
        b.class_id = static_cast<int>(parse_long(toks[6], line_no));
        b.validate();
        boxes.push_back(b);
    }
    return boxes;
}

void save_boxes(const std::string& path, const std::vector<AABox>& boxes) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write box file: " + path);
    for (const auto& b : boxes) {
        out << format_double(b.center.x) << ' ' << format_double(b.center.y) << ' '
            << format_double(b.center.z) << ' ' << format_double(b.sx) << ' '
            << format_double(b.sy) << ' ' << format_double(b.sz) << ' ' << b.class_id << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::pair<PointCloud, std::vector<AABox>> load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scene file: " + path);
    if (has_binary_magic(in)) return load_scene_binary(in);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    const auto header = split_ws(line);
    if (header.size() != 2) throw ParseError(1, "header must be 'N C'");
    const long n = parse_long(header[0], 1);
    const long c = parse_long(header[1], 1);
    if (n < 1) throw ParseError(1, "N must be >= 1");
    if (c < 0) throw ParseError(1, "C must be >= 0");

    PointCloud cloud;
    cloud.positions.reserve(static_cast<std::size_t>(n));
    cloud.features.resize(n, c);
    for (long i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i) + 2;
        if (!std::getline(in, line)) throw ParseError(line_no, "unexpected end of file");
        const auto toks = split_ws(line);
        if (static_cast<long>(toks.size()) != 3 + c)
            throw ParseError(line_no, "expected " + std::to_string(3 + c) + " values, got " +
                                          std::to_string(toks.size()));
        cloud.positions.push_back({parse_double(toks[0], line_no), parse_double(toks[1], line_no),
                                   parse_double(toks[2], line_no)});
        for (long j = 0; j < c; ++j)
            cloud.features(i, j) = parse_double(toks[3 + static_cast<std::size_t>(j)], line_no);
    }
    cloud.validate();

    std::vector<AABox> boxes;
    std::ifstream probe(path + ".boxes");
    if (probe.good()) {
        probe.close();
        boxes = load_boxes(path + ".boxes");
    }
    return {std::move(cloud), std::move(boxes)};
}

void save_scene(const std::string& path, const PointCloud& cloud, const std::vector<AABox>& boxes) {
    cloud.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scene file: " + path);
    out << cloud.size() << ' ' << cloud.channels() << '\n';
    for (int i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud.positions[i];
        out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
        for (int j = 0; j < cloud.channels(); ++j) out << ' ' << format_double(cloud.features(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
    save_boxes(path + ".boxes", boxes);
}

// ---- binary columnar -------------------------------------------------------

namespace colfmt {

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw IoError("truncated binary stream (u32)");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw IoError("truncated binary stream (u64)");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f32_array(std::ostream& out, const std::vector<float>& v) {
    write_u64(out, v.size());
    for (float f : v) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
}

std::vector<float> read_f32_array(std::istream& in) {
    const std::uint64_t n = read_u64(in);
    std::vector<float> v(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint32_t bits = read_u32(in);
        std::memcpy(&v[i], &bits, 4);
    }
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint64_t n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("truncated binary stream (string)");
    return s;
}

void write_header(std::ostream& out, std::uint32_t kind) {
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, kind);
}

std::uint32_t read_header(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(1, "bad magic, not an SBMC binary file");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw ParseError(1, "unsupported SBMC version " + std::to_string(version));
    return read_u32(in);
}

}  // namespace colfmt

namespace {

std::pair<PointCloud, std::vector<AABox>> load_scene_binary(std::istream& in) {
    using namespace colfmt;
    const std::uint32_t kind = read_header(in);
    if (kind != kKindScene) throw ParseError(1, "SBMC file is not a scene");
    const std::uint64_t n = read_u64(in);
    const std::uint64_t c = read_u64(in);
    if (n < 1) throw ParseError(1, "N must be >= 1");

    const auto xs = read_f32_array(in);
    const auto ys = read_f32_array(in);
    const auto zs = read_f32_array(in);
    if (xs.size() != n || ys.size() != n || zs.size() != n)
        throw ParseError(1, "position column length mismatch");

    PointCloud cloud;
    cloud.positions.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        cloud.positions.push_back({xs[i], ys[i], zs[i]});
    cloud.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    for (std::uint64_t j = 0; j < c; ++j) {
        const auto col = read_f32_array(in);
        if (col.size() != n) throw ParseError(1, "feature column length mismatch");
        for (std::uint64_t i = 0; i < n; ++i)
            cloud.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    cloud.validate();

    const std::uint64_t nb = read_u64(in);
    std::vector<std::vector<float>> cols(7);
    for (auto& col : cols) {
        col = read_f32_array(in);
        if (col.size() != nb) throw ParseError(1, "box column length mismatch");
    }
    std::vector<AABox> boxes;
    boxes.reserve(nb);
    for (std::uint64_t i = 0; i < nb; ++i) {
        AABox b({cols[0][i], cols[1][i], cols[2][i]}, cols[3][i], cols[4][i], cols[5][i],
                static_cast<int>(cols[6][i]));
        b.validate();
        boxes.push_back(b);
    }
    return {std::move(cloud), std::move(boxes)};
}

}  // namespace

void save_scene_binary(const std::string& path, const PointCloud& cloud,
                       const std::vector<AABox>& boxes) {
    using namespace colfmt;
    cloud.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write scene file: " + path);
    write_header(out, kKindScene);
    const std::uint64_t n = static_cast<std::uint64_t>(cloud.size());
    const std::uint64_t c = static_cast<std::uint64_t>(cloud.channels());
    write_u64(out, n);
    write_u64(out, c);

    std::vector<float> col(n);
    for (std::uint64_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.positions[i].x);
    write_f32_array(out, col);
    for (std::uint64_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.positions[i].y);
    write_f32_array(out, col);
    for (std::uint64_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.positions[i].z);
    write_f32_array(out, col);
    for (std::uint64_t j = 0; j < c; ++j) {
        for (std::uint64_t i = 0; i < n; ++i)
            col[i] = static_cast<float>(cloud.features(static_cast<Eigen::Index>(i),
                                                       static_cast<Eigen::Index>(j)));
        write_f32_array(out, col);
    }

    write_u64(out, boxes.size());
    std::vector<float> bc(boxes.size());
    const auto write_box_col = [&](auto getter) {
        for (std::size_t i = 0; i < boxes.size(); ++i) bc[i] = static_cast<float>(getter(boxes[i]));
        write_f32_array(out, bc);
    };
    write_box_col([](const AABox& b) { return b.center.x; });
    write_box_col([](const AABox& b) { return b.center.y; });
    write_box_col([](const AABox& b) { return b.center.z; });
    write_box_col([](const AABox& b) { return b.sx; });
    write_box_col([](const AABox& b) { return b.sy; });
    write_box_col([](const AABox& b) { return b.sz; });
    write_box_col([](const AABox& b) { return b.class_id; });
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DetectionRecord> load_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections file: " + path);
    std::vector<DetectionRecord> dets;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 8) throw ParseError(line_no, "expected 8 detection fields");
        DetectionRecord d;
        d.box.center = {parse_double(toks[0], line_no), parse_double(toks[1], line_no),
                        parse_double(toks[2], line_no)};
        d.box.sx = parse_double(toks[3], line_no);
        d.box.sy = parse_double(toks[4], line_no);
        d.box.sz = parse_double(toks[5], line_no);
        d.box.class_id = static_cast<int>(parse_long(toks[6], line_no));
        d.score = parse_double(toks[7], line_no);
        d.box.validate();
        dets.push_back(d);
    }
    return dets;
}

void save_detections(const std::string& path, const std::vector<DetectionRecord>& dets) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write detections file: " + path);
    for (const auto& d : dets) {
        out << format_double(d.box.center.x) << ' ' << format_double(d.box.center.y) << ' '
            << format_double(d.box.center.z) << ' ' << format_double(d.box.sx) << ' '
            << format_double(d.box.sy) << ' ' << format_double(d.box.sz) << ' ' << d.box.class_id
            << ' ' << format_double(d.score) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace sbmc
