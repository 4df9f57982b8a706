#include "sbmc/weights.hpp"

#include "sbmc/io.hpp"
#include "sbmc/ray_engine.hpp"
#include "sbmc/rng.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sbmc {
namespace {

constexpr int kAnchorWidth = 32;
constexpr int kMuWidth = 128;
constexpr int kVoteHidden = 128;
constexpr int kRayHidden = 256;

int fan_size(const PipelineConfig& cfg) {
    const auto counts = ray_distribution(cfg.p_polar, cfg.ray_multiplier);
    return std::accumulate(counts.begin(), counts.end(), 0);
}

template <typename Bundle, typename Fn>
void for_each_mlp(Bundle& b, Fn&& fn) {
    fn("sa_seed", b.sa_seed);
    fn("vote", b.vote);
    fn("scale_head", b.scale_head);
    fn("anchor_sa_coarse", b.anchor_sa_coarse);
    fn("anchor_sa_fine", b.anchor_sa_fine);
    fn("mask_coarse", b.mask_coarse);
    fn("mask_fine", b.mask_fine);
    fn("point_proj_coarse", b.point_proj_coarse);
    fn("point_proj_fine", b.point_proj_fine);
    fn("ray_mlp_coarse", b.ray_mlp_coarse);
    fn("ray_mlp_fine", b.ray_mlp_fine);
    fn("fuse", b.fuse);
    fn("combine", b.combine);
    fn("gsc_agg", b.gsc_agg);
    fn("head_shared", b.head_shared);
    fn("head_obj", b.head_obj);
    fn("head_box", b.head_box);
    fn("head_cls", b.head_cls);
}

template <typename Bundle, typename Fn>
void for_each_cgnl(Bundle& b, Fn&& fn) {
    fn("ppc", b.ppc_w);
    fn("ooc", b.ooc_w);
}

std::vector<float> matrix_to_f32(const Eigen::MatrixXd& m) {
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(static_cast<float>(m(r, c)));
        }
    }
    return out;
}

Eigen::MatrixXd f32_to_matrix(const std::vector<float>& v, std::uint64_t rows,
                              std::uint64_t cols) {
    if (v.size() != rows * cols) {
        throw ParseError(0, "weight array length does not match its declared shape");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = v[at++];
        }
    }
    return m;
}

void check_widths(const MlpWeights& mlp, Eigen::Index in, Eigen::Index out, const char* name) {
    mlp.validate();
    if (mlp.in_width() != in || mlp.out_width() != out) {
        throw std::invalid_argument(std::string("weight block '") + name
                                    + "' has the wrong width");
    }
}

}  // namespace

void WeightBundle::validate_against(const PipelineConfig& cfg) const {
    const int c = cfg.seed_feature_width;
    const int n = fan_size(cfg);
    check_widths(sa_seed, 3 + cfg.n_input_channels, c, "sa_seed");
    check_widths(vote, c, 3 + c, "vote");
    check_widths(scale_head, c, 1, "scale_head");
    check_widths(anchor_sa_coarse, 3 + c, kAnchorWidth, "anchor_sa_coarse");
    check_widths(anchor_sa_fine, 3 + c, kAnchorWidth, "anchor_sa_fine");
    check_widths(mask_coarse, kAnchorWidth + c, 1, "mask_coarse");
    check_widths(mask_fine, kAnchorWidth + c, 1, "mask_fine");
    check_widths(point_proj_coarse, static_cast<Eigen::Index>(cfg.kc) * kAnchorWidth,
                 kAnchorWidth, "point_proj_coarse");
    check_widths(point_proj_fine, static_cast<Eigen::Index>(cfg.kf) * kAnchorWidth, kAnchorWidth,
                 "point_proj_fine");
    check_widths(ray_mlp_coarse, static_cast<Eigen::Index>(n) * kAnchorWidth, kMuWidth,
                 "ray_mlp_coarse");
    check_widths(ray_mlp_fine, static_cast<Eigen::Index>(n) * kAnchorWidth, kMuWidth,
                 "ray_mlp_fine");
    if (ray_mlp_coarse.layers.size() != 3 || ray_mlp_fine.layers.size() != 3) {
        throw std::invalid_argument("ray mlps must have two hidden layers");
    }
    check_widths(fuse, 2 * kMuWidth, cfg.g_width, "fuse");
    check_widths(combine, c + cfg.g_width, c, "combine");
    ppc_w.validate();
    ooc_w.validate();
    if (ppc_w.channels() != c || ooc_w.channels() != c
        || ppc_w.transform_width() != cfg.cgnl_transform_width
        || ooc_w.transform_width() != cfg.cgnl_transform_width) {
        throw std::invalid_argument("cgnl weight widths do not match the config");
    }
    check_widths(gsc_agg, 2 * c, c, "gsc_agg");
    check_widths(head_shared, c, cfg.head_hidden_width, "head_shared");
    check_widths(head_obj, cfg.head_hidden_width, 1, "head_obj");
    check_widths(head_box, cfg.head_hidden_width, 6, "head_box");
    check_widths(head_cls, cfg.head_hidden_width, 18, "head_cls");
}

WeightBundle default_weights(const PipelineConfig& cfg) {
    cfg.validate();
    const int c = cfg.seed_feature_width;
    const int n = fan_size(cfg);
    const std::uint64_t s = cfg.seed;
    const auto stream = [](const char* name) { return fnv1a(name); };

    WeightBundle b;
    b.sa_seed = init_mlp({3 + cfg.n_input_channels, c, c},
                         {Activation::relu, Activation::relu}, s, stream("sa_seed"));
    b.vote = init_mlp({c, kVoteHidden, 3 + c}, {Activation::relu, Activation::identity}, s,
                      stream("vote"));
    b.scale_head =
        init_mlp({c, c, 1}, {Activation::relu, Activation::identity}, s, stream("scale_head"));
    b.anchor_sa_coarse =
        init_mlp({3 + c, kAnchorWidth}, {Activation::relu}, s, stream("anchor_sa_coarse"));
    b.anchor_sa_fine =
        init_mlp({3 + c, kAnchorWidth}, {Activation::relu}, s, stream("anchor_sa_fine"));
    b.mask_coarse = init_mlp({kAnchorWidth + c, kAnchorWidth, 1},
                             {Activation::relu, Activation::identity}, s, stream("mask_coarse"));
    b.mask_fine = init_mlp({kAnchorWidth + c, kAnchorWidth, 1},
                           {Activation::relu, Activation::identity}, s, stream("mask_fine"));
    b.point_proj_coarse = init_mlp({cfg.kc * kAnchorWidth, kAnchorWidth}, {Activation::identity},
                                   s, stream("point_proj_coarse"));
    b.point_proj_fine = init_mlp({cfg.kf * kAnchorWidth, kAnchorWidth}, {Activation::identity},
                                 s, stream("point_proj_fine"));
    b.ray_mlp_coarse =
        init_mlp({n * kAnchorWidth, kRayHidden, kMuWidth, kMuWidth},
                 {Activation::relu, Activation::relu, Activation::identity}, s,
                 stream("ray_mlp_coarse"));
    b.ray_mlp_fine =
        init_mlp({n * kAnchorWidth, kRayHidden, kMuWidth, kMuWidth},
                 {Activation::relu, Activation::relu, Activation::identity}, s,
                 stream("ray_mlp_fine"));
    b.fuse = init_mlp({2 * kMuWidth, kMuWidth, cfg.g_width},
                      {Activation::relu, Activation::identity}, s, stream("fuse"));
    b.combine =
        init_mlp({c + cfg.g_width, c}, {Activation::identity}, s, stream("combine"));

    const int ct = cfg.cgnl_transform_width;
    b.ppc_w.theta = init_weights(ct, c, s, stream("ppc.theta"));
    b.ppc_w.phi = init_weights(ct, c, s, stream("ppc.phi"));
    b.ppc_w.g = init_weights(ct, c, s, stream("ppc.g"));
    b.ppc_w.out = init_weights(c, ct, s, stream("ppc.out"));
    b.ppc_w.scale = 1.0 / ct;
    b.ooc_w.theta = init_weights(ct, c, s, stream("ooc.theta"));
    b.ooc_w.phi = init_weights(ct, c, s, stream("ooc.phi"));
    b.ooc_w.g = init_weights(ct, c, s, stream("ooc.g"));
    b.ooc_w.out = init_weights(c, ct, s, stream("ooc.out"));
    b.ooc_w.scale = 1.0 / ct;

    b.gsc_agg = init_mlp({2 * c, c, c}, {Activation::relu, Activation::identity}, s,
                         stream("gsc_agg"));
    b.head_shared =
        init_mlp({c, cfg.head_hidden_width}, {Activation::relu}, s, stream("head_shared"));
    b.head_obj =
        init_mlp({cfg.head_hidden_width, 1}, {Activation::sigmoid}, s, stream("head_obj"));
    b.head_box =
        init_mlp({cfg.head_hidden_width, 6}, {Activation::identity}, s, stream("head_box"));
    b.head_cls =
        init_mlp({cfg.head_hidden_width, 18}, {Activation::identity}, s, stream("head_cls"));
    return b;
}

void zero_attention(WeightBundle& bundle) {
    bundle.ppc_w = CgnlWeights::zeros(bundle.ppc_w.channels(), bundle.ppc_w.transform_width());
    bundle.ooc_w = CgnlWeights::zeros(bundle.ooc_w.channels(), bundle.ooc_w.transform_width());
    for (MlpLayer& layer : bundle.gsc_agg.layers) {
        layer.weight.setZero();
        layer.bias.setZero();
    }
}

void save_weights(const std::filesystem::path& path, const WeightBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open weights file for writing: " + path.string());
    }
    colfmt::write_header(out, colfmt::kKindWeights);

    std::uint64_t n_mlps = 0;
    for_each_mlp(bundle, [&](const char*, const MlpWeights&) { ++n_mlps; });
    colfmt::write_u64(out, n_mlps);
    for_each_mlp(bundle, [&](const char* name, const MlpWeights& mlp) {
        colfmt::write_string(out, name);
        colfmt::write_u32(out, static_cast<std::uint32_t>(mlp.layers.size()));
        for (const MlpLayer& layer : mlp.layers) {
            colfmt::write_u32(out, static_cast<std::uint32_t>(layer.act));
            colfmt::write_u64(out, static_cast<std::uint64_t>(layer.weight.rows()));
            colfmt::write_u64(out, static_cast<std::uint64_t>(layer.weight.cols()));
        }
    });
    std::uint64_t n_cgnl = 0;
    for_each_cgnl(bundle, [&](const char*, const CgnlWeights&) { ++n_cgnl; });
    colfmt::write_u64(out, n_cgnl);
    for_each_cgnl(bundle, [&](const char* name, const CgnlWeights& w) {
        colfmt::write_string(out, name);
        colfmt::write_u64(out, static_cast<std::uint64_t>(w.transform_width()));
        colfmt::write_u64(out, static_cast<std::uint64_t>(w.channels()));
    });

    for_each_mlp(bundle, [&](const char*, const MlpWeights& mlp) {
        for (const MlpLayer& layer : mlp.layers) {
            colfmt::write_f32_array(out, matrix_to_f32(layer.weight));
            colfmt::write_f32_array(out, matrix_to_f32(layer.bias));
        }
    });
    for_each_cgnl(bundle, [&](const char*, const CgnlWeights& w) {
        colfmt::write_f32_array(out, matrix_to_f32(w.theta));
        colfmt::write_f32_array(out, matrix_to_f32(w.phi));
        colfmt::write_f32_array(out, matrix_to_f32(w.g));
        colfmt::write_f32_array(out, matrix_to_f32(w.out));
        colfmt::write_f32_array(out, {static_cast<float>(w.scale)});
    });
    if (!out) {
        throw IoError("failed writing weights file: " + path.string());
    }
}

WeightBundle load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open weights file: " + path.string());
    }
    if (colfmt::read_header(in) != colfmt::kKindWeights) {
        throw ParseError(0, "not a weight bundle file");
    }

    struct LayerShape {
        Activation act;
        std::uint64_t rows, cols;
    };
    struct MlpShape {
        std::string name;
        std::vector<LayerShape> layers;
    };
    struct CgnlShape {
        std::string name;
        std::uint64_t ct, c;
    };

    const std::uint64_t n_mlps = colfmt::read_u64(in);
    std::vector<MlpShape> mlp_shapes(n_mlps);
    for (auto& shape : mlp_shapes) {
        shape.name = colfmt::read_string(in);
        const std::uint32_t n_layers = colfmt::read_u32(in);
        shape.layers.resize(n_layers);
        for (auto& layer : shape.layers) {
            const std::uint32_t act = colfmt::read_u32(in);
            if (act > static_cast<std::uint32_t>(Activation::softplus)) {
                throw ParseError(0, "unknown activation code in weight bundle");
            }
            layer.act = static_cast<Activation>(act);
            layer.rows = colfmt::read_u64(in);
            layer.cols = colfmt::read_u64(in);
        }
    }
    const std::uint64_t n_cgnl = colfmt::read_u64(in);
    std::vector<CgnlShape> cgnl_shapes(n_cgnl);
    for (auto& shape : cgnl_shapes) {
        shape.name = colfmt::read_string(in);
        shape.ct = colfmt::read_u64(in);
        shape.c = colfmt::read_u64(in);
    }

    WeightBundle bundle;
    std::size_t mlp_at = 0;
    for_each_mlp(bundle, [&](const char* name, MlpWeights& mlp) {
        if (mlp_at >= mlp_shapes.size() || mlp_shapes[mlp_at].name != name) {
            throw ParseError(0, std::string("weight bundle misses block '") + name + "'");
        }
        const MlpShape& shape = mlp_shapes[mlp_at++];
        mlp.layers.clear();
        for (const LayerShape& ls : shape.layers) {
            MlpLayer layer;
            layer.weight = f32_to_matrix(colfmt::read_f32_array(in), ls.rows, ls.cols);
            const Eigen::MatrixXd bias = f32_to_matrix(colfmt::read_f32_array(in), ls.rows, 1);
            layer.bias = bias.col(0);
            layer.act = ls.act;
            mlp.layers.push_back(std::move(layer));
        }
        mlp.validate();
    });
    std::size_t cgnl_at = 0;
    for_each_cgnl(bundle, [&](const char* name, CgnlWeights& w) {
        if (cgnl_at >= cgnl_shapes.size() || cgnl_shapes[cgnl_at].name != name) {
            throw ParseError(0, std::string("weight bundle misses cgnl block '") + name + "'");
        }
        const CgnlShape& shape = cgnl_shapes[cgnl_at++];
        w.theta = f32_to_matrix(colfmt::read_f32_array(in), shape.ct, shape.c);
        w.phi = f32_to_matrix(colfmt::read_f32_array(in), shape.ct, shape.c);
        w.g = f32_to_matrix(colfmt::read_f32_array(in), shape.ct, shape.c);
        w.out = f32_to_matrix(colfmt::read_f32_array(in), shape.c, shape.ct);
        const std::vector<float> scale = colfmt::read_f32_array(in);
        if (scale.size() != 1) {
            throw ParseError(0, "cgnl scale must be a single value");
        }
        w.scale = scale[0];
        w.validate();
    });
    if (!in) {
        throw ParseError(0, "weight bundle truncated");
    }
    return bundle;
}

}  // namespace sbmc
