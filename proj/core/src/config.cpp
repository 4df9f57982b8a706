#include "sbmc/config.hpp"

#include "sbmc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <string>

namespace sbmc {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ParseError(line, "expected a number, got '" + v + "'");
    }
    return out;
}

long long to_int(const std::string& v, int line) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ParseError(line, "expected an integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& v, int line) {
    if (v == "1" || v == "true") {
        return true;
    }
    if (v == "0" || v == "false") {
        return false;
    }
    throw ParseError(line, "expected a boolean (0/1/true/false), got '" + v + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    const auto positive = [](long long v, const char* what) {
        if (v < 1) {
            throw std::invalid_argument(std::string(what) + " must be >= 1");
        }
    };
    positive(n_input_points, "n_input_points");
    if (n_input_channels < 0) {
        throw std::invalid_argument("n_input_channels must be >= 0");
    }
    positive(n_seeds, "n_seeds");
    positive(upsampled_seeds, "upsampled_seeds");
    positive(n_clusters, "n_clusters");
    if (p_polar < 2) {
        throw std::invalid_argument("p_polar must be >= 2");
    }
    positive(ray_multiplier, "ray_multiplier");
    positive(kc, "kc");
    positive(kf, "kf");
    positive(group_size_seed, "group_size_seed");
    positive(group_size_anchor, "group_size_anchor");
    positive(knn_upsample, "knn_upsample");
    positive(cgnl_groups, "cgnl_groups");
    positive(cgnl_transform_width, "cgnl_transform_width");
    positive(seed_feature_width, "seed_feature_width");
    positive(g_width, "g_width");
    positive(head_hidden_width, "head_hidden_width");

    const auto positive_real = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + " must be positive");
        }
    };
    positive_real(seed_group_radius, "seed_group_radius");
    positive_real(cluster_radius, "cluster_radius");
    positive_real(surface_proximity, "surface_proximity");
    positive_real(positive_radius, "positive_radius");
    positive_real(smooth_l1_beta, "smooth_l1_beta");
    if (anchor_radius < 0.0 || !std::isfinite(anchor_radius)) {
        throw std::invalid_argument("anchor_radius must be >= 0");
    }
    if (surface_shell < 0.0 || !std::isfinite(surface_shell)) {
        throw std::invalid_argument("surface_shell must be >= 0");
    }

    if (n_seeds > n_input_points) {
        throw std::invalid_argument("n_seeds must not exceed n_input_points");
    }
    if (n_clusters > n_seeds) {
        throw std::invalid_argument("n_clusters must not exceed n_seeds");
    }
    if (kappa < -1 || kappa > n_input_points) {
        throw std::invalid_argument("kappa must be -1 or in [0, n_input_points]");
    }
    if (m_fore < -1 || m_fore > n_seeds) {
        throw std::invalid_argument("m_fore must be -1 or in [0, n_seeds]");
    }
    if (use_fbs) {
        const int ek = effective_kappa();
        const int em = effective_m_fore();
        if (em > std::min(n_seeds, ek) || n_seeds - em > n_input_points - ek) {
            throw std::invalid_argument("kappa/m_fore split cannot produce n_seeds samples");
        }
    }
    if (cgnl_transform_width % cgnl_groups != 0) {
        throw std::invalid_argument("cgnl_groups must divide cgnl_transform_width");
    }
    loss.validate();
}

int PipelineConfig::effective_kappa() const {
    return kappa < 0 ? n_input_points / 2 : kappa;
}

int PipelineConfig::effective_m_fore() const {
    return m_fore < 0 ? n_seeds / 2 : m_fore;
}

double PipelineConfig::effective_anchor_radius(double ray_length) const {
    return anchor_radius > 0.0 ? anchor_radius : 0.5 * ray_length / kc;
}

PipelineConfig parse_config(std::istream& is) {
    PipelineConfig cfg;
    using Setter = std::function<void(PipelineConfig&, const std::string&, int)>;
    static const std::map<std::string, Setter> setters = {
        {"n_input_points", [](auto& c, auto& v, int l) { c.n_input_points = static_cast<int>(to_int(v, l)); }},
        {"n_input_channels", [](auto& c, auto& v, int l) { c.n_input_channels = static_cast<int>(to_int(v, l)); }},
        {"n_seeds", [](auto& c, auto& v, int l) { c.n_seeds = static_cast<int>(to_int(v, l)); }},
        {"upsampled_seeds", [](auto& c, auto& v, int l) { c.upsampled_seeds = static_cast<int>(to_int(v, l)); }},
        {"n_clusters", [](auto& c, auto& v, int l) { c.n_clusters = static_cast<int>(to_int(v, l)); }},
        {"p_polar", [](auto& c, auto& v, int l) { c.p_polar = static_cast<int>(to_int(v, l)); }},
        {"ray_multiplier", [](auto& c, auto& v, int l) { c.ray_multiplier = static_cast<int>(to_int(v, l)); }},
        {"kc", [](auto& c, auto& v, int l) { c.kc = static_cast<int>(to_int(v, l)); }},
        {"kf", [](auto& c, auto& v, int l) { c.kf = static_cast<int>(to_int(v, l)); }},
        {"seed_group_radius", [](auto& c, auto& v, int l) { c.seed_group_radius = to_double(v, l); }},
        {"cluster_radius", [](auto& c, auto& v, int l) { c.cluster_radius = to_double(v, l); }},
        {"anchor_radius", [](auto& c, auto& v, int l) { c.anchor_radius = to_double(v, l); }},
        {"surface_proximity", [](auto& c, auto& v, int l) { c.surface_proximity = to_double(v, l); }},
        {"surface_shell", [](auto& c, auto& v, int l) { c.surface_shell = to_double(v, l); }},
        {"positive_radius", [](auto& c, auto& v, int l) { c.positive_radius = to_double(v, l); }},
        {"smooth_l1_beta", [](auto& c, auto& v, int l) { c.smooth_l1_beta = to_double(v, l); }},
        {"kappa", [](auto& c, auto& v, int l) { c.kappa = static_cast<int>(to_int(v, l)); }},
        {"m_fore", [](auto& c, auto& v, int l) { c.m_fore = static_cast<int>(to_int(v, l)); }},
        {"use_fbs", [](auto& c, auto& v, int l) { c.use_fbs = to_bool(v, l); }},
        {"group_size_seed", [](auto& c, auto& v, int l) { c.group_size_seed = static_cast<int>(to_int(v, l)); }},
        {"group_size_anchor", [](auto& c, auto& v, int l) { c.group_size_anchor = static_cast<int>(to_int(v, l)); }},
        {"knn_upsample", [](auto& c, auto& v, int l) { c.knn_upsample = static_cast<int>(to_int(v, l)); }},
        {"use_ppc", [](auto& c, auto& v, int l) { c.use_ppc = to_bool(v, l); }},
        {"use_ooc", [](auto& c, auto& v, int l) { c.use_ooc = to_bool(v, l); }},
        {"use_gsc", [](auto& c, auto& v, int l) { c.use_gsc = to_bool(v, l); }},
        {"cgnl_groups", [](auto& c, auto& v, int l) { c.cgnl_groups = static_cast<int>(to_int(v, l)); }},
        {"cgnl_transform_width", [](auto& c, auto& v, int l) { c.cgnl_transform_width = static_cast<int>(to_int(v, l)); }},
        {"seed_feature_width", [](auto& c, auto& v, int l) { c.seed_feature_width = static_cast<int>(to_int(v, l)); }},
        {"g_width", [](auto& c, auto& v, int l) { c.g_width = static_cast<int>(to_int(v, l)); }},
        {"head_hidden_width", [](auto& c, auto& v, int l) { c.head_hidden_width = static_cast<int>(to_int(v, l)); }},
        {"vote_norm",
         [](auto& c, auto& v, int l) {
             if (v == "l2") {
                 c.vote_norm = VoteNorm::l2;
             } else if (v == "l1") {
                 c.vote_norm = VoteNorm::l1;
             } else {
                 throw ParseError(l, "vote_norm must be l1 or l2, got '" + v + "'");
             }
         }},
        {"lambda_vote_reg", [](auto& c, auto& v, int l) { c.loss.lambda_vote_reg = to_double(v, l); }},
        {"lambda_fbs", [](auto& c, auto& v, int l) { c.loss.lambda_fbs = to_double(v, l); }},
        {"lambda_rbfg", [](auto& c, auto& v, int l) { c.loss.lambda_rbfg = to_double(v, l); }},
        {"lambda_obj_cls", [](auto& c, auto& v, int l) { c.loss.lambda_obj_cls = to_double(v, l); }},
        {"lambda_box", [](auto& c, auto& v, int l) { c.loss.lambda_box = to_double(v, l); }},
        {"lambda_sem_cls", [](auto& c, auto& v, int l) { c.loss.lambda_sem_cls = to_double(v, l); }},
        {"lambda_scale_reg", [](auto& c, auto& v, int l) { c.loss.lambda_scale_reg = to_double(v, l); }},
        {"lambda_c_cls", [](auto& c, auto& v, int l) { c.loss.lambda_c_cls = to_double(v, l); }},
        {"lambda_f_cls", [](auto& c, auto& v, int l) { c.loss.lambda_f_cls = to_double(v, l); }},
        {"seed", [](auto& c, auto& v, int l) { c.seed = static_cast<std::uint64_t>(to_int(v, l)); }},
    };

    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) {
            raw.resize(hash);
        }
        const std::string entry = trim(raw);
        if (entry.empty()) {
            continue;
        }
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ParseError(line, "expected key=value");
        }
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ParseError(line, "unknown config key '" + key + "'");
        }
        it->second(cfg, value, line);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config file: " + path.string());
    }
    return parse_config(is);
}

}  // namespace sbmc
