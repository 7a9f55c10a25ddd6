#include "glanceseg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace glanceseg {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

[[noreturn]] void parse_fail(const std::string& source, int line, const std::string& what) {
    throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& text, const std::string& source, int line, const std::string& key) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size())
        parse_fail(source, line, "bad number for '" + key + "': " + text);
    return v;
}

int parse_int(const std::string& text, const std::string& source, int line, const std::string& key) {
    int v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size())
        parse_fail(source, line, "bad integer for '" + key + "': " + text);
    return v;
}

std::pair<std::string, std::string> split_pair(const std::string& text, const std::string& source, int line,
                                               const std::string& key) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) parse_fail(source, line, "expected two comma-separated values for '" + key + "'");
    return {trim(text.substr(0, comma)), trim(text.substr(comma + 1))};
}

void require(bool ok, const char* field) {
    if (!ok) throw Error(ErrorCode::InvalidParameter, std::string("invalid config value: ") + field);
}

}  // namespace

void PipelineConfig::validate() const {
    require(theta_deg > 0, "theta_deg");
    require(distance_R_cm > 0, "distance_R_cm");
    require(monitor_px.width > 0 && monitor_px.height > 0, "monitor_px");
    require(monitor_cm_w > 0 && monitor_cm_h > 0, "monitor_cm");
    require(sigma_px > 0, "sigma_px");
    require(gaze_binarize_quantile > 0 && gaze_binarize_quantile < 1, "gaze_binarize_quantile");
    require(roi_min_M > 0, "roi_min_M");
    require(enhance_alpha > 0, "enhance_alpha");
    require(std::isfinite(enhance_beta), "enhance_beta");
    require(enhance_lambda > 0, "enhance_lambda");
    require(!enhance_blur_sigma || *enhance_blur_sigma > 0, "enhance_blur_sigma");
    require(ft_cutoff > 0, "ft_cutoff");
    require(fusion_gamma > 0, "fusion_gamma");
    require(fusion_eta > 0, "fusion_eta");
    require(saliency_binarize_quantile > 0 && saliency_binarize_quantile < 1, "saliency_binarize_quantile");
    require(grid_N >= 2, "grid_N");
    require(dkf_roundness_min > 0, "dkf_roundness_min");
    require(mbd_max_passes > 0, "mbd_max_passes");
}

double sigma_from_geometry(double theta_deg, double distance_R_cm, Size monitor_px, double monitor_cm_w,
                           double monitor_cm_h) {
    // A zero visual angle is a valid degenerate input (sigma 0).
    if (!(theta_deg >= 0) || !(distance_R_cm > 0) || monitor_px.width <= 0 || monitor_px.height <= 0 ||
        !(monitor_cm_w > 0) || !(monitor_cm_h > 0))
        throw Error(ErrorCode::InvalidParameter, "sigma_from_geometry: inputs must be positive");
    const double px_area = static_cast<double>(monitor_px.width) * static_cast<double>(monitor_px.height);
    return theta_deg / 360.0 * std::numbers::pi * distance_R_cm * std::sqrt(px_area / (monitor_cm_w * monitor_cm_h));
}

PipelineConfig parse_config(std::istream& in, const std::string& source_name) {
    PipelineConfig cfg;
    const std::string& src = source_name;

    using Setter = std::function<void(const std::string&, int)>;
    auto real = [&](double& field, std::string key) -> Setter {
        return [&field, &src, key](const std::string& v, int line) { field = parse_double(v, src, line, key); };
    };
    auto integer = [&](int& field, std::string key) -> Setter {
        return [&field, &src, key](const std::string& v, int line) { field = parse_int(v, src, line, key); };
    };

    const std::map<std::string, Setter> setters = {
        {"theta_deg", real(cfg.theta_deg, "theta_deg")},
        {"distance_R_cm", real(cfg.distance_R_cm, "distance_R_cm")},
        {"monitor_px",
         [&](const std::string& v, int line) {
             auto [w, h] = split_pair(v, src, line, "monitor_px");
             cfg.monitor_px = {parse_int(w, src, line, "monitor_px"), parse_int(h, src, line, "monitor_px")};
         }},
        {"monitor_cm",
         [&](const std::string& v, int line) {
             auto [w, h] = split_pair(v, src, line, "monitor_cm");
             cfg.monitor_cm_w = parse_double(w, src, line, "monitor_cm");
             cfg.monitor_cm_h = parse_double(h, src, line, "monitor_cm");
         }},
        {"sigma_px", real(cfg.sigma_px, "sigma_px")},
        {"gaze_binarize_quantile", real(cfg.gaze_binarize_quantile, "gaze_binarize_quantile")},
        {"roi_min_M", integer(cfg.roi_min_M, "roi_min_M")},
        {"enhance_alpha", real(cfg.enhance_alpha, "enhance_alpha")},
        {"enhance_beta", real(cfg.enhance_beta, "enhance_beta")},
        {"enhance_lambda", real(cfg.enhance_lambda, "enhance_lambda")},
        {"enhance_blur_sigma",
         [&](const std::string& v, int line) {
             if (v == "auto")
                 cfg.enhance_blur_sigma.reset();
             else
                 cfg.enhance_blur_sigma = parse_double(v, src, line, "enhance_blur_sigma");
         }},
        {"ft_cutoff", real(cfg.ft_cutoff, "ft_cutoff")},
        {"fusion_gamma", real(cfg.fusion_gamma, "fusion_gamma")},
        {"fusion_eta", real(cfg.fusion_eta, "fusion_eta")},
        {"saliency_binarize_quantile", real(cfg.saliency_binarize_quantile, "saliency_binarize_quantile")},
        {"grid_N", integer(cfg.grid_N, "grid_N")},
        {"dkf_roundness_min", real(cfg.dkf_roundness_min, "dkf_roundness_min")},
        {"mbd_max_passes", integer(cfg.mbd_max_passes, "mbd_max_passes")},
    };

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string text = trim(raw);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) parse_fail(src, line, "expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) parse_fail(src, line, "unknown config key '" + key + "'");
        if (value.empty()) parse_fail(src, line, "missing value for '" + key + "'");
        it->second(value, line);
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Parse, src + ": " + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    return parse_config(in, path.string());
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "# glanceseg pipeline configuration\n";
    out << "theta_deg = " << format_double(c.theta_deg) << '\n';
    out << "distance_R_cm = " << format_double(c.distance_R_cm) << '\n';
    out << "monitor_px = " << c.monitor_px.width << ',' << c.monitor_px.height << '\n';
    out << "monitor_cm = " << format_double(c.monitor_cm_w) << ',' << format_double(c.monitor_cm_h) << '\n';
    out << "sigma_px = " << format_double(c.sigma_px) << '\n';
    out << "gaze_binarize_quantile = " << format_double(c.gaze_binarize_quantile) << '\n';
    out << "roi_min_M = " << c.roi_min_M << '\n';
    out << "enhance_alpha = " << format_double(c.enhance_alpha) << '\n';
    out << "enhance_beta = " << format_double(c.enhance_beta) << '\n';
    out << "enhance_lambda = " << format_double(c.enhance_lambda) << '\n';
    out << "enhance_blur_sigma = " << (c.enhance_blur_sigma ? format_double(*c.enhance_blur_sigma) : "auto") << '\n';
    out << "ft_cutoff = " << format_double(c.ft_cutoff) << '\n';
    out << "fusion_gamma = " << format_double(c.fusion_gamma) << '\n';
    out << "fusion_eta = " << format_double(c.fusion_eta) << '\n';
    out << "saliency_binarize_quantile = " << format_double(c.saliency_binarize_quantile) << '\n';
    out << "grid_N = " << c.grid_N << '\n';
    out << "dkf_roundness_min = " << format_double(c.dkf_roundness_min) << '\n';
    out << "mbd_max_passes = " << c.mbd_max_passes << '\n';
    return out.str();
}

void save_config(const std::filesystem::path& path, const PipelineConfig& config) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write config file " + path.string());
    out << format_config(config);
}

}  // namespace glanceseg
