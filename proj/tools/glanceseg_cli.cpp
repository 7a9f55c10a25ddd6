#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "glanceseg/ablation.hpp"
#include "glanceseg/config.hpp"
#include "glanceseg/dataset.hpp"
#include "glanceseg/external_backend.hpp"
#include "glanceseg/image_io.hpp"
#include "glanceseg/pipeline.hpp"
#include "glanceseg/rle.hpp"
#include "glanceseg/service.hpp"

namespace fs = std::filesystem;
using namespace glanceseg;

namespace {

SessionService* g_service = nullptr;

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidParameter, "invalid N in list: '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::InvalidParameter, "empty N list");
    return out;
}

int cmd_run(const std::string& image, const std::string& gaze, const std::string& config_path, const fs::path& out,
            const std::string& backend_spec, const std::string& debug_dir) {
    const PipelineConfig config = config_or_default(config_path);
    const Frame frame = read_image(image);
    const GazeTrace trace = read_gaze_csv(gaze);
    auto backend = make_backend(backend_spec);
    PipelineOptions options;
    options.debug_dir = debug_dir;
    const PipelineResult r = run_pipeline(frame, trace, config, *backend, options);

    fs::create_directories(out);
    write_png(out / "overlay.png", render_overlay(frame, r));
    write_mask_png(out / "mask.png", union_mask(r.accepted, frame.size()));
    {
        std::ofstream rep(out / "dkf_report.jsonl", std::ios::binary);
        write_dkf_report(rep, r.report);
    }
    json masks = json::array();
    for (const auto& m : r.accepted) masks.push_back(mask_to_json(m.mask, m.confidence));
    write_text(out / "masks.json", json{{"size", {frame.width(), frame.height()}}, {"masks", masks}}.dump() + "\n");
    const nlohmann::ordered_json timing = {{"gaze_ms", r.timing.gaze_ms},         {"roi_ms", r.timing.roi_ms},
                                           {"saliency_ms", r.timing.saliency_ms}, {"prompts_ms", r.timing.prompts_ms},
                                           {"segment_ms", r.timing.segment_ms},   {"dkf_ms", r.timing.dkf_ms},
                                           {"total_ms", r.timing.total_ms},       {"rois", r.rois.size()},
                                           {"prompts", r.prompt_count},           {"candidates", r.candidates.size()},
                                           {"accepted", r.accepted.size()}};
    write_text(out / "timing.json", timing.dump(2) + "\n");
    std::cout << "rois " << r.rois.size() << ", prompts " << r.prompt_count << ", candidates " << r.candidates.size()
              << ", accepted " << r.accepted.size() << ", " << r.timing.total_ms << " ms\n";
    return 0;
}

int cmd_eval(const fs::path& dataset_dir, const std::string& config_path, const fs::path& out, bool ablation,
             const std::string& sweep, const std::string& backend_spec, int dense_n) {
    const PipelineConfig config = config_or_default(config_path);
    auto backend = make_backend(backend_spec);
    const Dataset ds = load_dataset(dataset_dir, &std::cerr);
    if (ds.items.empty()) throw Error(ErrorCode::Io, "dataset " + dataset_dir.string() + " has no complete item");
    fs::create_directories(out);
    bool did = false;
    if (ablation) {
        const AblationResult r = ablation_run(ds, config, *backend, dense_n, &std::cerr);
        write_ablation(out, r);
        for (const EvalReport* e : {&r.dense_grid, &r.saliency, &r.saliency_dkf})
            std::cout << e->label << ": aupr " << e->aupr << ", dice " << e->dice << ", lesion recall "
                      << e->lesion_recall << ", lesion precision " << e->lesion_precision << "\n";
        did = true;
    }
    if (!sweep.empty()) {
        const auto ns = parse_int_list(sweep);
        const auto rows = n_sweep(ds, config, *backend, ns, &std::cerr);
        write_n_sweep(out, rows);
        for (const auto& row : rows)
            std::cout << "N=" << row.n << ": prompts " << row.prompt_count << ", mean " << row.mean_time_ms
                      << " ms/image\n";
        did = true;
    }
    if (!did) {
        Evaluator ev("pipeline");
        for (const auto& item : ds.items) {
            const PipelineResult r = run_pipeline(item.image, item.gaze, config, *backend);
            ev.add(item.id, r.accepted, item.gt, r.prompt_count, r.timing);
        }
        const EvalReport rep = ev.report();
        write_text(out / "report.json", to_json(rep));
        write_text(out / "timing.json", timing_json(rep));
        std::ofstream table(out / "pr.tsv", std::ios::binary);
        write_pr_table(table, rep.pr_curve);
        std::cout << "aupr " << rep.aupr << ", dice " << rep.dice << ", lesion recall " << rep.lesion_recall << "\n";
    }
    return 0;
}

int cmd_synth(const fs::path& out, int count, std::uint64_t seed, const SynthSpec& synth, const GazeSimSpec& gaze) {
    const Dataset ds = make_synthetic_dataset(count, seed, synth, gaze);
    for (const auto& item : ds.items) save_dataset_item(out, item);
    std::cout << "wrote " << ds.items.size() << " items to " << out.string() << "\n";
    return 0;
}

int cmd_serve(const std::string& bind, const std::string& config_path, const std::string& backend_spec, int debounce,
              const std::string& state_dir) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidParameter, "bind address must be host:port");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParameter, "invalid port in '" + bind + "'");
    }
    ServiceOptions opts;
    opts.config = config_or_default(config_path);
    opts.backend = backend_spec;
    opts.debounce_ms = debounce;
    opts.state_dir = state_dir;
    SessionService service(opts);
    const int bound = service.bind(host, port);
    if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + bind);
    std::cout << "listening on " << host << ":" << bound << std::endl;
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
    });
    service.run();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaze-guided microaneurysm segmentation"};
    app.require_subcommand(1);

    std::string image, gaze, config_path, backend = "baseline", debug_dir;
    fs::path out = "out";
    auto* run = app.add_subcommand("run", "Run the pipeline on one image and gaze trace");
    run->add_option("--image", image, "Fundus image")->required()->check(CLI::ExistingFile);
    run->add_option("--gaze", gaze, "Gaze CSV (t_ms,x,y,valid)")->required()->check(CLI::ExistingFile);
    run->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory");
    run->add_option("--backend", backend, "baseline | external:<endpoint>");
    run->add_option("--debug-dir", debug_dir, "Write intermediate maps here");

    fs::path dataset;
    bool ablation = false;
    std::string sweep;
    int dense_n = 200;
    auto* eval = app.add_subcommand("eval", "Evaluate on a dataset directory");
    eval->add_option("--dataset", dataset, "Directory with images/, gaze/, masks/")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
    eval->add_option("--out", out, "Output directory");
    eval->add_flag("--ablation", ablation, "Dense grid vs saliency prompts vs saliency + filter");
    eval->add_option("--n-sweep", sweep, "Comma-separated grid sizes, e.g. 50,100,200");
    eval->add_option("--backend", backend, "baseline | external:<endpoint>");
    eval->add_option("--dense-n", dense_n, "Grid size of the dense-grid arm");

    int count = 10;
    std::uint64_t seed = 1;
    SynthSpec synth;
    GazeSimSpec gsim;
    auto* syn = app.add_subcommand("synth", "Write a synthetic dataset");
    syn->add_option("--out", out, "Output directory")->required();
    syn->add_option("--count", count, "Number of images");
    syn->add_option("--seed", seed, "Base seed");
    syn->add_option("--width", synth.dims.width, "Image width");
    syn->add_option("--height", synth.dims.height, "Image height");
    syn->add_option("--lesions", synth.n_lesions, "Lesions per image");
    syn->add_option("--vessels", synth.vessel_count, "Vessels per image");
    syn->add_option("--exudates", synth.n_exudates, "Exudates per image");
    syn->add_option("--jitter", gsim.jitter_sigma_px, "Gaze jitter (px)");
    syn->add_option("--fixations", gsim.n_fixations, "Fixation bursts per lesion");
    syn->add_option("--distractor-rate", gsim.distractor_rate, "Distractor bursts per lesion burst");

    std::string bind = "127.0.0.1:8080", state_dir;
    int debounce = 300;
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
    serve->add_option("--backend", backend, "baseline | external:<endpoint>");
    serve->add_option("--debounce-ms", debounce, "Gaze inactivity before processing");
    serve->add_option("--state-dir", state_dir, "Session journal directory");

    double theta = 1.0, distance = 60.0, cm_w = 64.0, cm_h = 48.0;
    int px_w = 1920, px_h = 1080;
    auto* sigma = app.add_subcommand("sigma", "Gaze sigma from viewing geometry");
    sigma->add_option("--theta", theta, "Visual angle error (degrees)");
    sigma->add_option("--distance", distance, "Eye-to-screen distance (cm)");
    sigma->add_option("--px-width", px_w);
    sigma->add_option("--px-height", px_h);
    sigma->add_option("--cm-width", cm_w);
    sigma->add_option("--cm-height", cm_h);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(image, gaze, config_path, out, backend, debug_dir);
        if (*eval) return cmd_eval(dataset, config_path, out, ablation, sweep, backend, dense_n);
        if (*syn) return cmd_synth(out, count, seed, synth, gsim);
        if (*serve) return cmd_serve(bind, config_path, backend, debounce, state_dir);
        if (*sigma) {
            std::cout << sigma_from_geometry(theta, distance, {px_w, px_h}, cm_w, cm_h) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "glanceseg: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "glanceseg: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
