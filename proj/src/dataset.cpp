#include "glanceseg/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "glanceseg/image_io.hpp"

namespace glanceseg {

namespace fs = std::filesystem;

Dataset load_dataset(const fs::path& root, std::ostream* log) {
    const fs::path images = root / "images";
    if (!fs::is_directory(images)) throw Error(ErrorCode::Io, "dataset has no images/ directory: " + root.string());
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(images))
        if (e.is_regular_file() && e.path().extension() == ".png") ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());

    Dataset ds;
    for (const auto& id : ids) {
        const fs::path gaze = root / "gaze" / (id + ".csv");
        const fs::path mask = root / "masks" / (id + ".png");
        if (!fs::exists(mask) || !fs::exists(gaze)) {
            if (log) *log << "skipping " << id << ": missing " << (fs::exists(mask) ? gaze : mask).string() << '\n';
            ds.skipped.push_back(id);
            continue;
        }
        DatasetItem item;
        item.id = id;
        item.image = read_image(images / (id + ".png"));
        item.gaze = read_gaze_csv(gaze);
        item.gaze.image_id = id;
        item.gt = read_mask_png(mask);
        if (item.gt.dims() != item.image.size())
            throw Error(ErrorCode::DimensionMismatch, "mask " + mask.string() + " does not match its image");
        ds.items.push_back(std::move(item));
    }
    return ds;
}

void save_dataset_item(const fs::path& root, const DatasetItem& item) {
    for (const char* sub : {"images", "gaze", "masks"}) fs::create_directories(root / sub);
    write_png(root / "images" / (item.id + ".png"), item.image);
    write_gaze_csv(root / "gaze" / (item.id + ".csv"), item.gaze);
    write_mask_png(root / "masks" / (item.id + ".png"), item.gt);
}

Dataset make_synthetic_dataset(int count, std::uint64_t seed, const SynthSpec& synth, const GazeSimSpec& gaze) {
    if (count < 0) throw Error(ErrorCode::InvalidParameter, "dataset size must be non-negative");
    Dataset ds;
    for (int i = 0; i < count; ++i) {
        SynthSpec s = synth;
        s.seed = seed + static_cast<std::uint64_t>(i);
        SynthImage img = generate(s);
        GazeSimSpec g = gaze;
        g.seed = seed * 1000003ull + static_cast<std::uint64_t>(i);
        char id[32];
        std::snprintf(id, sizeof id, "synth_%03d", i);
        DatasetItem item;
        item.id = id;
        item.gaze = simulate_gaze(img.gt, img.image, g, id);
        item.image = std::move(img.image);
        item.gt = std::move(img.gt);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

}  // namespace glanceseg
