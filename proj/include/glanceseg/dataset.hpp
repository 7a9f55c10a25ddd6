#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "glanceseg/core.hpp"
#include "glanceseg/gaze.hpp"
#include "glanceseg/gaze_sim.hpp"
#include "glanceseg/synth.hpp"

namespace glanceseg {

struct DatasetItem {
    std::string id;
    Frame image;
    GazeTrace gaze;
    BinaryMask gt;
};

struct Dataset {
    std::vector<DatasetItem> items;
    // Ids present in images/ but lacking a gaze trace or ground-truth mask.
    std::vector<std::string> skipped;
};

/// Reads images/<id>.png, gaze/<id>.csv and masks/<id>.png, sorted by id. Incomplete items are
/// skipped and reported on `log` when given.
Dataset load_dataset(const std::filesystem::path& root, std::ostream* log = nullptr);

void save_dataset_item(const std::filesystem::path& root, const DatasetItem& item);

/// `count` generated images "synth_000".. with simulated gaze. Image i uses synth seed
/// `seed + i` and gaze seed `seed * 1000003 + i`.
Dataset make_synthetic_dataset(int count, std::uint64_t seed, const SynthSpec& synth = {},
                               const GazeSimSpec& gaze = {});

}  // namespace glanceseg
