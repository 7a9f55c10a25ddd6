#pragma once

#include <cstdint>
#include <string>

#include "glanceseg/core.hpp"
#include "glanceseg/gaze.hpp"

namespace glanceseg {

struct GazeSimSpec {
    double jitter_sigma_px = 25.0;
    // Fixation bursts per ground-truth lesion.
    int n_fixations = 3;
    // Distractor bursts per lesion burst (per n_fixations bursts when the ground truth is empty).
    double distractor_rate = 0.0;
    std::uint64_t seed = 1;
    int samples_per_burst = 10;
    double sample_interval_ms = 1000.0 / 60.0;
    double saccade_ms = 150.0;
};

/// Fixation bursts on each ground-truth component centroid with Gaussian jitter, plus distractor
/// bursts on dark (vessel-like) fundus pixels. Bursts are shuffled; deterministic per seed.
/// Throws InvalidParameter when the mask is empty and no distractors are requested.
GazeTrace simulate_gaze(const BinaryMask& gt, const Frame& frame, const GazeSimSpec& spec, std::string image_id = {});

}  // namespace glanceseg
