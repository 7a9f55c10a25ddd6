#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

struct SynthSpec {
    std::uint64_t seed = 1;
    Size dims{512, 512};
    int n_lesions = 5;
    double lesion_radius_min = 3.0;
    double lesion_radius_max = 8.0;
    int vessel_count = 6;
    std::array<double, 3> background_tint{205.0, 95.0, 40.0};
    // Approximate luminance drop of a lesion in 8-bit levels.
    double contrast = 40.0;
    int n_exudates = 2;
    double noise_sigma = 1.0;
    // Relative amplitude of the low-frequency background texture.
    double texture_amplitude = 0.03;
    int max_attempts = 2000;

    /// Throws InvalidParameter naming the offending field.
    void validate() const;
};

struct SynthDisk {
    Point2d center;
    double radius = 0.0;
};

/// Quadratic Bezier stroke.
struct SynthVessel {
    Point2d p0, p1, p2;
    double width = 0.0;

    Point2d at(double t) const;
    /// Distance from `q` to the stroke centerline (polyline approximation).
    double distance(Point2d q) const;
};

struct SynthImage {
    Frame image;
    BinaryMask gt;
    std::vector<SynthDisk> lesions;
    std::vector<SynthDisk> exudates;
    std::vector<SynthVessel> vessels;
    SynthDisk fundus;
};

/// Deterministic per seed. Throws Generation when a feature cannot be placed.
SynthImage generate(const SynthSpec& spec);

/// Fraction of pixel (x,y), the unit square centered on the integer coordinate, covered by the disk
/// (4x4 supersampling).
double disk_coverage(const SynthDisk& disk, int x, int y);

}  // namespace glanceseg
