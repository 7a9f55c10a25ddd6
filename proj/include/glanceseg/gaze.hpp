#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "glanceseg/core.hpp"

namespace glanceseg {

struct GazeSample {
    double t_ms = 0.0;  // since trace start
    double x = 0.0;     // image column
    double y = 0.0;     // image row
    bool valid = true;  // tracker confidence

    bool operator==(const GazeSample&) const = default;
};

struct GazeTrace {
    std::string image_id;
    std::vector<GazeSample> samples;

    bool operator==(const GazeTrace&) const = default;
};

/// Top-down attention raster built from Gaussian-splatted gaze samples.
struct GazeMap {
    GrayMap map;
    double sigma_px = 0.0;
    // Sum of the deposited kernel values, after 3-sigma truncation and frame clipping.
    double total_weight = 0.0;
    // Centers of every deposited sample, in trace order.
    std::vector<Point2d> points;
    // Valid samples that fell outside the frame.
    std::size_t skipped = 0;

    std::size_t deposited() const { return points.size(); }
};

struct AdsResult {
    double score = 0.0;
    Point2d center;
};

/// Peak value of one deposited Gaussian, 1 / (sqrt(2 pi) sigma).
double gaze_peak_amplitude(double sigma_px);

/// True when the sample lies in [0,width) x [0,height).
bool inside_frame(const GazeSample& s, Size frame);

/// Incremental gaze-map builder. Single writer; snapshot() copies the current state.
class GazeAccumulator {
public:
    GazeAccumulator(Size frame, double sigma_px);

    /// Deposits every valid in-frame sample; returns how many were deposited.
    std::size_t add(std::span<const GazeSample> samples);
    void add(const GazeSample& sample);

    const GazeMap& current() const { return state_; }
    GazeMap snapshot() const { return state_; }

private:
    GazeMap state_;
    std::vector<double> row_weights_;
    std::vector<double> col_weights_;
};

/// Throws EmptyTrace when the trace has no valid sample inside the frame.
GazeMap build_gaze_map(const GazeTrace& trace, Size frame, double sigma_px);

/// Weighted geometric median by Weiszfeld iteration with the Vardi-Zhang step at data points.
Point2d weighted_geometric_median(std::span<const Point2d> points, std::span<const double> weights,
                                  double tolerance = 1e-6, int max_iterations = 100000);

/// Attention dispersion score; weights are the gaze-map values at each deposited sample.
AdsResult ads(const GazeMap& map);

/// Pixels at or above the `quantile` of nonzero map values become 1. Throws EmptyMap on an all-zero map.
GrayMap binarize_gaze(const GazeMap& map, double quantile);

/// CSV with header `t_ms,x,y,valid`; `#` lines are comments. Errors name the source and line.
GazeTrace parse_gaze_csv(std::istream& in, const std::string& source_name, std::string image_id);
GazeTrace read_gaze_csv(const std::filesystem::path& path);
void write_gaze_csv(std::ostream& out, const GazeTrace& trace);
void write_gaze_csv(const std::filesystem::path& path, const GazeTrace& trace);

}  // namespace glanceseg
