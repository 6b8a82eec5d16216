// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "watersense/heatmap.hpp"

namespace watersense {

/// Cell-averaging CFAR settings. The threshold is reference_mean * scale with
/// scale = 1 / threshold_factor for factors <= 1 (0.01 -> 20 dB), else threshold_factor.
struct CfarConfig {
    std::size_t reference_cells = 4;  // per side
    std::size_t guard_cells = 2;      // per side
    double threshold_factor = 0.01;
    // Reference windows stop at masked cells. With the 0 Hz bin masked, positive and
    // negative Doppler never reference each other: for real power data the negative half
    // is the conjugate mirror of the positive half, not independent noise.
    bool masked_cells_are_edges = true;

    void validate() const;
    double scale() const { return threshold_factor <= 1.0 ? 1.0 / threshold_factor : threshold_factor; }
    std::size_t min_profile_length() const { return 2 * (reference_cells + guard_cells) + 2; }
};

struct CfarPeak {
    std::size_t bin = 0;
    double power = 0.0;
    double threshold = 0.0;
};

struct Cell {
    std::size_t doppler_bin = 0;
    std::size_t delay_bin = 0;
    bool operator==(const Cell&) const = default;
};

struct DetectionResult {
    bool detected = false;
    std::vector<CfarPeak> peaks;
    std::optional<Cell> chosen_cell;
    std::vector<double> thresholds;  // per profile cell, 0 where no reference cells were available
};

/// Mean of each Doppler row across delay bins.
std::vector<double> doppler_profile(const DopplerRangeHeatmap& heatmap);

/// 1-D CA-CFAR. Masked cells are never peaks and never serve as reference cells.
/// References that fall off either end (or, by default, beyond a masked cell) are
/// dropped without wrapping, so edge cells average one side only. Peaks reach their
/// threshold and are local maxima among unmasked cells.
DetectionResult ca_cfar(std::span<const double> profile, const CfarConfig& config, std::span<const bool> mask = {});

/// Profile + CFAR with the 0 Hz and degenerate rows masked, then picks the highest
/// heatmap cell among detected rows (ties go to the smaller |f_D|).
DetectionResult detect(const DopplerRangeHeatmap& heatmap, const CfarConfig& config);

}  // namespace watersense
