// SPDX-License-Identifier: Apache-2.0
#include "watersense/detect.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace watersense {

void CfarConfig::validate() const {
    if (reference_cells < 2) throw std::invalid_argument("CFAR needs at least 2 reference cells per side");
    if (!(threshold_factor > 0) || !std::isfinite(threshold_factor)) {
        throw std::invalid_argument("CFAR threshold_factor must be positive");
    }
}

std::vector<double> doppler_profile(const DopplerRangeHeatmap& heatmap) {
    std::vector<double> profile(heatmap.rows());
    for (std::size_t g = 0; g < heatmap.rows(); ++g) {
        const auto row = heatmap.row(g);
        profile[g] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    }
    return profile;
}

DetectionResult ca_cfar(std::span<const double> profile, const CfarConfig& config, std::span<const bool> mask) {
    config.validate();
    const std::size_t n = profile.size();
    if (n < config.min_profile_length()) {
        std::ostringstream os;
        os << "CFAR profile has " << n << " cells; at least " << config.min_profile_length() << " are required";
        throw std::invalid_argument(os.str());
    }
    if (!mask.empty() && mask.size() != n) throw std::invalid_argument("CFAR mask length does not match profile");
    const auto masked = [&](std::ptrdiff_t g) { return !mask.empty() && mask[static_cast<std::size_t>(g)]; };
    const auto value = [&](std::ptrdiff_t g) {
        if (g < 0 || g >= static_cast<std::ptrdiff_t>(n) || masked(g)) return -std::numeric_limits<double>::infinity();
        return profile[static_cast<std::size_t>(g)];
    };

    DetectionResult result;
    result.thresholds.assign(n, 0.0);
    const auto inner = static_cast<std::ptrdiff_t>(config.guard_cells);
    const auto outer = static_cast<std::ptrdiff_t>(config.guard_cells + config.reference_cells);
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(n); ++g) {
        if (masked(g)) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (const std::ptrdiff_t dir : {-1, 1}) {
            for (std::ptrdiff_t d = 1; d <= outer; ++d) {
                const std::ptrdiff_t r = g + dir * d;
                if (r < 0 || r >= static_cast<std::ptrdiff_t>(n)) break;
                if (masked(r)) {
                    if (config.masked_cells_are_edges) break;
                    continue;
                }
                if (d <= inner) continue;
                sum += profile[static_cast<std::size_t>(r)];
                ++count;
            }
        }
        if (count == 0) continue;
        const double threshold = sum / static_cast<double>(count) * config.scale();
        result.thresholds[static_cast<std::size_t>(g)] = threshold;
        const double p = profile[static_cast<std::size_t>(g)];
        if (p >= threshold && p > 0.0 && p > value(g - 1) && p >= value(g + 1)) {
            result.peaks.push_back({static_cast<std::size_t>(g), p, threshold});
        }
    }
    result.detected = !result.peaks.empty();
    return result;
}

DetectionResult detect(const DopplerRangeHeatmap& heatmap, const CfarConfig& config) {
    const std::vector<double> profile = doppler_profile(heatmap);
    // std::vector<bool> has no contiguous storage to view as a span
    const std::unique_ptr<bool[]> mask(new bool[heatmap.rows()]);
    for (std::size_t g = 0; g < heatmap.rows(); ++g) mask[g] = heatmap.excluded(g);

    DetectionResult result = ca_cfar(profile, config, std::span<const bool>(mask.get(), heatmap.rows()));
    if (!result.detected) return result;

    const auto& bins = heatmap.doppler.bins();
    double best = -1.0;
    for (const auto& peak : result.peaks) {
        for (std::size_t d = 0; d < heatmap.cols(); ++d) {
            const double v = heatmap.at(peak.bin, d);
            const bool better = v > best || (v == best && result.chosen_cell &&
                                              std::abs(bins[peak.bin]) < std::abs(bins[result.chosen_cell->doppler_bin]));
            if (better) {
                best = v;
                result.chosen_cell = Cell{peak.bin, d};
            }
        }
    }
    return result;
}

}  // namespace watersense
