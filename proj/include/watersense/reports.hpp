// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "watersense/pipeline.hpp"
#include "watersense/track.hpp"

namespace watersense {

void write_detection_header(std::ostream& out);
void write_detection_row(std::ostream& out, const DetectionRow& row);
void write_feature_header(std::ostream& out);
void write_feature_row(std::ostream& out, const FeatureRow& row);
void write_height_header(std::ostream& out);
void write_height_row(std::ostream& out, const HeightRow& row);

/// Readers accept exactly what the writers produce. Errors name the line.
std::vector<DetectionRow> read_detection_csv(const std::filesystem::path& path);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);
std::vector<HeightRow> read_height_csv(const std::filesystem::path& path);

/// Two columns, time_s and height_m, with an optional header line. '#' starts a comment.
HeightSeries read_truth_csv(const std::filesystem::path& path);
void write_truth_csv(std::ostream& out, const HeightSeries& truth);

/// Ground truth for detection counting: every window of a run shares one label.
enum class SceneLabel { Unknown, Variation, Static };

struct Summary {
    std::size_t windows = 0;
    std::size_t detected = 0;
    SceneLabel label = SceneLabel::Unknown;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::optional<AlignmentScore> score;
    std::optional<double> correlation;  // estimate vs truth after alignment
};

Summary summarize(const std::vector<DetectionRow>& detections, const std::vector<HeightRow>& heights,
                  const std::optional<HeightSeries>& truth, SceneLabel label);

void write_summary_text(std::ostream& out, const Summary& summary);
void write_summary_csv(std::ostream& out, const Summary& summary);

}  // namespace watersense
