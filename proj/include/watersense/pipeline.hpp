// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "watersense/config.hpp"
#include "watersense/detect.hpp"
#include "watersense/features.hpp"
#include "watersense/heatmap.hpp"
#include "watersense/preprocess.hpp"
#include "watersense/track.hpp"

namespace watersense {

enum class BeamformerChoice { Auto, Mvdr, DelayAndSum };

/// Everything the per-window chain needs. Keys accepted by apply_pipeline_key are the
/// SystemConfig keys plus the fields below under the same names.
struct PipelineConfig {
    SystemConfig system{};
    double doppler_max_hz = 0.5;
    std::size_t doppler_bins = 257;
    std::size_t delay_oversample = 4;
    WindowFunction window_function = WindowFunction::Hamming;
    TimeReference time_reference = TimeReference::WeightedCenter;
    TransformMethod transform = TransformMethod::Nufft;
    double loading_db = -20.0;
    bool forward_backward = true;
    // 6 dB rather than the 20 dB a 0.01 factor gives: calibrated on simulated
    // static and rising scenes, see README.
    CfarConfig cfar{.threshold_factor = 0.25};
    BeamformerChoice beamformer = BeamformerChoice::Auto;  // Auto: delay-and-sum for N = 1, else MVDR
    bool spatial_refine = true;
    bool band_center_reference = true;
    std::size_t stabilizer_depth = 5;
    std::size_t stabilizer_gate = 2;
    double kalman_q = 0.01;
    double kalman_r = 0.25;
    std::optional<double> reflection_angle_deg;  // otherwise from geometry
    double window_step_s = 22.0;                 // spacing of simulated window starts
    std::size_t num_windows = 1;                 // simulated windows
    std::size_t threads = 0;                     // 0 = hardware concurrency
    std::uint64_t seed = 1;

    void validate() const;
    DopplerGrid doppler_grid() const;
    DelayGrid delay_grid() const;
    double reflection_angle_rad() const;
};

/// Returns false for keys that are not pipeline keys.
bool apply_pipeline_key(PipelineConfig& config, const ConfigEntry& entry);
const std::vector<std::string>& pipeline_config_keys();
/// Applies every entry; unknown keys raise ConfigError with their line number.
PipelineConfig load_pipeline_config(const std::vector<ConfigEntry>& entries, PipelineConfig base = {});

/// Output of the per-window parallel stage.
struct WindowAnalysis {
    std::uint64_t index = 0;
    double start_time_s = 0.0;
    std::optional<DopplerSpectrum> spectrum;
    std::optional<DopplerRangeHeatmap> heatmap;
    DetectionResult detection;
    std::string error;  // nonempty when the window failed and was skipped

    bool ok() const { return error.empty(); }
};

/// preprocess -> heatmap -> detect for one window. Never throws for data problems;
/// failures land in `error`.
WindowAnalysis analyze_window(const PipelineConfig& config, const CsiWindow& window, std::uint64_t index);

struct DetectionRow {
    std::uint64_t window_index = 0;
    bool detected = false;
    double doppler_hz = 0.0;
    double range_m = 0.0;
    double power = 0.0;
    double threshold = 0.0;
};

struct FeatureRow {
    std::uint64_t window_index = 0;
    double time_s = 0.0;  // Doppler reference time of the window
    int antenna = -1;  // -1 for the spatially combined stream
    cd value;
    double doppler_hz = 0.0;
    double range_m = 0.0;
    std::optional<double> aoa_deg;
    bool coasting = false;
};

struct HeightRow {
    double time_s = 0.0;
    std::uint64_t window_index = 0;
    int antenna = -1;
    double phase_unwrapped_rad = 0.0;
    double delta_h_m = 0.0;       // cumulative, positive = path lengthened
    double level_change_m = 0.0;  // -delta_h_m
    bool coasting = false;
    double median_level_change_m = 0.0;  // across antennas of the same window
};

struct WindowOutput {
    DetectionRow detection;
    std::vector<FeatureRow> features;
    std::vector<HeightRow> heights;
};

/// Per-stream Kalman unwrapping and height conversion. Streams are keyed by antenna
/// id; heights are cumulative from each stream's first phase.
class HeightTracker {
public:
    explicit HeightTracker(const PipelineConfig& config);
    /// Features of one window, one per stream.
    std::vector<HeightRow> update(const std::vector<FeatureRow>& features);

private:
    struct Stream {
        PhaseTracker tracker;
        std::optional<double> first_phase;
    };
    double q_;
    double r_;
    double wavelength_m_;
    double theta_rad_;
    std::map<int, Stream> streams_;
};

/// Re-runs tracking over stored features, grouped by consecutive window index.
std::vector<HeightRow> track_features(const PipelineConfig& config, const std::vector<FeatureRow>& features);

/// Sequential stage: bin stabilisation, beamforming, features and phase tracking.
/// One instance per input stream.
class StreamTracker {
public:
    explicit StreamTracker(const PipelineConfig& config);
    WindowOutput process(const WindowAnalysis& analysis);

private:
    cd window_feature(const DopplerSpectrum& spectrum, const Cell& cell, std::size_t antenna,
                      const Eigen::VectorXcd& weights) const;

    PipelineConfig config_;
    BinStabilizer stabilizer_;
    HeightTracker heights_;
};

struct PipelineResult {
    std::vector<DetectionRow> detections;
    std::vector<FeatureRow> features;
    std::vector<HeightRow> heights;
    std::vector<std::pair<std::uint64_t, std::string>> errors;
    std::size_t windows = 0;
};

/// Pulls (window, index) pairs until the source returns nullopt.
using WindowSource = std::function<std::optional<std::pair<CsiWindow, std::uint64_t>>()>;
using WindowCallback = std::function<void(const WindowAnalysis&, const WindowOutput&)>;

/// Runs windows through a worker pool in batches and the sequential stage in index order,
/// so output is identical for any thread count.
PipelineResult run_pipeline(const PipelineConfig& config, const WindowSource& source,
                            const WindowCallback& on_window = {});

/// Convenience: the spatially combined (or antenna 0) height series.
HeightSeries height_series(const std::vector<HeightRow>& rows, int antenna = -1);

}  // namespace watersense
