// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "watersense/config.hpp"
#include "watersense/core.hpp"

namespace watersense {

enum class PathModel { ExactGeometric, PaperLinear };

struct StaticPath {
    double amplitude = 1.0;
    double delay_s = 0.0;
    double aoa_rad = 0.0;
};

/// Water-surface reflection. Its delay follows the water level through
/// height_to_path_delta; its amplitude scales as 1 / path length.
struct WaterPath {
    double base_delay_s = 0.0;
    double aoa_rad = 0.0;
    double base_amplitude = 0.3;
    PathModel path_model = PathModel::ExactGeometric;
};

/// Clutter mover: same path form as the water path, with a constant path-length rate.
/// Positive doppler_hz means the path shortens.
struct MoverPath {
    WaterPath path;
    double doppler_hz = 0.0;
};

/// Piecewise-linear water level in metres (rise positive), held constant past the last breakpoint.
class WaterTrajectory {
public:
    WaterTrajectory();  // flat at 0
    explicit WaterTrajectory(std::vector<std::pair<double, double>> breakpoints);
    static WaterTrajectory linear(double rise_m, double over_s);

    double level_at(double t_s) const;
    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

/// gamma(t) = 1 + amplitude * sin(2 pi t / period + phase), t absolute.
struct PowerDrift {
    double amplitude = 0.0;
    double period_s = 600.0;
    double phase_rad = 0.0;

    double gain(double t_s) const;
};

enum class ToCfoMode { Off, RandomPerSample };

struct Impairments {
    ToCfoMode to_cfo = ToCfoMode::Off;
    std::vector<double> hw_phase_rad;  // per antenna, empty = none
    PowerDrift power_drift{};
    std::optional<double> awgn_snr_db;
    std::uint64_t seed = 1;
};

/// Uniform hardware phases in [0, 2 pi), one per antenna, fixed for a power-up.
std::vector<double> draw_hardware_phases(std::size_t num_antennas, std::uint64_t seed);

struct Scene {
    std::vector<StaticPath> static_paths;
    std::optional<WaterPath> water;
    WaterTrajectory trajectory;
    std::vector<MoverPath> movers;
    Impairments impairments;

    /// Index of the strongest static path, the delay reference for every relative delay.
    std::size_t reference_path() const;
    void validate() const;
};

/// Path-length change (m) when the water surface drops by drop_m (negative = rise).
double height_to_path_delta(const Geometry& geometry, double drop_m, PathModel model);

/// Water-path delay at absolute time t.
double water_delay_at(const SystemConfig& config, const Scene& scene, double t_s);

/// Synthesises one window. `schedule` is relative to window_start_s; the output carries
/// absolute timestamps window_start_s + schedule[k]. Random draws depend only on
/// (impairments.seed, window_index).
CsiWindow generate_csi(const SystemConfig& config, const Scene& scene, std::span<const double> schedule,
                       double window_start_s = 0.0, std::uint64_t window_index = 0);

/// Adds circular complex Gaussian noise with per-entry power mean(|CSI|^2) / 10^(snr/10).
/// snr_db = +inf returns the input unchanged.
CsiWindow add_awgn(const CsiWindow& window, double snr_db, std::uint64_t seed);

/// Scene keys: static_path = amp,delay_ns,aoa_deg (repeatable); water_path = amp,delay_ns,aoa_deg;
/// path_model = exact|linear; mover = amp,delay_ns,aoa_deg,doppler_hz (repeatable);
/// trajectory = t:h;t:h;...; to_cfo = on|off; hw_phase = on|off; drift_amplitude;
/// drift_period_s; drift_phase_deg; awgn_snr_db; seed. Returns false for unknown keys.
bool apply_scene_key(Scene& scene, const ConfigEntry& entry);
const std::vector<std::string>& scene_keys();

/// Builds a scene from scene-file entries; unknown keys raise ConfigError with the line number.
Scene load_scene(const std::vector<ConfigEntry>& entries, std::size_t num_antennas);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace watersense
