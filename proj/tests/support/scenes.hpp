// Scenes shared by the unit and acceptance tests.
#pragma once

#include <optional>

#include "watersense/pipeline.hpp"
#include "watersense/simulator.hpp"

namespace scenes {

using namespace watersense;

/// 28 GHz, 46 subcarriers over 70 MHz, one antenna, 100 Hz sessions.
inline SystemConfig mmwave() {
    SystemConfig c;
    c.carrier_freq_hz = 28e9;
    c.num_subcarriers = 46;
    c.subcarrier_spacing_hz = 70e6 / 46.0;
    c.num_antennas = 1;
    c.intra_session_rate_hz = 100.0;
    return c;
}

/// 3.1 GHz, 100 subcarriers over 20 MHz, three antennas, 200 Hz sessions.
inline SystemConfig lte() {
    SystemConfig c;
    c.carrier_freq_hz = 3.1e9;
    c.num_subcarriers = 100;
    c.subcarrier_spacing_hz = 200e3;
    c.num_antennas = 3;
    c.intra_session_rate_hz = 200.0;
    return c;
}

inline constexpr double kRise = 0.035;        // m
inline constexpr double kRiseOver = 480.0;    // s
inline constexpr double kSceneLength = 780.0; // covers the last window of an 8 min run

/// Lab analogue: direct path, water reflection `extra_delay_s` later, linear rise.
inline Scene lab(const SystemConfig& config, double extra_delay_s, std::optional<double> snr_db,
                 std::uint64_t seed = 1, bool water = true) {
    Scene s;
    s.static_paths.push_back({1.0, 10e-9, 0.0});
    if (water) {
        WaterPath w;
        w.base_delay_s = 10e-9 + extra_delay_s;
        w.aoa_rad = deg2rad(20.0);
        w.base_amplitude = 0.3;
        w.path_model = PathModel::PaperLinear;
        s.water = w;
        s.trajectory = WaterTrajectory({{0.0, 0.0}, {kSceneLength, kRise * kSceneLength / kRiseOver}});
    }
    s.impairments.to_cfo = ToCfoMode::RandomPerSample;
    s.impairments.hw_phase_rad = draw_hardware_phases(config.num_antennas, seed + 100);
    s.impairments.awgn_snr_db = snr_db;
    s.impairments.seed = seed;
    return s;
}

/// No water motion: two fixed paths plus clock offsets and receiver noise.
inline Scene still(const SystemConfig& config, std::optional<double> snr_db, std::uint64_t seed = 1) {
    Scene s;
    s.static_paths.push_back({1.0, 10e-9, 0.0});
    s.static_paths.push_back({0.5, 30e-9, deg2rad(17.0)});
    s.impairments.to_cfo = ToCfoMode::RandomPerSample;
    s.impairments.hw_phase_rad = draw_hardware_phases(config.num_antennas, seed + 100);
    s.impairments.awgn_snr_db = snr_db;
    s.impairments.seed = seed;
    return s;
}

inline constexpr double kMmwaveExtraDelay = 53e-9;
inline constexpr double kLteExtraDelay = 147e-9;

/// Windows started every `step_s`, 8 min of coverage by default.
inline PipelineResult run(const PipelineConfig& config, const Scene& scene, std::size_t windows, double step_s,
                          double first_start_s = 0.0) {
    const auto schedule = make_sampling_schedule(config.system);
    std::uint64_t k = 0;
    return run_pipeline(config, [&]() -> std::optional<std::pair<CsiWindow, std::uint64_t>> {
        if (k >= windows) return std::nullopt;
        const double start = first_start_s + static_cast<double>(k) * step_s;
        auto w = generate_csi(config.system, scene, schedule, start, k);
        return std::make_pair(std::move(w), k++);
    });
}

inline HeightSeries truth(const Scene& scene, double until_s) {
    HeightSeries t;
    for (double s = 0.0; s <= until_s + 1e-9; s += 1.0) {
        t.times_s.push_back(s);
        t.heights_m.push_back(scene.trajectory.level_at(s));
        t.coasting.push_back(false);
    }
    return t;
}

}  // namespace scenes
