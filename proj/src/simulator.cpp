// SPDX-License-Identifier: Apache-2.0
#include "watersense/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace watersense {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the combined value
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

WaterTrajectory::WaterTrajectory() : points_{{0.0, 0.0}} {}

WaterTrajectory::WaterTrajectory(std::vector<std::pair<double, double>> breakpoints)
    : points_(std::move(breakpoints)) {
    if (points_.empty()) throw std::invalid_argument("trajectory needs at least one breakpoint");
    if (points_.front().first != 0.0 || points_.front().second != 0.0) {
        throw std::invalid_argument("trajectory must start at (0 s, 0 m)");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].first > points_[i - 1].first)) {
            throw std::invalid_argument("trajectory times must be strictly increasing");
        }
    }
}

WaterTrajectory WaterTrajectory::linear(double rise_m, double over_s) {
    return WaterTrajectory({{0.0, 0.0}, {over_s, rise_m}});
}

double WaterTrajectory::level_at(double t_s) const {
    if (t_s <= points_.front().first) return points_.front().second;
    if (t_s >= points_.back().first) return points_.back().second;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t_s,
                                     [](double t, const auto& p) { return t < p.first; });
    const auto& [t1, h1] = *it;
    const auto& [t0, h0] = *(it - 1);
    return h0 + (h1 - h0) * (t_s - t0) / (t1 - t0);
}

double PowerDrift::gain(double t_s) const {
    if (amplitude == 0.0) return 1.0;
    return 1.0 + amplitude * std::sin(kTwoPi * t_s / period_s + phase_rad);
}

std::vector<double> draw_hardware_phases(std::size_t num_antennas, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x68770000ULL));
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    std::vector<double> phases(num_antennas);
    for (auto& p : phases) p = u(rng);
    return phases;
}

std::size_t Scene::reference_path() const {
    if (static_paths.empty()) throw std::invalid_argument("scene needs at least one static path");
    std::size_t best = 0;
    for (std::size_t p = 1; p < static_paths.size(); ++p) {
        if (static_paths[p].amplitude > static_paths[best].amplitude) best = p;
    }
    return best;
}

void Scene::validate() const {
    const std::size_t ref = reference_path();
    for (const auto& s : static_paths) {
        if (!(s.amplitude > 0) || !std::isfinite(s.amplitude)) throw std::invalid_argument("static amplitude must be positive");
        if (s.delay_s < 0) throw std::invalid_argument("static delay must be nonnegative");
    }
    if (water) {
        if (!(water->base_delay_s > static_paths[ref].delay_s)) {
            throw std::invalid_argument("water path delay must exceed the reference static delay");
        }
        if (!(water->base_amplitude > 0)) throw std::invalid_argument("water amplitude must be positive");
    }
    const auto& drift = impairments.power_drift;
    if (drift.amplitude < 0 || drift.amplitude > 0.2) throw std::invalid_argument("drift amplitude must be in [0, 0.2]");
    if (drift.amplitude > 0 && !(drift.period_s > 0)) throw std::invalid_argument("drift period must be positive");
}

double height_to_path_delta(const Geometry& geometry, double drop_m, PathModel model) {
    geometry.validate();
    if (model == PathModel::PaperLinear) return 2.0 * drop_m * std::sin(reflection_angle(geometry));
    const double d = geometry.horizontal_distance_m;
    const double h = geometry.bs_height_m + geometry.ue_height_m;
    const double h_new = h + 2.0 * drop_m;
    if (!(h_new > 0)) throw std::invalid_argument("water level change makes the effective height nonpositive");
    return std::sqrt(d * d + h_new * h_new) - std::sqrt(d * d + h * h);
}

double water_delay_at(const SystemConfig& config, const Scene& scene, double t_s) {
    if (!scene.water) throw std::invalid_argument("scene has no water path");
    const double drop = -scene.trajectory.level_at(t_s);
    return scene.water->base_delay_s +
           height_to_path_delta(config.geometry, drop, scene.water->path_model) / kSpeedOfLight;
}

namespace {

struct PathSample {
    double amplitude;
    double delay_s;
    double sin_aoa;
};

}  // namespace

CsiWindow generate_csi(const SystemConfig& config, const Scene& scene, std::span<const double> schedule,
                       double window_start_s, std::uint64_t window_index) {
    config.validate();
    scene.validate();
    const std::size_t n_ant = config.num_antennas;
    const std::size_t n_sub = config.num_subcarriers;
    const std::size_t n_t = schedule.size();
    if (n_t < 2) throw std::invalid_argument("schedule needs at least 2 samples");
    const auto& imp = scene.impairments;
    if (!imp.hw_phase_rad.empty() && imp.hw_phase_rad.size() != n_ant) {
        throw std::invalid_argument("hardware phase vector must have one entry per antenna");
    }

    std::mt19937_64 rng(mix_seed(imp.seed, window_index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double max_timing_offset = 1.0 / config.bandwidth_hz();

    std::vector<cf> samples(n_ant * n_sub * n_t);
    std::vector<PathSample> paths;
    std::vector<cd> acc(n_sub);
    const double df = config.subcarrier_spacing_hz;

    for (std::size_t k = 0; k < n_t; ++k) {
        const double t_abs = window_start_s + schedule[k];
        paths.clear();
        for (const auto& s : scene.static_paths) paths.push_back({s.amplitude, s.delay_s, std::sin(s.aoa_rad)});
        if (scene.water) {
            const double tau = water_delay_at(config, scene, t_abs);
            const double amp = scene.water->base_amplitude * scene.water->base_delay_s / tau;
            paths.push_back({amp, tau, std::sin(scene.water->aoa_rad)});
        }
        for (const auto& m : scene.movers) {
            const double tau = m.path.base_delay_s - m.doppler_hz * t_abs / config.carrier_freq_hz;
            const double amp = m.path.base_amplitude * m.path.base_delay_s / tau;
            paths.push_back({amp, tau, std::sin(m.path.aoa_rad)});
        }

        const double gamma = imp.power_drift.gain(t_abs);
        double common_phase = 0.0;
        double timing_offset = 0.0;
        if (imp.to_cfo == ToCfoMode::RandomPerSample) {
            common_phase = kTwoPi * unit(rng);
            timing_offset = max_timing_offset * unit(rng);
        }

        for (std::size_t i = 0; i < n_ant; ++i) {
            std::fill(acc.begin(), acc.end(), cd{0.0, 0.0});
            for (const auto& p : paths) {
                // exp(-j 2 pi f_j tau) exp(-j pi i sin(theta)), advanced across subcarriers by recurrence
                const double first = kPropagationSign * kTwoPi *
                                     (std::fmod(config.subcarrier_freq(0) * p.delay_s, 1.0) +
                                      0.5 * static_cast<double>(i) * p.sin_aoa);
                cd phasor = std::polar(p.amplitude, first);
                const cd step = std::polar(1.0, kPropagationSign * kTwoPi * df * p.delay_s);
                for (std::size_t j = 0; j < n_sub; ++j) {
                    acc[j] += phasor;
                    phasor *= step;
                }
            }
            const double hw = imp.hw_phase_rad.empty() ? 0.0 : imp.hw_phase_rad[i];
            for (std::size_t j = 0; j < n_sub; ++j) {
                const double offset = common_phase + kTwoPi * std::fmod(config.subcarrier_freq(j) * timing_offset, 1.0);
                const cd impairment = std::polar(gamma, kPropagationSign * (offset + hw));
                const cd v = acc[j] * impairment;
                samples[(i * n_sub + j) * n_t + k] = cf(static_cast<float>(v.real()), static_cast<float>(v.imag()));
            }
        }
    }

    std::vector<double> stamps(schedule.begin(), schedule.end());
    for (auto& t : stamps) t += window_start_s;
    CsiWindow window(n_ant, n_sub, std::move(stamps), std::move(samples),
                     config.carrier_freq_hz, config.subcarrier_spacing_hz);
    if (imp.awgn_snr_db) window = add_awgn(window, *imp.awgn_snr_db, mix_seed(imp.seed ^ 0xA3C59AC2ULL, window_index));
    return window;
}

CsiWindow add_awgn(const CsiWindow& window, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return window;
    const auto& in = window.samples();
    double p_csi = 0.0;
    for (const auto& v : in) p_csi += std::norm(cd(v));
    p_csi /= static_cast<double>(in.size());
    const double p_noise = p_csi / std::pow(10.0, snr_db / 10.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(p_noise / 2.0));
    std::vector<cf> out(in.size());
    for (std::size_t n = 0; n < in.size(); ++n) {
        const double re = static_cast<double>(in[n].real()) + gauss(rng);
        const double im = static_cast<double>(in[n].imag()) + gauss(rng);
        out[n] = cf(static_cast<float>(re), static_cast<float>(im));
    }
    return CsiWindow(window.num_antennas(), window.num_subcarriers(), window.timestamps(), std::move(out),
                     window.carrier_freq_hz(), window.subcarrier_spacing_hz());
}

namespace {

WaterPath parse_path(const ConfigEntry& entry) {
    const auto v = parse_real_list(entry);
    if (v.size() != 3) throw ConfigError(entry.line, "'" + entry.key + "' expects amp,delay_ns,aoa_deg");
    return WaterPath{v[1] * 1e-9, deg2rad(v[2]), v[0], PathModel::ExactGeometric};
}

WaterTrajectory parse_trajectory(const ConfigEntry& entry) {
    std::vector<std::pair<double, double>> points;
    std::string_view rest = entry.value;
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const std::string item(rest.substr(0, semi));
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(entry.line, "trajectory items must be t:h");
        const double t = parse_real({entry.key, item.substr(0, colon), entry.line});
        const double h = parse_real({entry.key, item.substr(colon + 1), entry.line});
        points.emplace_back(t, h);
        if (semi == std::string_view::npos) break;
        rest = rest.substr(semi + 1);
    }
    try {
        return WaterTrajectory(std::move(points));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(entry.line, e.what());
    }
}

}  // namespace

bool apply_scene_key(Scene& scene, const ConfigEntry& e) {
    const std::string& k = e.key;
    if (k == "static_path") {
        const auto p = parse_path(e);
        scene.static_paths.push_back({p.base_amplitude, p.base_delay_s, p.aoa_rad});
    } else if (k == "water_path") {
        const PathModel keep = scene.water ? scene.water->path_model : PathModel::ExactGeometric;
        scene.water = parse_path(e);
        scene.water->path_model = keep;
    } else if (k == "path_model") {
        if (!scene.water) throw ConfigError(e.line, "path_model must follow water_path");
        if (e.value == "exact") scene.water->path_model = PathModel::ExactGeometric;
        else if (e.value == "linear") scene.water->path_model = PathModel::PaperLinear;
        else throw ConfigError(e.line, "path_model expects exact|linear");
    } else if (k == "mover") {
        const auto v = parse_real_list(e);
        if (v.size() != 4) throw ConfigError(e.line, "mover expects amp,delay_ns,aoa_deg,doppler_hz");
        scene.movers.push_back({WaterPath{v[1] * 1e-9, deg2rad(v[2]), v[0], PathModel::ExactGeometric}, v[3]});
    } else if (k == "trajectory") {
        scene.trajectory = parse_trajectory(e);
    } else if (k == "to_cfo") {
        scene.impairments.to_cfo = parse_flag(e) ? ToCfoMode::RandomPerSample : ToCfoMode::Off;
    } else if (k == "drift_amplitude") {
        scene.impairments.power_drift.amplitude = parse_real(e);
    } else if (k == "drift_period_s") {
        scene.impairments.power_drift.period_s = parse_real(e);
    } else if (k == "drift_phase_deg") {
        scene.impairments.power_drift.phase_rad = deg2rad(parse_real(e));
    } else if (k == "awgn_snr_db") {
        scene.impairments.awgn_snr_db = parse_real(e);
    } else if (k == "seed") {
        scene.impairments.seed = parse_count(e);
    } else {
        return false;
    }
    return true;
}

const std::vector<std::string>& scene_keys() {
    static const std::vector<std::string> keys = {
        "static_path", "water_path", "path_model", "mover", "trajectory", "to_cfo", "hw_phase",
        "drift_amplitude", "drift_period_s", "drift_phase_deg", "awgn_snr_db", "seed"};
    return keys;
}

Scene load_scene(const std::vector<ConfigEntry>& entries, std::size_t num_antennas) {
    Scene scene;
    bool hw_phase = false;
    for (const auto& e : entries) {
        if (e.key == "hw_phase") {
            hw_phase = parse_flag(e);
        } else if (!apply_scene_key(scene, e)) {
            throw ConfigError(e.line, "unknown scene key '" + e.key + "'");
        }
    }
    if (hw_phase) scene.impairments.hw_phase_rad = draw_hardware_phases(num_antennas, scene.impairments.seed);
    try {
        scene.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(0, ex.what());
    }
    return scene;
}

}  // namespace watersense
