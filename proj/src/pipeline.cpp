// SPDX-License-Identifier: Apache-2.0
#include "watersense/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace watersense {

namespace {

using Setter = std::function<void(PipelineConfig&, const ConfigEntry&)>;

template <typename Enum>
Enum parse_choice(const ConfigEntry& e, std::initializer_list<std::pair<const char*, Enum>> choices) {
    std::string allowed;
    for (const auto& [name, value] : choices) {
        if (e.value == name) return value;
        allowed += allowed.empty() ? name : std::string("|") + name;
    }
    throw ConfigError(e.line, "'" + e.key + "' expects " + allowed + ", got '" + e.value + "'");
}

const std::map<std::string, Setter, std::less<>>& pipeline_setters() {
    static const std::map<std::string, Setter, std::less<>> setters = {
        {"doppler_max_hz", [](PipelineConfig& c, const ConfigEntry& e) { c.doppler_max_hz = parse_real(e); }},
        {"doppler_bins", [](PipelineConfig& c, const ConfigEntry& e) { c.doppler_bins = parse_count(e); }},
        {"delay_oversample", [](PipelineConfig& c, const ConfigEntry& e) { c.delay_oversample = parse_count(e); }},
        {"window_function",
         [](PipelineConfig& c, const ConfigEntry& e) {
             c.window_function = parse_choice<WindowFunction>(e, {{"hamming", WindowFunction::Hamming}, {"rect", WindowFunction::Rect}});
         }},
        {"time_reference",
         [](PipelineConfig& c, const ConfigEntry& e) {
             c.time_reference =
                 parse_choice<TimeReference>(e, {{"start", TimeReference::WindowStart}, {"center", TimeReference::WeightedCenter}});
         }},
        {"transform",
         [](PipelineConfig& c, const ConfigEntry& e) {
             c.transform = parse_choice<TransformMethod>(e, {{"direct", TransformMethod::Direct}, {"nufft", TransformMethod::Nufft}});
         }},
        {"loading_db", [](PipelineConfig& c, const ConfigEntry& e) { c.loading_db = parse_real(e); }},
        {"forward_backward", [](PipelineConfig& c, const ConfigEntry& e) { c.forward_backward = parse_flag(e); }},
        {"cfar_reference_cells", [](PipelineConfig& c, const ConfigEntry& e) { c.cfar.reference_cells = parse_count(e); }},
        {"cfar_guard_cells", [](PipelineConfig& c, const ConfigEntry& e) { c.cfar.guard_cells = parse_count(e); }},
        {"cfar_masked_edges", [](PipelineConfig& c, const ConfigEntry& e) { c.cfar.masked_cells_are_edges = parse_flag(e); }},
        {"cfar_threshold_factor", [](PipelineConfig& c, const ConfigEntry& e) { c.cfar.threshold_factor = parse_real(e); }},
        {"beamformer",
         [](PipelineConfig& c, const ConfigEntry& e) {
             c.beamformer = parse_choice<BeamformerChoice>(e, {{"auto", BeamformerChoice::Auto},
                                             {"mvdr", BeamformerChoice::Mvdr},
                                             {"das", BeamformerChoice::DelayAndSum}});
         }},
        {"spatial_refine", [](PipelineConfig& c, const ConfigEntry& e) { c.spatial_refine = parse_flag(e); }},
        {"band_center_reference", [](PipelineConfig& c, const ConfigEntry& e) { c.band_center_reference = parse_flag(e); }},
        {"stabilizer_depth", [](PipelineConfig& c, const ConfigEntry& e) { c.stabilizer_depth = parse_count(e); }},
        {"stabilizer_gate", [](PipelineConfig& c, const ConfigEntry& e) { c.stabilizer_gate = parse_count(e); }},
        {"kalman_q", [](PipelineConfig& c, const ConfigEntry& e) { c.kalman_q = parse_real(e); }},
        {"kalman_r", [](PipelineConfig& c, const ConfigEntry& e) { c.kalman_r = parse_real(e); }},
        {"reflection_angle_deg", [](PipelineConfig& c, const ConfigEntry& e) { c.reflection_angle_deg = parse_real(e); }},
        {"window_step_s", [](PipelineConfig& c, const ConfigEntry& e) { c.window_step_s = parse_real(e); }},
        {"num_windows", [](PipelineConfig& c, const ConfigEntry& e) { c.num_windows = parse_count(e); }},
        {"threads", [](PipelineConfig& c, const ConfigEntry& e) { c.threads = parse_count(e); }},
        {"seed", [](PipelineConfig& c, const ConfigEntry& e) { c.seed = parse_count(e); }},
    };
    return setters;
}

}  // namespace

void PipelineConfig::validate() const {
    system.validate();
    if (!(doppler_max_hz > 0)) throw std::invalid_argument("doppler_max_hz must be positive");
    if (doppler_bins < 3 || doppler_bins % 2 == 0) throw std::invalid_argument("doppler_bins must be odd and >= 3");
    if (delay_oversample == 0) throw std::invalid_argument("delay_oversample must be positive");
    cfar.validate();
    if (doppler_bins < cfar.min_profile_length()) throw std::invalid_argument("doppler_bins is too small for the CFAR window");
    if (stabilizer_depth == 0) throw std::invalid_argument("stabilizer_depth must be positive");
    if (!(kalman_q > 0) || !(kalman_r > 0)) throw std::invalid_argument("kalman_q and kalman_r must be positive");
    if (reflection_angle_deg && !(*reflection_angle_deg > 0 && *reflection_angle_deg <= 90)) {
        throw std::invalid_argument("reflection_angle_deg must be in (0, 90]");
    }
    if (!(window_step_s > 0)) throw std::invalid_argument("window_step_s must be positive");
}

DopplerGrid PipelineConfig::doppler_grid() const { return DopplerGrid::symmetric(doppler_max_hz, doppler_bins); }

DelayGrid PipelineConfig::delay_grid() const {
    return DelayGrid::for_band(system.num_subcarriers, system.subcarrier_spacing_hz, delay_oversample);
}

double PipelineConfig::reflection_angle_rad() const {
    return reflection_angle_deg ? deg2rad(*reflection_angle_deg) : reflection_angle(system.geometry);
}

bool apply_pipeline_key(PipelineConfig& config, const ConfigEntry& entry) {
    if (apply_system_key(config.system, entry)) return true;
    const auto& setters = pipeline_setters();
    const auto it = setters.find(entry.key);
    if (it == setters.end()) return false;
    it->second(config, entry);
    return true;
}

const std::vector<std::string>& pipeline_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k = system_config_keys();
        for (const auto& [name, setter] : pipeline_setters()) k.push_back(name);
        std::sort(k.begin(), k.end());
        return k;
    }();
    return keys;
}

PipelineConfig load_pipeline_config(const std::vector<ConfigEntry>& entries, PipelineConfig base) {
    for (const auto& e : entries) {
        if (!apply_pipeline_key(base, e)) throw ConfigError(e.line, "unknown config key '" + e.key + "'");
    }
    try {
        base.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(0, ex.what());
    }
    return base;
}

WindowAnalysis analyze_window(const PipelineConfig& config, const CsiWindow& window, std::uint64_t index) {
    WindowAnalysis out;
    out.index = index;
    out.start_time_s = window.timestamps().front();
    try {
        if (window.num_subcarriers() != config.system.num_subcarriers) {
            throw std::invalid_argument("window has " + std::to_string(window.num_subcarriers()) +
                                        " subcarriers, config expects " + std::to_string(config.system.num_subcarriers));
        }
        const PowerWindow power = remove_mean(csi_power(window));
        DopplerOptions options{config.window_function, config.time_reference, config.transform};
        out.spectrum = doppler_transform(power, config.doppler_grid(), options);
        out.heatmap = build_heatmap(*out.spectrum, config.delay_grid(), window.subcarrier_spacing_hz(),
                                    {config.loading_db, config.forward_backward});
        out.detection = detect(*out.heatmap, config.cfar);
    } catch (const std::exception& e) {
        out.spectrum.reset();
        out.heatmap.reset();
        out.detection = {};
        out.error = e.what();
    }
    return out;
}

HeightTracker::HeightTracker(const PipelineConfig& config)
    : q_(config.kalman_q),
      r_(config.kalman_r),
      wavelength_m_(config.band_center_reference ? config.system.band_center_wavelength() : config.system.wavelength()),
      theta_rad_(config.reflection_angle_rad()) {}

std::vector<HeightRow> HeightTracker::update(const std::vector<FeatureRow>& features) {
    std::vector<HeightRow> out;
    for (const auto& f : features) {
        auto it = streams_.find(f.antenna);
        if (it == streams_.end()) it = streams_.emplace(f.antenna, Stream{PhaseTracker(q_, r_), {}}).first;
        Stream& stream = it->second;
        const double unwrapped = stream.tracker.update(std::arg(f.value)).unwrapped;
        if (!stream.first_phase) stream.first_phase = unwrapped;
        const double dh = phase_to_height(*stream.first_phase, unwrapped, wavelength_m_, theta_rad_);
        out.push_back({f.time_s, f.window_index, f.antenna, unwrapped, dh, -dh, f.coasting, 0.0});
    }
    if (out.empty()) return out;
    std::vector<double> levels;
    for (const auto& h : out) levels.push_back(h.level_change_m);
    std::sort(levels.begin(), levels.end());
    const std::size_t mid = levels.size() / 2;
    const double median = levels.size() % 2 == 1 ? levels[mid] : 0.5 * (levels[mid - 1] + levels[mid]);
    for (auto& h : out) h.median_level_change_m = median;
    return out;
}

std::vector<HeightRow> track_features(const PipelineConfig& config, const std::vector<FeatureRow>& features) {
    HeightTracker tracker(config);
    std::vector<HeightRow> out;
    for (std::size_t a = 0; a < features.size();) {
        std::size_t b = a;
        while (b < features.size() && features[b].window_index == features[a].window_index) ++b;
        const std::vector<FeatureRow> window(features.begin() + static_cast<std::ptrdiff_t>(a),
                                             features.begin() + static_cast<std::ptrdiff_t>(b));
        const auto rows = tracker.update(window);
        out.insert(out.end(), rows.begin(), rows.end());
        a = b;
    }
    return out;
}

StreamTracker::StreamTracker(const PipelineConfig& config)
    : config_(config), stabilizer_(config.stabilizer_depth, config.stabilizer_gate), heights_(config) {}

cd StreamTracker::window_feature(const DopplerSpectrum& spectrum, const Cell& cell, std::size_t antenna,
                                 const Eigen::VectorXcd& weights) const {
    cd y = extract_feature(spectrum, cell.doppler_bin, weights, antenna);
    if (config_.band_center_reference) {
        const double delay = config_.delay_grid().bins()[cell.delay_bin];
        y = reference_to_band_center(y, delay, spectrum.num_subcarriers(), config_.system.subcarrier_spacing_hz);
    }
    return y;
}

WindowOutput StreamTracker::process(const WindowAnalysis& analysis) {
    if (!analysis.ok()) throw std::invalid_argument("cannot track a failed window");
    WindowOutput out;
    out.detection.window_index = analysis.index;
    out.detection.detected = analysis.detection.detected;
    if (!analysis.detection.detected) return out;

    const auto& heatmap = *analysis.heatmap;
    const auto& spectrum = *analysis.spectrum;
    const Cell chosen = *analysis.detection.chosen_cell;
    out.detection.doppler_hz = heatmap.doppler.bins()[chosen.doppler_bin];
    out.detection.range_m = heatmap.delays.range_m(chosen.delay_bin);
    for (const auto& peak : analysis.detection.peaks) {
        if (peak.bin == chosen.doppler_bin) {
            out.detection.power = peak.power;
            out.detection.threshold = peak.threshold;
        }
    }

    const StabilizedCell stable = stabilizer_.update(chosen);
    const Cell cell = stable.cell;
    const std::size_t n = spectrum.num_antennas();
    const std::size_t m = spectrum.num_subcarriers();
    const double df = config_.system.subcarrier_spacing_hz;
    const double delay = heatmap.delays.bins()[cell.delay_bin];

    const bool use_mvdr = config_.beamformer == BeamformerChoice::Mvdr ||
                          (config_.beamformer == BeamformerChoice::Auto && n > 1);
    Eigen::VectorXcd weights;
    if (use_mvdr) {
        CovarianceEstimate cov =
            estimate_covariance(spectrum.slice(cell.doppler_bin), m, n, {config_.loading_db, config_.forward_backward});
        cov.doppler_bin = cell.doppler_bin;
        try {
            weights = beamformer_weights(cov, delay, m, df, BeamformerMode::Mvdr);
        } catch (const std::exception&) {
            weights = beamformer_weights(cov, delay, m, df, BeamformerMode::DelayAndSum);
        }
    } else {
        weights = beamformer_weights({}, delay, m, df, BeamformerMode::DelayAndSum);
    }

    std::vector<cd> per_antenna(n);
    for (std::size_t i = 0; i < n; ++i) per_antenna[i] = window_feature(spectrum, cell, i, weights);

    struct Measured {
        int antenna;
        cd value;
        std::optional<double> aoa;
    };
    std::vector<Measured> measured;
    if (n > 1 && config_.spatial_refine) {
        const SpatialResult z = spatial_refine(per_antenna);
        measured.push_back({-1, z.value, z.aoa_deg});
    } else {
        for (std::size_t i = 0; i < n; ++i) measured.push_back({static_cast<int>(i), per_antenna[i], std::nullopt});
    }
    const double time_s = spectrum.reference_time_s();
    for (const auto& meas : measured) {
        out.features.push_back({analysis.index, time_s, meas.antenna, meas.value, heatmap.doppler.bins()[cell.doppler_bin],
                                heatmap.delays.range_m(cell.delay_bin), meas.aoa, stable.coasting});
    }
    out.heights = heights_.update(out.features);
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, const WindowSource& source, const WindowCallback& on_window) {
    config.validate();
    const std::size_t workers =
        config.threads > 0 ? config.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    StreamTracker tracker(config);
    PipelineResult result;
    bool exhausted = false;
    while (!exhausted) {
        std::vector<std::pair<CsiWindow, std::uint64_t>> batch;
        while (batch.size() < workers) {
            auto next = source();
            if (!next) {
                exhausted = true;
                break;
            }
            batch.push_back(std::move(*next));
        }
        std::vector<WindowAnalysis> analyses(batch.size());
        if (workers == 1 || batch.size() == 1) {
            for (std::size_t b = 0; b < batch.size(); ++b) analyses[b] = analyze_window(config, batch[b].first, batch[b].second);
        } else {
            std::vector<std::future<WindowAnalysis>> futures;
            for (const auto& [window, index] : batch) {
                futures.push_back(std::async(std::launch::async, [&config, &window = window, index = index] {
                    return analyze_window(config, window, index);
                }));
            }
            for (std::size_t b = 0; b < batch.size(); ++b) analyses[b] = futures[b].get();
        }
        for (const auto& analysis : analyses) {
            ++result.windows;
            if (!analysis.ok()) {
                result.errors.emplace_back(analysis.index, analysis.error);
                continue;
            }
            WindowOutput out = tracker.process(analysis);
            if (on_window) on_window(analysis, out);
            result.detections.push_back(out.detection);
            result.features.insert(result.features.end(), out.features.begin(), out.features.end());
            result.heights.insert(result.heights.end(), out.heights.begin(), out.heights.end());
        }
    }
    return result;
}

HeightSeries height_series(const std::vector<HeightRow>& rows, int antenna) {
    const bool any = std::any_of(rows.begin(), rows.end(), [&](const HeightRow& r) { return r.antenna == antenna; });
    const int pick = any || antenna != -1 ? antenna : 0;
    HeightSeries series;
    for (const auto& r : rows) {
        if (r.antenna != pick) continue;
        series.times_s.push_back(r.time_s);
        series.heights_m.push_back(r.level_change_m);
        series.coasting.push_back(r.coasting);
    }
    return series;
}

}  // namespace watersense
