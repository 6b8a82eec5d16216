// SPDX-License-Identifier: Apache-2.0
// watersense: simulate, process and score CSI water-level runs.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "watersense/config.hpp"
#include "watersense/csi_file.hpp"
#include "watersense/pipeline.hpp"
#include "watersense/reports.hpp"
#include "watersense/simulator.hpp"
#include "watersense/stream.hpp"

namespace fs = std::filesystem;
using namespace watersense;

namespace {

struct Common {
    std::string config_path;
    std::map<std::string, std::string> overrides;  // flag values, applied after the file
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("-c,--config", common.config_path, "pipeline config file (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", common.seed, "seed for every random draw of simulated input");
    for (const auto& key : pipeline_config_keys()) {
        if (key == "seed") continue;
        cmd->add_option_function<std::string>(
               "--" + key, [&common, key](const std::string& v) { common.overrides[key] = v; }, "config key " + key)
            ->group("Config keys");
    }
}

PipelineConfig load_config(const Common& common) {
    std::vector<ConfigEntry> entries;
    if (!common.config_path.empty()) entries = read_key_value_file(common.config_path);
    for (const auto& [key, value] : common.overrides) entries.push_back({key, value, 0});
    if (common.seed) entries.push_back({"seed", std::to_string(*common.seed), 0});
    return load_pipeline_config(entries);
}

bool seed_given(const Common& common) {
    if (common.seed) return true;
    if (common.config_path.empty()) return false;
    const auto entries = read_key_value_file(common.config_path);
    return std::any_of(entries.begin(), entries.end(), [](const ConfigEntry& e) { return e.key == "seed"; });
}

Scene load_scene_file(const std::string& path, const Common& common, const PipelineConfig& config) {
    std::vector<ConfigEntry> entries = read_key_value_file(path);
    if (seed_given(common)) entries.push_back({"seed", std::to_string(config.seed), 0});
    return load_scene(entries, config.system.num_antennas);
}

/// Simulated windows, started every window_step_s.
class SimulatedSource {
public:
    SimulatedSource(const PipelineConfig& config, Scene scene)
        : config_(config), scene_(std::move(scene)), schedule_(make_sampling_schedule(config.system)) {}

    std::optional<std::pair<CsiWindow, std::uint64_t>> operator()() {
        if (next_ >= config_.num_windows) return std::nullopt;
        const std::uint64_t k = next_++;
        const double start = static_cast<double>(k) * config_.window_step_s;
        return std::make_pair(generate_csi(config_.system, scene_, schedule_, start, k), k);
    }

private:
    PipelineConfig config_;
    Scene scene_;
    std::vector<double> schedule_;
    std::uint64_t next_ = 0;
};

HeightSeries truth_series(const PipelineConfig& config, const Scene& scene) {
    HeightSeries truth;
    const double end = static_cast<double>(config.num_windows - 1) * config.window_step_s + config.system.window_duration_s;
    for (double t = 0.0; t <= end + 1e-9; t += 1.0) {
        truth.times_s.push_back(t);
        truth.heights_m.push_back(scene.trajectory.level_at(t));
        truth.coasting.push_back(false);
    }
    return truth;
}

/// Windows from a file, a directory of .wscsi files, a recorded .wsfrm stream or udp:PORT.
class InputSource {
public:
    InputSource(const std::string& spec, double idle_timeout_s, double window_timeout_s)
        : idle_timeout_s_(idle_timeout_s), assembler_(window_timeout_s) {
        if (spec.rfind("udp:", 0) == 0) {
            receiver_.emplace(static_cast<std::uint16_t>(std::stoul(spec.substr(4))), false);
            std::cerr << "listening on udp port " << receiver_->port() << '\n';
        } else if (fs::is_directory(spec)) {
            for (const auto& entry : fs::directory_iterator(spec)) {
                if (entry.path().extension() == ".wscsi") files_.push_back(entry.path());
            }
            std::sort(files_.begin(), files_.end());
        } else if (fs::path(spec).extension() == ".wsfrm") {
            for (auto& d : read_datagram_file(spec)) {
                for (auto& w : assembler_.push(d)) ready_.push_back(std::move(w));
            }
            for (auto& w : assembler_.flush()) ready_.push_back(std::move(w));
        } else {
            files_.push_back(spec);
        }
    }

    std::optional<std::pair<CsiWindow, std::uint64_t>> operator()() {
        if (next_file_ < files_.size()) {
            const std::uint64_t k = next_file_;
            return std::make_pair(read_csi_file(files_[next_file_++]), k);
        }
        if (receiver_) pump();
        if (next_ready_ < ready_.size()) {
            auto& w = ready_[next_ready_++];
            return std::make_pair(std::move(w.window), static_cast<std::uint64_t>(w.window_id));
        }
        return std::nullopt;
    }

    std::size_t dropped() const { return assembler_.dropped(); }

private:
    void pump() {
        double idle = 0.0;
        const double tick = 0.5;
        while (next_ready_ >= ready_.size() && !closed_) {
            auto d = receiver_->receive(tick);
            clock_s_ += tick;
            std::vector<AssembledWindow> got;
            if (d) {
                idle = 0.0;
                got = assembler_.push(*d, clock_s_);
            } else {
                idle += tick;
                got = assembler_.poll(clock_s_);
                if (idle >= idle_timeout_s_) {
                    auto rest = assembler_.flush();
                    got.insert(got.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
                    closed_ = true;
                }
            }
            for (auto& w : got) ready_.push_back(std::move(w));
        }
    }

    double idle_timeout_s_;
    StreamAssembler assembler_;
    std::optional<UdpReceiver> receiver_;
    std::vector<fs::path> files_;
    std::size_t next_file_ = 0;
    std::vector<AssembledWindow> ready_;
    std::size_t next_ready_ = 0;
    double clock_s_ = 0.0;
    bool closed_ = false;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

/// Writes detection, feature and height CSVs while the pipeline runs.
PipelineResult run_to_dir(const PipelineConfig& config, const WindowSource& source, const fs::path& out_dir,
                          bool track, const std::string& heatmap_dir) {
    fs::create_directories(out_dir);
    std::ofstream det = open_out(out_dir / "detections.csv");
    write_detection_header(det);
    std::ofstream feat;
    std::ofstream height;
    if (track) {
        feat = open_out(out_dir / "features.csv");
        height = open_out(out_dir / "heights.csv");
        write_feature_header(feat);
        write_height_header(height);
    }
    if (!heatmap_dir.empty()) fs::create_directories(heatmap_dir);
    PipelineResult result = run_pipeline(config, source, [&](const WindowAnalysis& a, const WindowOutput& o) {
        write_detection_row(det, o.detection);
        if (track) {
            for (const auto& f : o.features) write_feature_row(feat, f);
            for (const auto& h : o.heights) write_height_row(height, h);
        }
        if (!heatmap_dir.empty() && a.heatmap) {
            std::ostringstream name;
            name << "heatmap_" << std::setw(5) << std::setfill('0') << a.index << ".csv";
            std::ofstream hm = open_out(fs::path(heatmap_dir) / name.str());
            write_heatmap_csv(*a.heatmap, hm);
        }
    });
    for (const auto& [index, message] : result.errors) std::cerr << "window " << index << " skipped: " << message << '\n';
    std::size_t detected = 0;
    for (const auto& d : result.detections) detected += d.detected ? 1 : 0;
    std::cerr << result.windows << " windows, " << detected << " detected, " << result.errors.size() << " skipped\n";
    return result;
}

SceneLabel parse_label(const std::string& s) {
    if (s == "variation") return SceneLabel::Variation;
    if (s == "static") return SceneLabel::Static;
    return SceneLabel::Unknown;
}

void write_summary(const Summary& summary, const fs::path& out_dir) {
    write_summary_text(std::cout, summary);
    std::ofstream txt = open_out(out_dir / "summary.txt");
    write_summary_text(txt, summary);
    std::ofstream csv = open_out(out_dir / "summary.csv");
    write_summary_csv(csv, summary);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water-level sensing from bi-static CSI"};
    app.require_subcommand(1);

    Common common;
    std::string scene_path;
    std::string out_dir = "out";
    std::string input;
    std::string heatmap_dir;
    std::string stream_path;
    std::string send_to;
    double frame_interval_ms = 0.0;
    double idle_timeout_s = 30.0;
    double window_timeout_s = 60.0;
    std::string features_path;
    std::string detections_path;
    std::string heights_path;
    std::string truth_path;
    std::string label = "auto";

    auto* simulate = app.add_subcommand("simulate", "write simulated CSI windows and the true level");
    add_common(simulate, common);
    simulate->add_option("-s,--scene", scene_path, "scene file")->required()->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", out_dir, "output directory");
    simulate->add_option("--stream", stream_path, "also record session frames to this .wsfrm file");
    simulate->add_option("--send", send_to, "send session frames to HOST:PORT over UDP");
    simulate->add_option("--frame-interval-ms", frame_interval_ms, "pause between sent frames");

    auto* process = app.add_subcommand("process", "run the full chain on recorded or live CSI");
    add_common(process, common);
    process->add_option("-i,--input", input, ".wscsi file, directory, .wsfrm stream or udp:PORT")->required();
    process->add_option("-o,--out", out_dir, "output directory");
    process->add_option("--heatmaps", heatmap_dir, "write one heatmap CSV per window here");
    process->add_option("--idle-timeout", idle_timeout_s, "udp: stop after this many idle seconds");
    process->add_option("--window-timeout", window_timeout_s, "udp: close a window idle this long");

    auto* detect_cmd = app.add_subcommand("detect", "heatmap and CFAR only");
    add_common(detect_cmd, common);
    detect_cmd->add_option("-i,--input", input, ".wscsi file, directory, .wsfrm stream or udp:PORT")->required();
    detect_cmd->add_option("-o,--out", out_dir, "output directory");
    detect_cmd->add_option("--heatmaps", heatmap_dir, "write one heatmap CSV per window here");
    detect_cmd->add_option("--idle-timeout", idle_timeout_s, "udp: stop after this many idle seconds");
    detect_cmd->add_option("--window-timeout", window_timeout_s, "udp: close a window idle this long");

    auto* track_cmd = app.add_subcommand("track", "unwrap stored features into heights");
    add_common(track_cmd, common);
    track_cmd->add_option("-f,--features", features_path, "features.csv")->required()->check(CLI::ExistingFile);
    track_cmd->add_option("-o,--out", out_dir, "output directory");

    auto* e2e = app.add_subcommand("e2e", "simulate, process and score in one go");
    add_common(e2e, common);
    e2e->add_option("-s,--scene", scene_path, "scene file")->required()->check(CLI::ExistingFile);
    e2e->add_option("-o,--out", out_dir, "output directory");
    e2e->add_option("--label", label, "scene label for detection counts: auto, variation, static, unknown");

    auto* report = app.add_subcommand("report", "summarise detection and height CSVs");
    report->add_option("-d,--detections", detections_path, "detections.csv")->required()->check(CLI::ExistingFile);
    report->add_option("--heights", heights_path, "heights.csv")->check(CLI::ExistingFile);
    report->add_option("-t,--truth", truth_path, "truth CSV (time_s,height_m)")->check(CLI::ExistingFile);
    report->add_option("--label", label, "scene label: variation, static or unknown");
    report->add_option("-o,--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            fs::create_directories(out_dir);
            const auto detections = read_detection_csv(detections_path);
            const auto heights = heights_path.empty() ? std::vector<HeightRow>{} : read_height_csv(heights_path);
            std::optional<HeightSeries> truth;
            if (!truth_path.empty()) truth = read_truth_csv(truth_path);
            write_summary(summarize(detections, heights, truth, parse_label(label)), out_dir);
            return 0;
        }

        const PipelineConfig config = load_config(common);
        config.validate();

        if (simulate->parsed()) {
            const Scene scene = load_scene_file(scene_path, common, config);
            fs::create_directories(fs::path(out_dir) / "windows");
            std::vector<std::vector<std::byte>> datagrams;
            std::optional<UdpSender> sender;
            if (!send_to.empty()) {
                const auto colon = send_to.rfind(':');
                if (colon == std::string::npos) throw std::invalid_argument("--send expects HOST:PORT");
                sender.emplace(send_to.substr(0, colon), static_cast<std::uint16_t>(std::stoul(send_to.substr(colon + 1))));
            }
            SimulatedSource source(config, scene);
            while (auto next = source()) {
                const auto& [window, k] = *next;
                std::ostringstream name;
                name << "window_" << std::setw(5) << std::setfill('0') << k << ".wscsi";
                write_csi_file(window, fs::path(out_dir) / "windows" / name.str());
                if (stream_path.empty() && !sender) continue;
                const std::size_t limit = sender ? kMaxUdpPayload : 0;
                for (const auto& frame : split_sessions(window, static_cast<std::uint32_t>(k), limit)) {
                    auto bytes = encode_frame(frame);
                    if (sender) {
                        sender->send(bytes);
                        if (frame_interval_ms > 0) {
                            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(frame_interval_ms));
                        }
                    }
                    if (!stream_path.empty()) datagrams.push_back(std::move(bytes));
                }
            }
            if (!stream_path.empty()) write_datagram_file(datagrams, stream_path);
            std::ofstream truth = open_out(fs::path(out_dir) / "truth.csv");
            write_truth_csv(truth, truth_series(config, scene));
            std::cerr << config.num_windows << " windows written to " << out_dir << '\n';
            return 0;
        }

        if (process->parsed() || detect_cmd->parsed()) {
            InputSource source(input, idle_timeout_s, window_timeout_s);
            run_to_dir(config, std::ref(source), out_dir, process->parsed(), heatmap_dir);
            if (source.dropped() > 0) std::cerr << source.dropped() << " stream frames dropped\n";
            return 0;
        }

        if (track_cmd->parsed()) {
            fs::create_directories(out_dir);
            std::ofstream height = open_out(fs::path(out_dir) / "heights.csv");
            write_height_header(height);
            for (const auto& h : track_features(config, read_feature_csv(features_path))) write_height_row(height, h);
            return 0;
        }

        if (e2e->parsed()) {
            const Scene scene = load_scene_file(scene_path, common, config);
            SimulatedSource source(config, scene);
            const PipelineResult result = run_to_dir(config, std::ref(source), out_dir, true, "");
            const HeightSeries truth = truth_series(config, scene);
            {
                std::ofstream t = open_out(fs::path(out_dir) / "truth.csv");
                write_truth_csv(t, truth);
            }
            SceneLabel scene_label = parse_label(label);
            if (label == "auto") {
                const bool moving = scene.water && scene.trajectory.level_at(0.0) != scene.trajectory.level_at(1e12);
                scene_label = moving ? SceneLabel::Variation : SceneLabel::Static;
            }
            write_summary(summarize(result.detections, result.heights, truth, scene_label), out_dir);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
