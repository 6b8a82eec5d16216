// SPDX-License-Identifier: Apache-2.0
#include "watersense/reports.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace watersense {

namespace {

// 12 significant digits by default; feature values use 17 so `track` can replay them exactly.
struct Num {
    double v;
    int digits = 12;
};

std::ostream& operator<<(std::ostream& out, Num n) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", n.digits, n.v == 0.0 ? 0.0 : n.v);
    return out << buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto first = field.find_first_not_of(" \t");
        const auto last = field.find_last_not_of(" \t");
        fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::runtime_error csv_error(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
    return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    if (s.empty()) return std::nan("");
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw csv_error(path, line, "bad number '" + s + "'");
    return v;
}

long long to_int(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw csv_error(path, line, "bad integer '" + s + "'");
    return v;
}

/// Calls row(fields, line) for every data line after the expected header.
template <typename Fn>
void read_rows(const std::filesystem::path& path, const std::string& header, Fn&& row) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string text;
    std::size_t line = 0;
    const std::size_t columns = split(header).size();
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (line == 1) {
            if (text != header) throw csv_error(path, line, "expected header '" + header + "'");
            continue;
        }
        if (text.empty()) continue;
        const auto fields = split(text);
        if (fields.size() != columns) {
            throw csv_error(path, line, "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
        }
        row(fields, line);
    }
    if (line == 0) throw csv_error(path, 1, "missing header");
}

const std::string kDetectionHeader = "window_index,detected,doppler_hz,range_m,power,threshold";
const std::string kFeatureHeader = "window_index,time_s,antenna,re,im,amplitude,phase_rad,doppler_hz,range_m,aoa_deg,coasting";
const std::string kHeightHeader =
    "time_s,window_index,antenna,phase_unwrapped_rad,delta_h_m,level_change_m,coasting,median_level_change_m";

}  // namespace

void write_detection_header(std::ostream& out) { out << kDetectionHeader << '\n'; }

void write_detection_row(std::ostream& out, const DetectionRow& r) {
    out << r.window_index << ',' << (r.detected ? 1 : 0) << ',' << Num{r.doppler_hz} << ',' << Num{r.range_m} << ','
        << Num{r.power} << ',' << Num{r.threshold} << '\n';
}

void write_feature_header(std::ostream& out) { out << kFeatureHeader << '\n'; }

void write_feature_row(std::ostream& out, const FeatureRow& r) {
    out << r.window_index << ',' << Num{r.time_s} << ',' << r.antenna << ',' << Num{r.value.real(), 17} << ',' << Num{r.value.imag(), 17} << ','
        << Num{std::abs(r.value)} << ',' << Num{std::arg(r.value)} << ',' << Num{r.doppler_hz} << ',' << Num{r.range_m}
        << ',';
    if (r.aoa_deg) out << Num{*r.aoa_deg};
    out << ',' << (r.coasting ? 1 : 0) << '\n';
}

void write_height_header(std::ostream& out) { out << kHeightHeader << '\n'; }

void write_height_row(std::ostream& out, const HeightRow& r) {
    out << Num{r.time_s} << ',' << r.window_index << ',' << r.antenna << ',' << Num{r.phase_unwrapped_rad} << ','
        << Num{r.delta_h_m} << ',' << Num{r.level_change_m} << ',' << (r.coasting ? 1 : 0) << ','
        << Num{r.median_level_change_m} << '\n';
}

std::vector<DetectionRow> read_detection_csv(const std::filesystem::path& path) {
    std::vector<DetectionRow> rows;
    read_rows(path, kDetectionHeader, [&](const std::vector<std::string>& f, std::size_t line) {
        rows.push_back({static_cast<std::uint64_t>(to_int(f[0], path, line)), to_int(f[1], path, line) != 0,
                        to_double(f[2], path, line), to_double(f[3], path, line), to_double(f[4], path, line),
                        to_double(f[5], path, line)});
    });
    return rows;
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
    std::vector<FeatureRow> rows;
    read_rows(path, kFeatureHeader, [&](const std::vector<std::string>& f, std::size_t line) {
        FeatureRow r;
        r.window_index = static_cast<std::uint64_t>(to_int(f[0], path, line));
        r.time_s = to_double(f[1], path, line);
        r.antenna = static_cast<int>(to_int(f[2], path, line));
        r.value = cd(to_double(f[3], path, line), to_double(f[4], path, line));
        r.doppler_hz = to_double(f[7], path, line);
        r.range_m = to_double(f[8], path, line);
        if (!f[9].empty()) r.aoa_deg = to_double(f[9], path, line);
        r.coasting = to_int(f[10], path, line) != 0;
        rows.push_back(r);
    });
    return rows;
}

std::vector<HeightRow> read_height_csv(const std::filesystem::path& path) {
    std::vector<HeightRow> rows;
    read_rows(path, kHeightHeader, [&](const std::vector<std::string>& f, std::size_t line) {
        rows.push_back({to_double(f[0], path, line), static_cast<std::uint64_t>(to_int(f[1], path, line)),
                        static_cast<int>(to_int(f[2], path, line)), to_double(f[3], path, line),
                        to_double(f[4], path, line), to_double(f[5], path, line), to_int(f[6], path, line) != 0,
                        to_double(f[7], path, line)});
    });
    return rows;
}

HeightSeries read_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    HeightSeries truth;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        const auto f = split(text);
        if (f.size() != 2) throw csv_error(path, line, "expected time_s,height_m");
        if (truth.empty() && f[0] == "time_s") continue;
        truth.times_s.push_back(to_double(f[0], path, line));
        truth.heights_m.push_back(to_double(f[1], path, line));
        truth.coasting.push_back(false);
    }
    truth.validate();
    return truth;
}

void write_truth_csv(std::ostream& out, const HeightSeries& truth) {
    out << "time_s,height_m\n";
    for (std::size_t k = 0; k < truth.times_s.size(); ++k) out << Num{truth.times_s[k]} << ',' << Num{truth.heights_m[k]} << '\n';
}

Summary summarize(const std::vector<DetectionRow>& detections, const std::vector<HeightRow>& heights,
                  const std::optional<HeightSeries>& truth, SceneLabel label) {
    Summary s;
    s.windows = detections.size();
    s.label = label;
    for (const auto& d : detections) s.detected += d.detected ? 1 : 0;
    if (label == SceneLabel::Variation) s.true_positives = s.detected;
    if (label == SceneLabel::Static) s.false_positives = s.detected;
    if (truth && !truth->empty()) {
        const HeightSeries est = height_series(heights);
        if (!est.empty()) {
            s.score = align_and_score(est, *truth);
            if (s.score->times_s.size() > 1) s.correlation = pearson(s.score->estimate_m, s.score->truth_m);
        }
    }
    return s;
}

namespace {

const char* label_name(SceneLabel label) {
    switch (label) {
        case SceneLabel::Variation: return "variation";
        case SceneLabel::Static: return "static";
        case SceneLabel::Unknown: break;
    }
    return "unknown";
}

double percent(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : 100.0 * static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

void write_summary_text(std::ostream& out, const Summary& s) {
    out << std::fixed;
    out << "windows:          " << s.windows << '\n';
    out << "detected:         " << s.detected << " (" << std::setprecision(2) << percent(s.detected, s.windows) << "%)\n";
    out << "scene label:      " << label_name(s.label) << '\n';
    if (s.label == SceneLabel::Variation) {
        out << "true positives:   " << s.true_positives << " / " << s.windows << " (" << percent(s.true_positives, s.windows)
            << "%)\n";
    }
    if (s.label == SceneLabel::Static) {
        out << "false positives:  " << s.false_positives << " / " << s.windows << " ("
            << percent(s.false_positives, s.windows) << "%)\n";
    }
    if (s.score) {
        out << std::setprecision(4);
        out << "aligned samples:  " << s.score->times_s.size() << '\n';
        out << "height MAE:       " << s.score->mean_abs_error_m * 100.0 << " cm\n";
        out << "height error std: " << s.score->std_m * 100.0 << " cm\n";
        if (s.correlation) out << "pearson r:        " << *s.correlation << '\n';
    } else {
        out << "height MAE:       n/a\n";
    }
    out << std::defaultfloat;
}

void write_summary_csv(std::ostream& out, const Summary& s) {
    out << "windows,detected,label,true_positives,false_positives,aligned_samples,mae_m,std_m,pearson_r\n";
    out << s.windows << ',' << s.detected << ',' << label_name(s.label) << ',' << s.true_positives << ','
        << s.false_positives << ',';
    if (s.score) {
        out << s.score->times_s.size() << ',' << Num{s.score->mean_abs_error_m} << ',' << Num{s.score->std_m} << ',';
    } else {
        out << "0,,,";
    }
    if (s.correlation) out << Num{*s.correlation};
    out << '\n';
}

}  // namespace watersense
