#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "support/scenes.hpp"
#include "watersense/heatmap.hpp"

using namespace watersense;

namespace {

constexpr double kNoLoading = -std::numeric_limits<double>::infinity();

/// M x N slice of a few delayed paths plus complex Gaussian noise, column-major.
std::vector<cd> path_slice(std::size_t m, std::size_t n, double df, std::span<const double> delays,
                           std::span<const double> gains, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise / std::sqrt(2.0));
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    std::vector<cd> s(m * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < delays.size(); ++p) {
            const cd amp = std::polar(gains[p], ph(rng));
            const auto a = oracle::steering(delays[p], m, df);
            for (std::size_t j = 0; j < m; ++j) s[i * m + j] += amp * a[j];
        }
        for (std::size_t j = 0; j < m; ++j) s[i * m + j] += cd(g(rng), g(rng));
    }
    return s;
}

oracle::Matrix to_matrix(const Eigen::MatrixXcd& m) {
    oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<cd>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
    }
    return out;
}

std::vector<std::size_t> local_maxima(std::span<const double> v) {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        if (v[k] > v[k - 1] && v[k] >= v[k + 1]) out.push_back(k);
    }
    return out;
}

/// Span of delay bins within 3 dB of the peak, in seconds.
double half_power_width(std::span<const double> p, const DelayGrid& grid) {
    const std::size_t peak = oracle::argmax(p);
    std::size_t lo = peak;
    std::size_t hi = peak;
    while (lo > 0 && p[lo - 1] >= 0.5 * p[peak]) --lo;
    while (hi + 1 < p.size() && p[hi + 1] >= 0.5 * p[peak]) ++hi;
    return grid.bins()[hi] - grid.bins()[lo] + grid.spacing();
}

}  // namespace

TEST_CASE("steering vectors") {
    const double df = 1.5e6;
    const auto a0 = steering_vector(0.0, 8, df);
    for (Eigen::Index j = 0; j < 8; ++j) CHECK(std::abs(a0(j) - cd(1.0)) < 1e-15);
    const auto a = steering_vector(37e-9, 8, df);
    const auto wrapped = steering_vector(37e-9 + 1.0 / df, 8, df);
    const auto ref = oracle::steering(37e-9, 8, df);
    for (Eigen::Index j = 0; j < 8; ++j) {
        CHECK(std::abs(a(j)) == doctest::Approx(1.0));
        CHECK(std::abs(a(j) - wrapped(j)) < 1e-9);
        CHECK(std::abs(a(j) - ref[static_cast<std::size_t>(j)]) < 1e-12);
    }
}

TEST_CASE("covariance is Hermitian, persymmetric and loaded as configured") {
    const std::size_t m = 12;
    const std::vector<double> delays = {40e-9, 90e-9};
    const std::vector<double> gains = {1.0, 0.4};
    const auto s = path_slice(m, 3, 1.5e6, delays, gains, 0.1, 5);
    const auto raw = estimate_covariance(s, m, 3, {kNoLoading, false});
    const auto fb = estimate_covariance(s, m, 3, {kNoLoading, true});
    const auto loaded = estimate_covariance(s, m, 3, {-20.0, true});
    CHECK(raw.mode == CovarianceMode::MultiAntennaSnapshots);
    CHECK(raw.loading == 0.0);
    CHECK(fb.matrix.trace().real() == doctest::Approx(raw.matrix.trace().real()));
    CHECK(loaded.loading == doctest::Approx(0.01 * fb.matrix.trace().real() / static_cast<double>(m)));
    CHECK((loaded.matrix - fb.matrix).diagonal().real().minCoeff() == doctest::Approx(loaded.loading));
    const Eigen::Index n = static_cast<Eigen::Index>(m);
    const double scale = fb.matrix.norm();
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            CHECK(std::abs(fb.matrix(r, c) - std::conj(fb.matrix(c, r))) <= 1e-12 * scale);
            CHECK(std::abs(fb.matrix(r, c) - std::conj(fb.matrix(n - 1 - r, n - 1 - c))) <= 1e-12 * scale);
        }
    }
    const auto one = estimate_covariance(std::span<const cd>(s).first(m), m, 1);
    CHECK(one.mode == CovarianceMode::SingleAntennaOuter);
    const std::vector<cd> zeros(m * 2);
    CHECK(estimate_covariance(zeros, m, 2).degenerate);
}

TEST_CASE("identity covariance gives 1/M everywhere") {
    CovarianceEstimate cov;
    cov.matrix = Eigen::MatrixXcd::Identity(16, 16);
    const auto grid = DelayGrid::for_band(16, 1e6, 4);
    for (const double p : mvdr_spectrum(cov, grid, 1e6)) CHECK(p == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("single path MVDR matches the explicit-inverse oracle") {
    const std::size_t m = 46;
    const double df = 70e6 / 46.0;
    const auto grid = DelayGrid::for_band(m, df, 4);
    const std::vector<double> delays = {53e-9};
    const std::vector<double> gains = {1.0};
    const auto s = path_slice(m, 1, df, delays, gains, 0.05, 11);
    const auto cov = estimate_covariance(s, m, 1);
    const auto p = mvdr_spectrum(cov, grid, df);
    const auto ref = oracle::brute_mvdr(to_matrix(cov.matrix), grid.bins(), df);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-8));
    const double found = grid.bins()[oracle::argmax(p)];
    CHECK(std::abs(found - 53e-9) <= grid.spacing());
}

TEST_CASE("two separated paths give two maxima") {
    const std::size_t m = 100;
    const double df = 200e3;
    const auto grid = DelayGrid::for_band(m, df, 4);
    const std::vector<double> delays = {400e-9, 900e-9};
    const std::vector<double> gains = {1.0, 0.8};
    const auto s = path_slice(m, 3, df, delays, gains, 0.05, 3);
    const auto p = mvdr_spectrum(estimate_covariance(s, m, 3), grid, df);
    auto peaks = local_maxima(p);
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    REQUIRE(peaks.size() >= 2);
    std::vector<double> found = {grid.bins()[peaks[0]], grid.bins()[peaks[1]]};
    std::sort(found.begin(), found.end());
    CHECK(std::abs(found[0] - 400e-9) <= 2 * grid.spacing());
    CHECK(std::abs(found[1] - 900e-9) <= 2 * grid.spacing());
}

TEST_CASE("unloaded rank-one covariance is rejected") {
    const std::size_t m = 10;
    const std::vector<double> delays = {100e-9};
    const std::vector<double> gains = {1.0};
    const auto s = path_slice(m, 1, 1e6, delays, gains, 0.0, 1);
    const auto cov = estimate_covariance(s, m, 1, {kNoLoading, false});
    CHECK(condition_number(cov) > kMaxConditionNumber);
    CHECK_THROWS_AS(mvdr_spectrum(cov, DelayGrid::for_band(m, 1e6, 4), 1e6), IllConditionedError);
}

TEST_CASE("mmWave delay peaks are narrower than LTE ones") {
    const auto width = [](std::size_t m, double df) {
        const auto grid = DelayGrid::for_band(m, df, 8);
        const std::vector<double> delays = {0.3 / df};
        const std::vector<double> gains = {1.0};
        const auto s = path_slice(m, 1, df, delays, gains, 0.0, 2);
        return half_power_width(mvdr_spectrum(estimate_covariance(s, m, 1), grid, df), grid);
    };
    CHECK(width(46, 70e6 / 46.0) < width(100, 200e3));
}

TEST_CASE("heatmap of a rising scene peaks at the water Doppler and delay") {
    PipelineConfig config;
    config.system = scenes::mmwave();
    config.system.window_duration_s = 300.0;
    config.system.session_duration_s = 300.0;
    config.system.gap_duration_s = 0.0;
    config.system.intra_session_rate_hz = 10.0;
    Scene scene = scenes::lab(config.system, scenes::kMmwaveExtraDelay, std::nullopt);
    const auto w = generate_csi(config.system, scene, make_sampling_schedule(config.system), 60.0);
    const auto spectrum = doppler_transform(remove_mean(csi_power(w)), config.doppler_grid(),
                                            {WindowFunction::Hamming, TimeReference::WeightedCenter});
    const auto grid = config.delay_grid();
    const auto heat = build_heatmap(spectrum, grid, config.system.subcarrier_spacing_hz);
    CHECK(heat.rows() == config.doppler_bins);
    CHECK(heat.degenerate_rows == 0);

    std::size_t best = 0;
    for (std::size_t n = 1; n < heat.power.size(); ++n) {
        if (heat.power[n] > heat.power[best]) best = n;
    }
    const double f = heat.doppler.bins()[best / heat.cols()];
    const double tau = grid.bins()[best % heat.cols()];
    const double fd = 2 * std::sin(reflection_angle(config.system.geometry)) * scenes::kRise / scenes::kRiseOver *
                      config.system.carrier_freq_hz / kSpeedOfLight;
    CHECK(std::abs(std::abs(f) - fd) <= heat.doppler.spacing());
    CHECK(std::abs(tau - scenes::kMmwaveExtraDelay) <= grid.spacing());

    // The rising path appears on the positive-Doppler row; its mirror sees the negated delay.
    const std::size_t pos = heat.doppler.zero_index() + static_cast<std::size_t>(std::lround(fd / heat.doppler.spacing()));
    const std::size_t neg = 2 * heat.doppler.zero_index() - pos;
    const auto row_max = [&](std::size_t g) { return *std::max_element(heat.row(g).begin(), heat.row(g).end()); };
    CHECK(row_max(pos) > row_max(neg));

    for (std::size_t d = 0; d < heat.cols(); ++d) CHECK(heat.at(heat.doppler.zero_index(), d) == 0.0);
}

TEST_CASE("static scene has no dominant Doppler row") {
    PipelineConfig config;
    config.system = scenes::mmwave();
    const auto scene = scenes::still(config.system, 10.0, 4);
    const auto w = generate_csi(config.system, scene, make_sampling_schedule(config.system), 0.0, 0);
    const auto spectrum = doppler_transform(remove_mean(csi_power(w)), config.doppler_grid(),
                                            {WindowFunction::Hamming, TimeReference::WeightedCenter});
    const auto heat = build_heatmap(spectrum, config.delay_grid(), config.system.subcarrier_spacing_hz);
    std::vector<double> rows;
    for (std::size_t g = 0; g < heat.rows(); ++g) {
        if (heat.excluded(g)) continue;
        double sum = 0.0;
        for (const double v : heat.row(g)) sum += v;
        rows.push_back(sum / static_cast<double>(heat.cols()));
    }
    auto sorted = rows;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    CHECK(*std::max_element(rows.begin(), rows.end()) <= 3.0 * median);
}

TEST_CASE("heatmap argmax is invariant to CSI scaling") {
    PipelineConfig config;
    config.system = scenes::lte();
    const auto scene = scenes::lab(config.system, scenes::kLteExtraDelay, 10.0);
    const auto w = generate_csi(config.system, scene, make_sampling_schedule(config.system), 100.0, 1);
    std::vector<cf> scaled = w.samples();
    for (auto& v : scaled) v *= 7.0f;
    const CsiWindow w7(w.num_antennas(), w.num_subcarriers(), w.timestamps(), scaled, w.carrier_freq_hz(),
                       w.subcarrier_spacing_hz());
    const auto heat = [&](const CsiWindow& x) {
        const auto s = doppler_transform(remove_mean(csi_power(x)), config.doppler_grid(), {});
        return build_heatmap(s, config.delay_grid(), config.system.subcarrier_spacing_hz);
    };
    const auto a = heat(w);
    const auto b = heat(w7);
    CHECK(oracle::argmax(a.power) == oracle::argmax(b.power));
    const std::size_t k = oracle::argmax(a.power);
    CHECK(b.power[k] / a.power[k] == doctest::Approx(std::pow(7.0, 4)).epsilon(1e-4));
}

TEST_CASE("heatmap csv skips the zero row") {
    PipelineConfig config;
    config.system = scenes::mmwave();
    config.doppler_bins = 9;
    const auto w = generate_csi(config.system, scenes::lab(config.system, scenes::kMmwaveExtraDelay, 10.0),
                                make_sampling_schedule(config.system));
    const auto s = doppler_transform(remove_mean(csi_power(w)), config.doppler_grid(), {});
    const auto heat = build_heatmap(s, config.delay_grid(), config.system.subcarrier_spacing_hz);
    std::ostringstream out;
    write_heatmap_csv(heat, out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 9);
    CHECK(text.rfind("doppler_hz,", 0) == 0);
}
