#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/scenes.hpp"
#include "watersense/preprocess.hpp"

using namespace watersense;

namespace {

PowerWindow single_series(std::vector<double> t, std::vector<double> p) {
    return PowerWindow(1, 1, std::move(t), std::move(p));
}

std::vector<double> uniform_times(std::size_t n, double fs, double start = 0.0) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = start + static_cast<double>(k) / fs;
    return t;
}

std::vector<double> tone(std::span<const double> t, double f, double offset = 0.0, double phase = 0.3) {
    std::vector<double> p;
    for (const double x : t) p.push_back(offset + std::cos(2 * kPi * f * x + phase));
    return p;
}

double max_abs(std::span<const cd> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("csi power is the squared magnitude") {
    const std::vector<cf> s = {cf(3, 4), cf(0, 0), cf(1, 1) * std::polar(1.0f, 0.7f), cf(-2, 0)};
    const CsiWindow w(1, 2, {0.0, 1.0}, s, 28e9, 1e6);
    const auto p = csi_power(w);
    CHECK(p.at(0, 0, 0) == doctest::Approx(25.0));
    CHECK(p.at(0, 0, 1) == 0.0);
    CHECK(p.at(0, 1, 0) == doctest::Approx(2.0));
    CHECK(p.at(0, 1, 1) == doctest::Approx(4.0));
}

TEST_CASE("mean removal") {
    const auto p = remove_mean(single_series({0.0, 1.0}, {1.0, 3.0}));
    CHECK(p.at(0, 0, 0) == doctest::Approx(-1.0));
    CHECK(p.at(0, 0, 1) == doctest::Approx(1.0));
}

TEST_CASE("mean removal suppresses the zero-Doppler component by at least 40 dB") {
    const auto t = uniform_times(3000, 10.0);
    const auto raw = single_series(t, tone(t, 0.05, 5.0));
    const auto grid = DopplerGrid::symmetric(0.5, 257);
    const auto before = doppler_transform(raw, grid);
    const auto after = doppler_transform(remove_mean(raw), grid);
    const std::size_t z = grid.zero_index();
    CHECK(20 * std::log10(std::abs(before.at(0, 0, z)) / std::abs(after.at(0, 0, z))) >= 40.0);
}

TEST_CASE("real input gives a conjugate-symmetric spectrum") {
    const SystemConfig c = scenes::mmwave();
    const auto w = generate_csi(c, scenes::lab(c, scenes::kMmwaveExtraDelay, 5.0), make_sampling_schedule(c), 60.0);
    const auto grid = DopplerGrid::symmetric(0.5, 257);
    for (const auto method : {TransformMethod::Direct, TransformMethod::Nufft}) {
        const auto x = doppler_transform(remove_mean(csi_power(w)), grid,
                                         {WindowFunction::Hamming, TimeReference::WeightedCenter, method});
        for (std::size_t j = 0; j < c.num_subcarriers; j += 5) {
            const auto s = x.series(0, j);
            const double scale = max_abs(s);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                CHECK(std::abs(s[g] - std::conj(s[grid.size() - 1 - g])) <= 1e-9 * scale);
            }
        }
    }
}

TEST_CASE("uniform samples on the DFT grid reproduce the textbook DFT") {
    const std::size_t n = 64;
    const auto t = uniform_times(n, 1.0);
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::sin(0.37 * static_cast<double>(k * k)) + 0.1 * static_cast<double>(k % 5);
    const auto ref = oracle::textbook_dft(p);
    const auto grid = DopplerGrid::symmetric(0.5, n + 1);
    for (const auto method : {TransformMethod::Direct, TransformMethod::Nufft}) {
        const auto x = doppler_transform(single_series(t, p), grid, {WindowFunction::Rect, TimeReference::WindowStart, method});
        const double scale = max_abs(ref) / static_cast<double>(n);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const long q = static_cast<long>(g) - static_cast<long>(grid.zero_index());
            const cd expected = ref[static_cast<std::size_t>((q + static_cast<long>(n)) % static_cast<long>(n))] / static_cast<double>(n);
            CHECK(std::abs(x.at(0, 0, g) - expected) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("a 0.05 Hz tone on the session schedule peaks within one bin") {
    const SystemConfig c = scenes::mmwave();
    const auto t = make_sampling_schedule(c);
    const auto grid = DopplerGrid::symmetric(0.5, 257);
    const auto x = doppler_transform(remove_mean(single_series(t, tone(t, 0.05))), grid);
    std::vector<double> mag(grid.size(), 0.0);
    for (std::size_t g = grid.zero_index() + 1; g < grid.size(); ++g) mag[g] = std::abs(x.at(0, 0, g));
    const double peak = grid.bins()[oracle::argmax(mag)];
    CHECK(std::abs(peak - 0.05) <= grid.spacing());
}

TEST_CASE("gridded transform matches the direct sum") {
    const SystemConfig c = scenes::lte();
    const auto w = generate_csi(c, scenes::lab(c, scenes::kLteExtraDelay, 0.0), make_sampling_schedule(c), 300.0);
    const auto power = remove_mean(csi_power(w));
    const auto grid = DopplerGrid::symmetric(0.5, 257);
    for (const auto ref : {TimeReference::WindowStart, TimeReference::WeightedCenter}) {
        const auto direct = doppler_transform(power, grid, {WindowFunction::Hamming, ref, TransformMethod::Direct});
        const auto nufft = doppler_transform(power, grid, {WindowFunction::Hamming, ref, TransformMethod::Nufft});
        const double scale = max_abs(direct.values());
        double worst = 0.0;
        for (std::size_t n = 0; n < direct.values().size(); ++n) {
            worst = std::max(worst, std::abs(direct.values()[n] - nufft.values()[n]));
        }
        CHECK(worst <= 1e-6 * scale);
        CHECK(direct.reference_time_s() == nufft.reference_time_s());
    }
}

TEST_CASE("direct transform agrees with the per-frequency oracle") {
    const SystemConfig c = scenes::mmwave();
    const auto t = make_sampling_schedule(c);
    const auto p = tone(t, 0.0123, 0.0, 1.1);
    const auto grid = DopplerGrid::symmetric(0.5, 129);
    const auto x = doppler_transform(single_series(t, p), grid, {WindowFunction::Hamming, TimeReference::WeightedCenter});
    const auto w = window_weights(t, WindowFunction::Hamming);
    const double t_ref = reference_time(t, w, TimeReference::WeightedCenter);
    for (std::size_t g = 0; g < grid.size(); g += 7) {
        const cd expected = oracle::nonuniform_sum(t, p, w, grid.bins()[g], t_ref);
        CHECK(std::abs(x.at(0, 0, g) - expected) <= 1e-9);
    }
}

TEST_CASE("transform is linear") {
    const SystemConfig c = scenes::mmwave();
    const auto t = make_sampling_schedule(c);
    const auto a = tone(t, 0.02);
    const auto b = tone(t, 0.13, 0.5, -0.4);
    std::vector<double> mix(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) mix[k] = 2.5 * a[k] - 0.75 * b[k];
    const auto grid = DopplerGrid::symmetric(0.5, 257);
    for (const auto method : {TransformMethod::Direct, TransformMethod::Nufft}) {
        const DopplerOptions o{WindowFunction::Hamming, TimeReference::WeightedCenter, method};
        const auto xa = doppler_transform(single_series(t, a), grid, o);
        const auto xb = doppler_transform(single_series(t, b), grid, o);
        const auto xm = doppler_transform(single_series(t, mix), grid, o);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(std::abs(xm.at(0, 0, g) - (2.5 * xa.at(0, 0, g) - 0.75 * xb.at(0, 0, g))) <= 1e-9);
        }
    }
}

TEST_CASE("Hamming sidelobes sit at least 25 dB under the main lobe") {
    const double duration = 100.0;
    const auto t = uniform_times(1000, 10.0);
    const auto grid = DopplerGrid::symmetric(0.5, 1001);
    const auto x = doppler_transform(single_series(t, tone(t, 0.1, 0.0, 0.0)), grid);
    double main = 0.0;
    double side = 0.0;
    for (std::size_t g = grid.zero_index(); g < grid.size(); ++g) {
        const double f = grid.bins()[g];
        const double m = std::abs(x.at(0, 0, g));
        if (std::abs(f - 0.1) < 2.2 / duration) {
            main = std::max(main, m);
        } else if (f > 2.2 / duration) {
            side = std::max(side, m);
        }
    }
    CHECK(20 * std::log10(main / side) >= 25.0);
}

TEST_CASE("window weights") {
    const auto t = uniform_times(11, 1.0);
    const auto h = window_weights(t, WindowFunction::Hamming);
    CHECK(h.front() == doctest::Approx(0.08));
    CHECK(h[5] == doctest::Approx(1.0));
    for (const double w : window_weights(t, WindowFunction::Rect)) CHECK(w == 1.0);
    CHECK(reference_time(t, h, TimeReference::WeightedCenter) == doctest::Approx(5.0));
    CHECK(reference_time(t, h, TimeReference::WindowStart) == 0.0);
}

TEST_CASE("grids past the Nyquist bound are rejected") {
    const SystemConfig c = scenes::mmwave();
    const auto t = make_sampling_schedule(c);
    CHECK(nyquist_bound_hz(t) == doctest::Approx(50.0));
    const auto p = single_series(t, tone(t, 0.05));
    CHECK_THROWS_AS(doppler_transform(p, DopplerGrid::symmetric(60.0, 257)), std::invalid_argument);
    CHECK_NOTHROW(doppler_transform(p, DopplerGrid::symmetric(50.0, 257)));
}
