#include <doctest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "watersense/features.hpp"

using namespace watersense;

namespace {

constexpr double kDf = 70e6 / 46.0;
constexpr std::size_t kM = 46;

CovarianceEstimate covariance_of(const std::vector<std::pair<double, double>>& paths, double noise, std::size_t snapshots,
                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise / std::sqrt(2.0));
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    std::vector<cd> s(kM * snapshots);
    for (std::size_t i = 0; i < snapshots; ++i) {
        for (const auto& [delay, gain] : paths) {
            const cd amp = std::polar(gain, ph(rng));
            const auto a = oracle::steering(delay, kM, kDf);
            for (std::size_t j = 0; j < kM; ++j) s[i * kM + j] += amp * a[j];
        }
        for (std::size_t j = 0; j < kM; ++j) s[i * kM + j] += cd(g(rng), g(rng));
    }
    return estimate_covariance(s, kM, snapshots);
}

/// One-bin spectrum whose subcarrier series is the power cross term of a path pair dtau apart.
DopplerSpectrum cross_term(double dtau, double carrier_hz, cd amplitude = 1.0) {
    std::vector<cd> v(kM * 3);
    for (std::size_t j = 0; j < kM; ++j) {
        const double f = carrier_hz + static_cast<double>(j) * kDf;
        v[j * 3 + 2] = amplitude * std::polar(1.0, -2.0 * kPi * f * dtau);
    }
    return DopplerSpectrum(1, kM, DopplerGrid::symmetric(0.1, 3), std::move(v), 0.0);
}

cd weight_response(const Eigen::VectorXcd& w, double delay) { return w.dot(steering_vector(delay, kM, kDf)); }

}  // namespace

TEST_CASE("MVDR with identity covariance is delay-and-sum") {
    CovarianceEstimate cov;
    cov.matrix = Eigen::MatrixXcd::Identity(kM, kM);
    const auto mvdr = beamformer_weights(cov, 53e-9, kM, kDf, BeamformerMode::Mvdr);
    const auto das = beamformer_weights(cov, 53e-9, kM, kDf, BeamformerMode::DelayAndSum);
    CHECK((mvdr - das).norm() <= 1e-12);
}

TEST_CASE("distortionless response") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto cov = covariance_of({{40e-9, 1.0}, {120e-9, 0.5}}, 0.1, 2, seed);
        for (const double delay : {20e-9, 53e-9, 200e-9}) {
            for (const auto mode : {BeamformerMode::Mvdr, BeamformerMode::DelayAndSum}) {
                const cd r = weight_response(beamformer_weights(cov, delay, kM, kDf, mode), delay);
                CHECK(std::abs(r - cd(1.0)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("MVDR suppresses a separated interferer") {
    const auto cov = covariance_of({{50e-9, 1.0}, {200e-9, 1.0}}, 0.01, 400, 3);
    const auto w = beamformer_weights(cov, 50e-9, kM, kDf, BeamformerMode::Mvdr);
    CHECK(std::abs(weight_response(w, 200e-9)) <= 0.1);
    CHECK(std::abs(weight_response(w, 50e-9)) == doctest::Approx(1.0));
}

TEST_CASE("MVDR weights reject degenerate covariances") {
    CovarianceEstimate cov;
    cov.degenerate = true;
    CHECK_THROWS(beamformer_weights(cov, 1e-8, kM, kDf, BeamformerMode::Mvdr));
    CovarianceEstimate rank_one = covariance_of({{50e-9, 1.0}}, 0.0, 1, 1);
    rank_one.matrix -= rank_one.loading * Eigen::MatrixXcd::Identity(kM, kM);
    rank_one.loading = 0.0;
    CHECK_THROWS_AS(beamformer_weights(rank_one, 50e-9, kM, kDf, BeamformerMode::Mvdr), IllConditionedError);
}

TEST_CASE("feature phase is the conjugated combiner output") {
    const double phi0 = 0.9;
    std::vector<cd> v(kM * 3);
    const auto a = oracle::steering(53e-9, kM, kDf);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.01);
    for (std::size_t j = 0; j < kM; ++j) v[j * 3 + 2] = 2.0 * std::polar(1.0, -phi0) * a[j] + cd(g(rng), g(rng));
    const DopplerSpectrum spectrum(1, kM, DopplerGrid::symmetric(0.1, 3), std::move(v), 0.0);
    const auto w = beamformer_weights({}, 53e-9, kM, kDf, BeamformerMode::DelayAndSum);
    const cd y = extract_feature(spectrum, 2, w, 0);
    CHECK(std::arg(y) == doctest::Approx(phi0).epsilon(0.01 / phi0));
    CHECK(std::abs(y) == doctest::Approx(2.0).epsilon(0.01));
    CHECK_THROWS(extract_feature(spectrum, 3, w, 0));
    CHECK_THROWS(extract_feature(spectrum, 2, w, 1));
}

TEST_CASE("band-centre phase follows the path and ignores the steered bin") {
    const double fc = 28e9;
    const double f_center = fc + 0.5 * static_cast<double>(kM - 1) * kDf;
    const double lambda = kSpeedOfLight / f_center;
    const double dtau = 53e-9;
    const auto phase = [&](double delay, double steer) {
        const auto s = cross_term(delay, fc);
        const auto w = beamformer_weights({}, steer, kM, kDf, BeamformerMode::DelayAndSum);
        return std::arg(reference_to_band_center(extract_feature(s, 2, w, 0), steer, kM, kDf));
    };
    const double base = phase(dtau, dtau);
    CHECK(oracle::wrap(base - 2.0 * kPi * f_center * dtau) == doctest::Approx(0.0).epsilon(1e-6));
    // Steering half a grid bin away leaves the phase where it was.
    CHECK(oracle::wrap(phase(dtau, dtau + 0.9e-9) - base) == doctest::Approx(0.0).epsilon(1e-6));
    // Half a wavelength less path is half a turn; an eighth is -pi/4, so rising water lowers the phase.
    CHECK(std::abs(oracle::wrap(phase(dtau - lambda / (2 * kSpeedOfLight), dtau) - base)) == doctest::Approx(kPi));
    CHECK(oracle::wrap(phase(dtau - lambda / (8 * kSpeedOfLight), dtau) - base) == doctest::Approx(-kPi / 4));
}

TEST_CASE("spatial refinement") {
    const std::vector<cd> same(3, cd(0.3, -0.4));
    const auto flat = spatial_refine(same);
    CHECK(flat.bin == 0);
    CHECK(flat.aoa_deg == 0.0);
    CHECK(std::abs(flat.value - cd(0.3, -0.4)) < 1e-12);

    std::vector<cd> ramp;
    for (std::size_t i = 0; i < 4; ++i) ramp.push_back(std::polar(1.0, 2.0 * kPi * 8.0 * static_cast<double>(i) / 64.0));
    const auto r = spatial_refine(ramp);
    CHECK(r.bin == 8);
    CHECK(std::abs(r.value) == doctest::Approx(1.0));
    CHECK(r.aoa_deg == doctest::Approx(rad2deg(std::asin(-0.25))));

    std::vector<cd> back;
    for (std::size_t i = 0; i < 4; ++i) back.push_back(std::polar(1.0, -2.0 * kPi * 8.0 * static_cast<double>(i) / 64.0));
    CHECK(spatial_refine(back).aoa_deg == doctest::Approx(-r.aoa_deg));

    const std::vector<cd> one = {cd(1.0)};
    CHECK_THROWS_AS(spatial_refine(one), std::invalid_argument);
}

TEST_CASE("bin stabilisation") {
    const std::vector<Cell> history = {{10, 4}, {11, 4}, {10, 5}, {12, 6}};
    CHECK(stabilize_bins({}, {3, 3}).cell == Cell{3, 3});
    const auto near = stabilize_bins(history, {12, 5});
    CHECK(near.cell == Cell{12, 5});
    CHECK_FALSE(near.coasting);
    const auto far = stabilize_bins(history, {30, 5});
    CHECK(far.coasting);
    CHECK(far.cell == Cell{10, 4});  // lower medians of {10,10,11,12} and {4,4,5,6}
    CHECK(stabilize_bins(history, {13, 7}, 3).coasting == false);
}

TEST_CASE("stabiliser keeps a bounded history") {
    BinStabilizer s(3, 1);
    CHECK_FALSE(s.coast());
    for (std::size_t k = 0; k < 3; ++k) s.update({20, 7});
    CHECK(s.update({40, 7}).coasting);
    CHECK(*s.coast() == Cell{20, 7});
    s.update({40, 7});
    s.update({40, 7});
    CHECK_FALSE(s.update({40, 7}).coasting);  // the old bins have aged out
    CHECK_THROWS(BinStabilizer(0));
}
