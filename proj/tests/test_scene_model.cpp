// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <Eigen/SVD>

#include "catch_amalgamated.hpp"
#include "irsense/config.hpp"
#include "irsense/errors.hpp"
#include "irsense/scene_model.hpp"
#include "fixture.hpp"

using namespace irsense;
using Catch::Approx;
using fixture::error_of;

namespace {

ArrayConfig default_arrays() { return ArrayConfig::half_wavelength(16, 32, 60e9); }

double incident_angle(const SceneConfig& s)
{
    return relative_angle(s.irs_position, s.ap_position, s.irs_broadside);
}

} // namespace

TEST_CASE("steering vector at broadside is uniform")
{
    const CVector a = steering_vector(0.0, 4, 0.5, 1.0);
    for (int n = 0; n < 4; ++n)
        CHECK(std::abs(a(n) - cdouble(0.5, 0.0)) < 1e-15);
}

TEST_CASE("steering vector at endfire alternates sign")
{
    const CVector a = steering_vector(kPi / 2.0, 2, 0.5, 1.0);
    CHECK(std::abs(a(0) - cdouble(1.0 / std::sqrt(2.0), 0.0)) < 1e-15);
    CHECK(std::abs(a(1) - cdouble(-1.0 / std::sqrt(2.0), 0.0)) < 1e-15);
}

TEST_CASE("steering vector phases at thirty degrees")
{
    const CVector a = steering_vector(deg2rad(30.0), 3, 0.5, 1.0);
    const double expected[] = {0.0, kPi / 2.0, kPi};
    for (int n = 0; n < 3; ++n) {
        CHECK(std::abs(std::abs(a(n)) - 1.0 / std::sqrt(3.0)) < 1e-15);
        CHECK(std::abs(std::arg(a(n) * std::exp(cdouble(0.0, -expected[n])))) < 1e-12);
    }
    CHECK(a.norm() == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("steering vector conjugate symmetry and derivative")
{
    const double lambda = kSpeedOfLight / 60e9;
    const double theta = 0.37;
    const CVector pos = steering_vector(theta, 32, lambda / 2, lambda);
    const CVector neg = steering_vector(-theta, 32, lambda / 2, lambda);
    CHECK((neg - pos.conjugate()).norm() < 1e-14);

    const double h = 1e-6;
    const CVector fd = (steering_vector(theta + h, 32, lambda / 2, lambda) -
                        steering_vector(theta - h, 32, lambda / 2, lambda)) /
                       (2 * h);
    const CVector d = steering_vector_derivative(theta, 32, lambda / 2, lambda);
    CHECK((fd - d).norm() / d.norm() < 1e-8);
}

TEST_CASE("mean path loss at the default AP-IRS distance")
{
    const double dist = std::hypot(100.0, 100.0);
    CHECK(dist == Approx(141.42).margin(0.005));
    CHECK(mean_path_loss_db(dist) == Approx(111.0).margin(0.05));
}

TEST_CASE("LOS channel is rank one with the expected shape")
{
    const SceneConfig scene = SceneConfig::default_scene();
    Rng rng = derive_rng(11, 0);
    const ChannelMatrix g = build_los_channel(scene, default_arrays(), rng);
    CHECK(g.g.rows() == 32);
    CHECK(g.g.cols() == 16);
    REQUIRE(g.rank_one.has_value());
    const auto& r1 = *g.rank_one;
    const CMatrix outer = r1.sigma * r1.u * r1.v.transpose();
    CHECK((g.g - outer).norm() / g.g.norm() < 1e-12);
    CHECK(g.singular_ratio() < 1e-10);
    CHECK(r1.u.norm() == Approx(1.0).epsilon(1e-14));
    CHECK(r1.v.norm() == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("LOS channel rejects coincident AP and IRS")
{
    SceneConfig scene = SceneConfig::default_scene();
    scene.ap_position = scene.irs_position;
    Rng rng = derive_rng(1, 0);
    CHECK(error_of([&] { build_los_channel(scene, default_arrays(), rng); }) == ErrorCode::DegenerateGeometry);
}

TEST_CASE("Rician channel limits and rank")
{
    const SceneConfig scene = SceneConfig::default_scene();
    const ArrayConfig arrays = default_arrays();
    Rng rng = derive_rng(3, 0);
    const ChannelMatrix los = build_los_channel(scene, arrays, rng);

    SECTION("infinite factor returns the LOS channel")
    {
        const ChannelMatrix g = build_rician_channel(los, arrays, kInf, 4, rng);
        CHECK((g.g - los.g).norm() == 0.0);
    }

    SECTION("four scattered paths give rank five")
    {
        const ChannelMatrix g = build_rician_channel(los, arrays, 0.0, 4, rng);
        CHECK_FALSE(g.rank_one.has_value());
        Eigen::JacobiSVD<CMatrix> svd(g.g);
        const RVector s = svd.singularValues();
        CHECK(s(4) / s(0) > 1e-6);
        CHECK(s(5) / s(0) < 1e-12);
    }

    SECTION("mixing coefficients at 13 dB")
    {
        Rng a = derive_rng(5, 1);
        Rng b = derive_rng(5, 1);
        const ChannelMatrix g13 = build_rician_channel(los, arrays, 13.0, 4, a);
        const ChannelMatrix g0 = build_rician_channel(los, arrays, 0.0, 4, b);
        // Same draw: G = cl*LOS + cn*NLOS, recover both parts from the two mixtures.
        const double k13 = std::pow(10.0, 1.3);
        const double cl13 = std::sqrt(k13 / (1 + k13)), cn13 = std::sqrt(1 / (1 + k13));
        const double c0 = std::sqrt(0.5);
        const CMatrix nlos = (g0.g - c0 * los.g) / c0;
        CHECK((g13.g - cl13 * los.g - cn13 * nlos).norm() / g13.g.norm() < 1e-12);
        CHECK(nlos.norm() == Approx(los.g.norm()).epsilon(1e-12));
        const double ratio = (cl13 * los.g).squaredNorm() / (cn13 * nlos).squaredNorm();
        CHECK(ratio == Approx(19.95).epsilon(1e-3));
    }
}

TEST_CASE("sensing limits with the default waveform")
{
    const WaveformConfig w;
    const SensingLimits lim = sensing_limits(w);
    CHECK(lim.r_min == Approx(449.688687).epsilon(1e-9));
    CHECK(lim.r_max == Approx(599.584916).epsilon(1e-9));
    CHECK(lim.v_max == Approx(312.2838104167).epsilon(1e-9));
    CHECK(lim.r_min < lim.r_max);
}

TEST_CASE("sensing limits scale with the timing constants")
{
    WaveformConfig w;
    const SensingLimits full = sensing_limits(w);
    w.symbol_duration /= 2;
    w.cyclic_prefix /= 2;
    const SensingLimits half = sensing_limits(w);
    CHECK(std::abs(half.r_min / full.r_min - 0.5) < 1e-12);
    CHECK(std::abs(half.r_max / full.r_max - 0.5) < 1e-12);
}

TEST_CASE("target truth for the default scene")
{
    const SceneConfig scene = SceneConfig::default_scene();
    const WaveformConfig w;
    Rng rng = derive_rng(1, 0);
    const SceneTruth truth = derive_target_truth(scene, w, rng);
    REQUIRE(truth.size() == 2);
    CHECK(truth.tau0 == Approx(9.434617346998736e-07).epsilon(1e-12));

    const auto& t0 = truth.targets[0];
    CHECK(t0.range == Approx(510.2832546733).epsilon(1e-11));
    CHECK(t0.tau == Approx(3.404243442797508e-06).epsilon(1e-12));
    CHECK(t0.nu == Approx(6668.6133912015).epsilon(1e-11));
    CHECK(t0.theta == Approx(5.575606784091929e-01).epsilon(1e-12));

    const auto& t1 = truth.targets[1];
    CHECK(t1.range == Approx(559.9160651383).epsilon(1e-11));
    CHECK(t1.tau == Approx(3.735357913095588e-06).epsilon(1e-12));
    CHECK(t1.nu == Approx(-8806.0921132312).epsilon(1e-11));
    CHECK(t1.theta == Approx(6.638627102512338e-01).epsilon(1e-12));

    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& t = truth.targets[k];
        CHECK(t.tau == 2.0 * t.range / kSpeedOfLight);
        CHECK(t.nu == 2.0 * scene.targets[k].radial_velocity * w.carrier_hz / kSpeedOfLight);
        CHECK(t.theta >= scene.doa_prior.first);
        CHECK(t.theta <= scene.doa_prior.second);
    }
}

TEST_CASE("target truth is deterministic and zero velocity has zero Doppler")
{
    SceneConfig scene = SceneConfig::default_scene();
    scene.targets[0].radial_velocity = 0.0;
    const WaveformConfig w;
    Rng a = derive_rng(9, 2), b = derive_rng(9, 2);
    const SceneTruth x = derive_target_truth(scene, w, a);
    const SceneTruth y = derive_target_truth(scene, w, b);
    CHECK(x.targets[0].nu == 0.0);
    for (std::size_t k = 0; k < x.size(); ++k)
        CHECK(x.targets[k].alpha == y.targets[k].alpha);
}

TEST_CASE("target truth validation errors")
{
    const WaveformConfig w;
    Rng rng = derive_rng(1, 0);
    SECTION("range outside the window")
    {
        SceneConfig scene = SceneConfig::default_scene();
        scene.targets[0].position = Point2(300.0, 0.0);
        CHECK(error_of([&] { derive_target_truth(scene, w, rng); }) == ErrorCode::OutOfRange);
    }
    SECTION("duplicate targets")
    {
        SceneConfig scene = SceneConfig::default_scene();
        scene.targets[1] = scene.targets[0];
        CHECK(error_of([&] { derive_target_truth(scene, w, rng); }) == ErrorCode::DuplicateParameter);
    }
}

TEST_CASE("phase profiles cover the prior")
{
    const SceneConfig scene = SceneConfig::default_scene();
    const auto [p1, p2] = design_phase_profiles(scene.doa_prior, default_arrays(), 4, incident_angle(scene));
    REQUIRE(p1.beam_directions.size() == 4);
    const double expected[] = {31.875, 35.625, 39.375, 43.125};
    for (int s = 0; s < 4; ++s)
        CHECK(rad2deg(p1.beam_directions[s]) == Approx(expected[s]).epsilon(1e-12));
    CHECK(p1.phase_index == 1);
    CHECK(p2.phase_index == 2);

    double max_diff = 0.0;
    for (std::size_t n = 0; n < p1.phases.size(); ++n) {
        max_diff = std::max(max_diff, std::abs(p1.phases[n] - p2.phases[n]));
        CHECK(p1.phases[n] >= 0.0);
        CHECK(p1.phases[n] < kTwoPi);
    }
    CHECK(max_diff > 0.0);
    CHECK((p1.diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK((p2.diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15);

    CHECK(incident_angle(scene) == Approx(2.356194490192345).epsilon(1e-14));
    CHECK(p1.phases[0] == Approx(0.0).margin(1e-15));
    CHECK(p1.phases[1] == Approx(2.402769757900255).epsilon(1e-12));
    CHECK(p1.phases[2] == Approx(4.80553951580051).epsilon(1e-12));
}

TEST_CASE("phase profiles reject an uneven partition")
{
    const ArrayConfig arrays = ArrayConfig::half_wavelength(16, 30, 60e9);
    CHECK(error_of([&] { design_phase_profiles({deg2rad(30.0), deg2rad(45.0)}, arrays, 4); }) ==
          ErrorCode::InvalidPartition);
}

TEST_CASE("beamformers are matched to the channel")
{
    const SceneConfig scene = SceneConfig::default_scene();
    Rng rng = derive_rng(2, 0);
    const ChannelMatrix g = build_los_channel(scene, default_arrays(), rng);
    const WaveformConfig w;
    const CMatrix bf = design_beamformers(g, w);
    CHECK(bf.rows() == 16);
    CHECK(bf.cols() == 10);
    const CVector v = g.rank_one->v;
    const CVector wtv = bf.transpose() * v;
    for (int p = 0; p < bf.cols(); ++p) {
        CHECK(bf.col(p).norm() == Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(bf.col(p).dot(v.conjugate())) == Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(wtv(p)) > 0.5);
    }
}

TEST_CASE("config defaults and parsing")
{
    SimulationConfig cfg;
    cfg.finalize();
    CHECK(cfg.waveform.carrier_hz == 60e9);
    CHECK(cfg.waveform.transmit_power == 1.0);
    CHECK(cfg.arrays.spacing == Approx(cfg.waveform.wavelength() / 2));

    const SimulationConfig parsed = parse_config(R"({"waveform": {"subcarriers": 6},
        "scene": {"doa_prior_deg": [29, 46]}, "experiment": {"trials": 7}})");
    CHECK(parsed.waveform.subcarriers == 6);
    CHECK(parsed.experiment.trials == 7);
    CHECK(parsed.scene.doa_prior.first == Approx(deg2rad(29.0)));

    CHECK(error_of([] { parse_config("{not json"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { parse_config(R"({"waveform": {"subcarriers": "x"}})"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { load_config("/nonexistent/irsense.json"); }) == ErrorCode::ConfigError);
}
