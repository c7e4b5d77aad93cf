// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "catch_amalgamated.hpp"
#include "fixture.hpp"
#include "irsense/tensor_synthesis.hpp"
#include "irsense/two_phase_estimator.hpp"
#include "irsense/vandermonde_cp.hpp"

using namespace irsense;
using Catch::Approx;
using fixture::error_of;

namespace {

FactorTriple exact_triple(const GroundTruthFactors& f, double df)
{
    FactorTriple t;
    t.a = f.a;
    t.b = f.b;
    t.c = f.c;
    t.phase_index = f.phase_index;
    for (int k = 0; k < f.rank(); ++k)
        t.generators.push_back(f.c(1, k) / f.c(0, k));
    (void)df;
    return t;
}

CMatrix random_diag(Rng& rng, int k)
{
    CMatrix d = CMatrix::Zero(k, k);
    for (int i = 0; i < k; ++i)
        d(i, i) = complex_normal(rng, 1.0) + cdouble(0.2, 0.0);
    return d;
}

EstimationResult run(const fixture::TrialRealization& r, int rank, const EstimatorOptions& opt = {},
                     const SimulationConfig& cfg = {})
{
    return estimate_targets(r.tensors.first, r.tensors.second, rank, cfg.scene.doa_prior, r.channel,
                            r.profiles.first, r.profiles.second, r.beamformers, cfg.waveform, opt);
}

} // namespace

TEST_CASE("alignment of identical and swapped triples")
{
    const auto r = fixture::default_trial();
    const FactorTriple t = cp_decompose(r.tensors.first, 2);

    const AlignedFactors same = align_columns(t, t);
    CHECK(same.permutation == std::vector<int>{0, 1});

    const AlignedFactors swapped = align_columns(t.permuted({1, 0}), t);
    CHECK(swapped.permutation == std::vector<int>{1, 0});
    CHECK(swapped.phase1.generators == t.generators);
    CHECK(swapped.rho.rows() == 2);
}

TEST_CASE("alignment matches generators across phases")
{
    const auto r = fixture::default_trial();
    const FactorTriple t1 = cp_decompose(r.tensors.first, 2);
    const FactorTriple t2 = cp_decompose(r.tensors.second, 2);
    for (const auto& perm : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
        const AlignedFactors al = align_columns(t1.permuted(perm), t2);
        for (int k = 0; k < 2; ++k)
            CHECK(std::abs(std::arg(al.phase1.generators[static_cast<std::size_t>(k)] /
                                    al.phase2.generators[static_cast<std::size_t>(k)])) < 1e-9);
    }
}

TEST_CASE("alignment rejects indistinguishable delays")
{
    FactorTriple t;
    t.a = CMatrix::Ones(3, 2);
    t.b = CMatrix::Ones(2, 2);
    t.c = CMatrix(4, 2);
    t.c.col(0) = delay_vector(3.2e-6, 4, 5e5);
    t.c.col(1) = t.c.col(0);
    t.generators = {t.c(0, 0), t.c(0, 1)};
    CHECK(error_of([&] { align_columns(t, t); }) == ErrorCode::AmbiguousAlignment);
}

TEST_CASE("noiseless default scene is recovered exactly")
{
    const auto r = fixture::default_trial();
    const EstimationResult res = run(r, 2);
    REQUIRE(res.targets.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& e = res.targets[k];
        const auto& t = r.truth.targets[k];
        CHECK(std::abs(e.theta - t.theta) < 1e-5);
        CHECK(std::abs(e.tau - t.tau) < 1e-12);
        CHECK(std::abs(e.nu - t.nu) < 1.0);
        CHECK(e.range == Approx(kSpeedOfLight * e.tau / 2));
        CHECK(e.velocity == Approx(e.nu * kSpeedOfLight / (2 * 60e9)));
        CHECK_FALSE(e.boundary_ambiguous);
    }
    CHECK(res.targets[0].tau < res.targets[1].tau);
    CHECK(res.residuals.first < 1e-10);
    CHECK(res.residuals.second < 1e-10);
    CHECK(res.doppler_masked == 0);
}

TEST_CASE("delay estimates agree across phases")
{
    const auto r = fixture::default_trial();
    const WaveformConfig w;
    const AlignedFactors al =
        align_columns(cp_decompose(r.tensors.first, 2), cp_decompose(r.tensors.second, 2));
    for (const DelayEstimate& d : estimate_delay(al, w)) {
        CHECK(std::abs(d.per_phase.first - d.per_phase.second) < 1e-13);
        CHECK(d.tau >= w.block_duration());
        CHECK(d.tau <= w.block_duration() + w.cyclic_prefix);
    }
}

TEST_CASE("delay unwrapping")
{
    const WaveformConfig w;
    const double df = w.subcarrier_spacing();
    const auto gen = [&](double tau) { return std::polar(1.0, -kTwoPi * df * tau); };

    const double tau1 = 3.404243442797508e-06;
    const double raw = std::fmod(std::arg(gen(tau1)) / (-kTwoPi * df) + 1.0 / df, 1.0 / df);
    CHECK(raw == Approx(1.404243442797507e-06).epsilon(1e-9));
    CHECK(unwrap_delay(gen(tau1), w) == Approx(tau1).epsilon(1e-12));

    CHECK(unwrap_delay(gen(3e-6), w) == Approx(3e-6).epsilon(1e-12));
    CHECK(unwrap_delay(gen(4e-6), w) == Approx(4e-6).epsilon(1e-12));
    CHECK(error_of([&] { unwrap_delay(gen(2.5e-6), w); }) == ErrorCode::UnwrapInfeasible);
}

TEST_CASE("scaling ambiguity cancels in the phase ratio")
{
    const auto r = fixture::default_trial();
    const WaveformConfig w;
    const GroundTruthFactors f1 = build_factor_matrices(r.truth, r.channel, r.profiles.first, r.beamformers, w);
    const GroundTruthFactors f2 = build_factor_matrices(r.truth, r.channel, r.profiles.second, r.beamformers, w);
    const CVector u = r.channel.rank_one->u;

    AlignedFactors base;
    base.phase1 = exact_triple(f1, w.subcarrier_spacing());
    base.phase2 = exact_triple(f2, w.subcarrier_spacing());
    base.permutation = {0, 1};
    cdouble reference[2];
    for (int k = 0; k < 2; ++k) {
        reference[k] = gamma_hat(base, k);
        const cdouble expected =
            gamma_of_theta(r.truth.targets[static_cast<std::size_t>(k)].theta, u, r.profiles.first,
                           r.profiles.second, w.wavelength());
        CHECK(std::abs(reference[k] - expected) / std::abs(expected) < 1e-12);
    }

    Rng rng = derive_rng(77, 0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const CMatrix l1 = random_diag(rng, 2), l2 = random_diag(rng, 2);
        const CMatrix l3 = (l1 * l2).inverse();
        const CMatrix g1 = random_diag(rng, 2);
        const CMatrix g3 = l3;
        const CMatrix g2 = (g1 * g3).inverse();
        AlignedFactors s = base;
        s.phase1.a = f1.a * l1;
        s.phase1.b = f1.b * l2;
        s.phase1.c = f1.c * l3;
        s.phase2.a = f2.a * g1;
        s.phase2.b = f2.b * g2;
        s.phase2.c = f2.c * g3;
        for (int k = 0; k < 2; ++k)
            worst = std::max(worst, std::abs(gamma_hat(s, k) - reference[k]) / std::abs(reference[k]));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("identical profiles are not identifiable")
{
    const auto r = fixture::default_trial();
    const SimulationConfig cfg;
    const ErrorCode code = error_of([&] {
        estimate_targets(r.tensors.first, r.tensors.first, 2, cfg.scene.doa_prior, r.channel, r.profiles.first,
                         r.profiles.first, r.beamformers, cfg.waveform);
    });
    CHECK(code == ErrorCode::NonIdentifiable);
}

TEST_CASE("refined DOA never loses to the raw grid")
{
    const WaveformConfig w;
    const SimulationConfig cfg;
    const double step = deg2rad(0.02);
    for (std::uint64_t seed : {3u, 5u, 8u}) {
        const auto r = fixture::default_trial(5.0, seed);
        const AlignedFactors al =
            align_columns(cp_decompose(r.tensors.first, 2), cp_decompose(r.tensors.second, 2));
        const CVector u = r.channel.rank_one->u;
        const auto doa = resolve_doa(al, u, r.profiles.first, r.profiles.second, cfg.scene.doa_prior, step,
                                     w.wavelength());
        for (const DoaEstimate& d : doa) {
            double best = kInf;
            const auto [lo, hi] = cfg.scene.doa_prior;
            for (int i = 0; lo + i * step <= hi + 1e-12; ++i) {
                const cdouble g = gamma_of_theta(std::min(hi, lo + i * step), u, r.profiles.first,
                                                 r.profiles.second, w.wavelength());
                best = std::min(best, std::abs(d.gamma_hat - g));
            }
            CHECK(d.residual <= best);
            CHECK(d.theta >= lo);
            CHECK(d.theta <= hi);
        }
    }
}

TEST_CASE("permuting either input triple leaves estimates unchanged")
{
    const auto r = fixture::default_trial(10.0, 12);
    const SimulationConfig cfg;
    const FactorTriple t1 = cp_decompose(r.tensors.first, 2);
    const FactorTriple t2 = cp_decompose(r.tensors.second, 2);
    const auto est = [&](const FactorTriple& a, const FactorTriple& b) {
        return estimate_from_factors(a, b, cfg.scene.doa_prior, r.channel, r.profiles.first, r.profiles.second,
                                     r.beamformers, cfg.waveform);
    };
    const EstimationResult ref = est(t1, t2);
    for (const auto& res : {est(t1.permuted({1, 0}), t2), est(t1, t2.permuted({1, 0}))}) {
        REQUIRE(res.targets.size() == 2);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(res.targets[k].theta == Approx(ref.targets[k].theta).epsilon(1e-12));
            CHECK(res.targets[k].tau == Approx(ref.targets[k].tau).epsilon(1e-12));
            CHECK(res.targets[k].nu == Approx(ref.targets[k].nu).epsilon(1e-12));
        }
    }
}

TEST_CASE("Doppler at zero and near the unambiguous limit")
{
    SECTION("stationary target")
    {
        SimulationConfig cfg;
        cfg.scene.targets[0].radial_velocity = 0.0;
        const auto r = fixture::default_trial(kInf, 1, cfg);
        const EstimationResult res = run(r, 2, {}, cfg);
        CHECK(std::abs(res.targets[0].nu) < 1.0);
    }
    SECTION("boundary velocity is flagged")
    {
        SimulationConfig cfg;
        const double v_max = sensing_limits(cfg.waveform).v_max;
        cfg.scene.targets[0].radial_velocity = 0.499 * v_max; // edge of the symmetric window ±1/(2 T_PRI)
        const auto r = fixture::default_trial(kInf, 1, cfg);
        const EstimationResult res = run(r, 2, {}, cfg);
        CHECK(res.targets[0].boundary_ambiguous);
        CHECK(std::abs(std::abs(res.targets[0].nu) - std::abs(r.truth.targets[0].nu)) < 1.0);
        CHECK_FALSE(res.targets[1].boundary_ambiguous);
    }
}

TEST_CASE("single-phase correlation on a Rician channel")
{
    SimulationConfig cfg;
    cfg.channel.rician_db = 0.0;
    cfg.scene.targets.resize(1);
    const auto r = fixture::default_trial(kInf, 2, cfg);
    REQUIRE(r.channel.singular_ratio() > 1e-3);

    EstimatorOptions opt;
    opt.doa_method = DoaMethod::SinglePhaseCorrelation;
    const EstimationResult res = run(r, 1, opt, cfg);
    REQUIRE(res.targets.size() == 1);
    CHECK(std::abs(res.targets[0].theta - r.truth.targets[0].theta) < 1e-4);

    const double theta0 = 0.61;
    const CVector b = r.channel.g.transpose() * r.profiles.first.diagonal().asDiagonal() *
                      steering_vector(theta0, 32, cfg.arrays.spacing, cfg.arrays.wavelength);
    const double est = estimate_doa_multirank(b, r.channel, r.profiles.first, cfg.scene.doa_prior, deg2rad(0.02),
                                              cfg.waveform.wavelength());
    CHECK(est == Approx(theta0).margin(1e-6));
}

TEST_CASE("single-phase correlation requires a multi-rank channel")
{
    const auto r = fixture::default_trial();
    const SimulationConfig cfg;
    const CVector b = r.channel.g.transpose() * r.profiles.first.diagonal();
    CHECK(error_of([&] {
              estimate_doa_multirank(b, r.channel, r.profiles.first, cfg.scene.doa_prior, deg2rad(0.02),
                                     cfg.waveform.wavelength());
          }) == ErrorCode::RankOneChannel);
}

TEST_CASE("declared rank below the target count")
{
    const auto r = fixture::default_trial();
    const EstimationResult res = run(r, 1);
    CHECK(res.targets.size() == 1);
    CHECK(res.residuals.first > 1e-2);
    CHECK(res.residuals.second > 1e-2);
}
