// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "catch_amalgamated.hpp"
#include "fixture.hpp"
#include "irsense/tensor_synthesis.hpp"
#include "irsense/vandermonde_cp.hpp"

using namespace irsense;
using Catch::Approx;
using fixture::error_of;

namespace {

double relative_error(const EchoTensor& a, const EchoTensor& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.data()[i] - b.data()[i]);
        den += std::norm(b.data()[i]);
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("uniqueness condition")
{
    CHECK(check_uniqueness(10, 16, 10, 2).unique);
    const UniquenessCheck l1 = check_uniqueness(10, 16, 1, 2);
    CHECK_FALSE(l1.unique);
    CHECK_FALSE(l1.reason.empty());
    CHECK_FALSE(check_uniqueness(1, 16, 10, 2).unique);
    CHECK(check_uniqueness(2, 1, 3, 2).unique);
    CHECK_FALSE(check_uniqueness(2, 1, 2, 2).unique);
}

TEST_CASE("single-entry tensor unfolds to itself")
{
    EchoTensor y(1, 1, 1);
    y(0, 0, 0) = cdouble(2.0, -1.0);
    for (int mode = 1; mode <= 3; ++mode) {
        const CMatrix m = unfold(y, mode);
        REQUIRE(m.size() == 1);
        CHECK(m(0, 0) == y(0, 0, 0));
    }
}

TEST_CASE("rank-one decomposition recovers the delay generator")
{
    const int P = 5, M = 3, L = 6;
    const double df = 5e5, tau = 3.2e-6;
    Rng rng = derive_rng(21, 0);
    GroundTruthFactors f;
    f.a = CMatrix(P, 1);
    f.b = CMatrix(M, 1);
    for (int p = 0; p < P; ++p)
        f.a(p, 0) = complex_normal(rng, 1.0);
    for (int m = 0; m < M; ++m)
        f.b(m, 0) = complex_normal(rng, 1.0);
    f.c = cdouble(0.3, 0.7) * delay_vector(tau, L, df);
    const EchoTensor y = synthesize_echo_tensor(f);

    Eigen::JacobiSVD<CMatrix> svd(unfold(y, 1));
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));

    const FactorTriple t = cp_decompose(y, 1);
    REQUIRE(t.rank() == 1);
    CHECK(std::abs(t.generators[0] - std::polar(1.0, -kTwoPi * df * tau)) < 1e-10);
    CHECK(std::abs(t.c(0, 0) - t.generators[0]) < 1e-14);
    CHECK(t.residual < 1e-10);
}

TEST_CASE("default scene decomposition")
{
    const auto r = fixture::default_trial();
    const WaveformConfig w;
    const GroundTruthFactors f = build_factor_matrices(r.truth, r.channel, r.profiles.first, r.beamformers, w);
    const FactorTriple t = cp_decompose(r.tensors.first, 2);
    REQUIRE(t.rank() == 2);
    CHECK(relative_error(reconstruct(t), r.tensors.first) < 1e-10);
    CHECK(t.residual < 1e-10);

    // Generators match the true delays up to permutation.
    const double df = w.subcarrier_spacing();
    std::vector<cdouble> truth_gen;
    for (const auto& tgt : r.truth.targets)
        truth_gen.push_back(std::polar(1.0, -kTwoPi * df * tgt.tau));
    for (const cdouble& g : t.generators) {
        CHECK(std::abs(g) == Approx(1.0).epsilon(1e-15));
        double best = kInf;
        for (const cdouble& tg : truth_gen)
            best = std::min(best, std::abs(g - tg));
        CHECK(best < 1e-9);
    }

    // Columns equal the true ones up to a scaling with product one.
    for (int k = 0; k < 2; ++k) {
        int match = std::abs(t.generators[k] - truth_gen[0]) < 1e-6 ? 0 : 1;
        const cdouble la = f.a.col(match).dot(t.a.col(k)) / f.a.col(match).squaredNorm();
        const cdouble lb = f.b.col(match).dot(t.b.col(k)) / f.b.col(match).squaredNorm();
        const cdouble lc = f.c.col(match).dot(t.c.col(k)) / f.c.col(match).squaredNorm();
        CHECK((t.a.col(k) - la * f.a.col(match)).norm() / t.a.col(k).norm() < 1e-9);
        CHECK((t.b.col(k) - lb * f.b.col(match)).norm() / t.b.col(k).norm() < 1e-9);
        CHECK((t.c.col(k) - lc * f.c.col(match)).norm() / t.c.col(k).norm() < 1e-9);
        CHECK(std::abs(la * lb * lc - 1.0) < 1e-9);
    }
}

TEST_CASE("decomposition is deterministic and ordered")
{
    const auto r = fixture::default_trial(10.0, 4);
    const FactorTriple x = cp_decompose(r.tensors.first, 2);
    const FactorTriple y = cp_decompose(r.tensors.first, 2);
    CHECK(x.generators == y.generators);
    CHECK(x.a == y.a);
    const auto phase = [](cdouble g) { return std::fmod(kTwoPi - std::arg(g) + kTwoPi, kTwoPi); };
    CHECK(phase(x.generators[0]) >= phase(x.generators[1]));
}

TEST_CASE("permuted factors")
{
    const auto r = fixture::default_trial();
    const FactorTriple t = cp_decompose(r.tensors.first, 2);
    const FactorTriple s = t.permuted({1, 0});
    CHECK(s.generators[0] == t.generators[1]);
    CHECK(s.a.col(0) == t.a.col(1));
    CHECK(s.c.col(1) == t.c.col(0));
    CHECK(relative_error(reconstruct(s), reconstruct(t)) < 1e-15);
}

TEST_CASE("decomposition errors")
{
    SimulationConfig cfg;
    cfg.waveform.subcarriers = 1;
    const auto r = fixture::default_trial(kInf, 1, cfg);
    const ErrorCode code = error_of([&] { cp_decompose(r.tensors.first, 2); });
    CHECK(code == ErrorCode::UniquenessViolated);

    EchoTensor zero(4, 3, 5);
    CHECK(error_of([&] { cp_decompose(zero, 1); }) == ErrorCode::RankDeficient);

    // Rank one data asked for two components.
    GroundTruthFactors f;
    f.a = CMatrix::Ones(4, 1);
    f.b = CMatrix::Ones(3, 1);
    f.c = delay_vector(1e-6, 5, 3e5);
    CHECK(error_of([&] { cp_decompose(synthesize_echo_tensor(f), 2); }) == ErrorCode::RankDeficient);
}

TEST_CASE("generator error shrinks with SNR")
{
    const WaveformConfig w;
    const int trials = 40;
    std::vector<double> medians;
    for (double snr : {-10.0, 0.0, 10.0, 20.0}) {
        std::vector<double> errs;
        for (int t = 0; t < trials; ++t) {
            const auto r = fixture::default_trial(snr, 100 + static_cast<std::uint64_t>(t));
            try {
                const FactorTriple f = cp_decompose(r.tensors.first, 2);
                for (const cdouble& g : f.generators) {
                    double best = kInf;
                    for (const auto& tgt : r.truth.targets)
                        best = std::min(best, std::abs(std::arg(
                                                  g * std::polar(1.0, kTwoPi * w.subcarrier_spacing() * tgt.tau))));
                    errs.push_back(best);
                }
            } catch (const SenseError&) {
                errs.push_back(kPi);
            }
        }
        std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
        medians.push_back(errs[errs.size() / 2]);
    }
    for (std::size_t i = 1; i < medians.size(); ++i)
        CHECK(medians[i] < medians[i - 1]);
}

TEST_CASE("pseudo-inverse of a tall matrix")
{
    Rng rng = derive_rng(2, 2);
    CMatrix m(6, 3);
    for (int i = 0; i < m.size(); ++i)
        m(i) = complex_normal(rng, 1.0);
    const CMatrix pinv = pseudo_inverse(m);
    CHECK((pinv * m - CMatrix::Identity(3, 3)).norm() < 1e-12);
}
