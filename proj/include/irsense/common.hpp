// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace irsense {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Point2 = Eigen::Vector2d;

/// Random engine used everywhere; all stochastic operations take it by reference.
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 2.99792458e8;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cdouble kJ{0.0, 1.0};
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Circularly-symmetric complex normal sample with total variance `variance`.
inline cdouble complex_normal(Rng& rng, double variance)
{
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

/// Independent stream for (seed, a, b); used for per-trial reproducibility.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

} // namespace irsense
