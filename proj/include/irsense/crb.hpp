// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Fisher information and Cramer-Rao bounds for zeta = [theta; nu; tau] under
// the two-phase observation model with i.i.d. CN(0, sigma_i^2) noise.
// alpha_k, G and sigma_i are treated as known.
//
// Each derivative dY_i/dzeta_j is a sum of rank-one tensors; a term that
// differentiates mode j is vectorized with the mode-j index map
//
//   h1(p,m,l) = m + l M + p M L
//   h2(p,m,l) = p + l P + m P L
//   h3(p,m,l) = p + m P + l P M        (zero-based)
//
// and terms in different modes are paired through `noise_cov_map`:
//
//   Omega_jk = sum_i (2 / sigma_i^2) Re sum_{s in j, t in k} <s, t>.

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "irsense/echo_tensor.hpp"
#include "irsense/scene_model.hpp"

namespace irsense {

struct FactorDerivatives {
    CMatrix a_theta; // P x K, d A[:,k] / d theta_k
    CMatrix b_theta; // M x K, d B[:,k] / d theta_k
    CMatrix a_nu;    // P x K, d A[:,k] / d nu_k
    CMatrix c_tau;   // L x K, d C[:,k] / d tau_k
    int phase_index = 1;
};

/// Fisher information with blocks ordered [theta_1..K, nu_1..K, tau_1..K].
struct FimMatrix {
    RMatrix omega;
    int targets = 0;
    std::pair<double, double> noise_variances{0.0, 0.0};
};

struct CrbResult {
    RVector theta; // rad^2
    RVector nu;    // Hz^2
    RVector tau;   // s^2
    RMatrix covariance;
};

using ProfilePair = std::pair<PhaseProfile, PhaseProfile>;
using TensorPair = std::pair<EchoTensor, EchoTensor>;
using DerivativePair = std::pair<FactorDerivatives, FactorDerivatives>;

FactorDerivatives factor_derivatives(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile,
                                     const CMatrix& beamformers, const WaveformConfig& waveform);

/// Zero-based index of entry (p, m, l) in the vectorized mode-`mode` unfolding.
std::size_t unfolding_index(int mode, int p, int m, int l, int pulses, int antennas, int subcarriers);

/// The P M L nonzero positions (u, v) of the noise cross-covariance between the
/// mode-j1 and mode-j2 vectorizations; each carries the value sigma^2.
std::vector<std::pair<std::size_t, std::size_t>> noise_cov_map(int j1, int j2, int pulses, int antennas,
                                                                int subcarriers);

/// sigma_i^2 giving the requested SNR on each noiseless phase tensor.
std::pair<double, double> noise_variances_for_snr(const SceneTruth& truth, const ChannelMatrix& g,
                                                  const ProfilePair& profiles, const CMatrix& beamformers,
                                                  const WaveformConfig& waveform, double snr_db);

/// Contribution of one phase.
RMatrix phase_fim(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile,
                  const CMatrix& beamformers, const WaveformConfig& waveform, double noise_variance);

/// Throws SingularFim when the diagonally scaled matrix has condition number above 1e14.
FimMatrix compute_fim(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& beamformers, const WaveformConfig& waveform,
                      std::pair<double, double> noise_variances);

CrbResult compute_crb(const FimMatrix& fim);

/// Log-likelihood up to a constant: -sum_i ||Y_i - M_i(zeta)||^2 / sigma_i^2.
double log_likelihood(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& beamformers, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> noise_variances);

/// Analytic gradient of `log_likelihood` with respect to zeta.
RVector score(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
              const CMatrix& beamformers, const WaveformConfig& waveform, const TensorPair& tensors,
              std::pair<double, double> noise_variances);

/// Same with caller-supplied factor derivatives.
RVector score(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
              const CMatrix& beamformers, const WaveformConfig& waveform, const TensorPair& tensors,
              std::pair<double, double> noise_variances, const DerivativePair& derivatives);

/// Largest deviation between the analytic score and central differences of
/// the log-likelihood, each entry relative to max(|analytic|, |numeric|,
/// sqrt(Omega_jj)). Steps are `step` rad for theta, `step / T_PRI` for nu and
/// `step * T_d` for tau.
double score_fd_check(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& beamformers, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> noise_variances, double step = 1e-6);

double score_fd_check(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& beamformers, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> noise_variances, double step, const DerivativePair& derivatives);

} // namespace irsense
