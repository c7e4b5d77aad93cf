// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Ground-truth CP factors of the subcarrier-domain echo model and the noisy
// two-phase observations built from them.
//
//   A_i[:,k] = (W^T G^T Phi_i a(theta_k)) .* d(nu_k),  d_p = exp(j2pi p T_PRI nu)
//   B_i[:,k] = G^T Phi_i a(theta_k)
//   C[:,k]   = alpha_k f(tau_k),                        f_l = exp(-j2pi l df tau)
//
// with p = 1..P and l = 1..L. The known common phase exp(-j2pi l df tau0) is
// dropped. IRS elements are spaced half a wavelength apart.

#pragma once

#include <optional>

#include "irsense/echo_tensor.hpp"
#include "irsense/scene_model.hpp"

namespace irsense {

struct GroundTruthFactors {
    CMatrix a; // P x K
    CMatrix b; // M x K
    CMatrix c; // L x K
    int phase_index = 1;

    int rank() const { return static_cast<int>(c.cols()); }
};

/// d(nu): P-vector with entries exp(j 2pi p T_PRI nu), p = 1..P.
CVector doppler_vector(double nu, int pulses, double pri);
/// f(tau): L-vector with entries exp(-j 2pi l df tau), l = 1..L.
CVector delay_vector(double tau, int subcarriers, double subcarrier_spacing);

GroundTruthFactors build_factor_matrices(const SceneTruth& truth, const ChannelMatrix& g,
                                         const PhaseProfile& profile, const CMatrix& beamformers,
                                         const WaveformConfig& waveform);

/// Noiseless tensor sum_k a_k o b_k o c_k.
EchoTensor synthesize_echo_tensor(const GroundTruthFactors& factors);

/// Adds CN(0, sigma^2) noise with sigma^2 = ||Y||^2 / (P M L 10^(snr/10)).
/// `snr_db = nullopt` (or +inf) returns the input unchanged.
EchoTensor apply_noise(const EchoTensor& tensor, std::optional<double> snr_db, Rng& rng);

/// Noise variance that `apply_noise` would use for a signal of this energy.
double noise_variance_for_snr(double signal_energy, std::size_t n_entries, double snr_db);

/// Sampled time-domain reference for pulse `pulse` (1-based): integrates the
/// baseband echo over the FFT window with a midpoint rule of `n_samples`
/// points and returns the M x L matrix y_{p,m}[l] / (beta T_d), with the known
/// exp(-j2pi l df tau0) phase removed.
CMatrix time_domain_oracle(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile,
                           const CMatrix& beamformers, const WaveformConfig& waveform, int pulse,
                           int n_samples);

} // namespace irsense
