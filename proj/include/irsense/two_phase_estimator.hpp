// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Target parameter extraction from the CP factors of the two sensing phases.
//
// With a rank-one channel G = sigma u v^T every column of B_i is proportional
// to v, so a single phase cannot separate u^T Phi_i a(theta) from the CP
// scaling. The cross-phase ratio
//
//   gamma_hat_k = mean_m(B1[:,k] ./ B2[:,k]) * mean_p(A1[:,k] ./ A2[:,k])
//
// cancels the scalings and equals gamma(theta_k) = (u^T Phi1 a / u^T Phi2 a)^2.

#pragma once

#include <utility>
#include <vector>

#include "irsense/scene_model.hpp"
#include "irsense/vandermonde_cp.hpp"

namespace irsense {

struct AlignedFactors {
    FactorTriple phase1; // columns permuted to match phase2
    FactorTriple phase2;
    std::vector<int> permutation; // phase1 column k is original column permutation[k]
    RMatrix rho;                  // |c1^H c2| / (||c1|| ||c2||), original phase-1 order
};

struct DoaEstimate {
    double theta = 0.0;
    cdouble gamma_hat;
    double residual = 0.0; // |gamma_hat - gamma(theta)|
    int local_minima = 0;  // interior local minima of the grid objective
};

struct DopplerEstimate {
    double nu = 0.0;
    double velocity = 0.0;
    std::pair<double, double> per_phase{0.0, 0.0};
    bool boundary_ambiguous = false;
    int masked_entries = 0; // pulses dropped for a vanishing denominator
};

struct DelayEstimate {
    double tau = 0.0;
    double range = 0.0;
    std::pair<double, double> per_phase{0.0, 0.0};
};

struct TargetEstimate {
    double theta = 0.0;
    double tau = 0.0;
    double nu = 0.0;
    double range = 0.0;
    double velocity = 0.0;
    cdouble gamma;
    double doa_residual = 0.0;
    bool boundary_ambiguous = false;
};

enum class DoaMethod {
    TwoPhaseRatio,          // resolve_doa
    SinglePhaseCorrelation, // estimate_doa_multirank on phase 1
};

struct EstimatorOptions {
    DoaMethod doa_method = DoaMethod::TwoPhaseRatio;
    double doa_grid_step = deg2rad(0.02);
    double doppler_grid_step = 0.0; // Hz; 0 selects (1/T_PRI) / 2000
};

struct EstimationResult {
    std::vector<TargetEstimate> targets; // sorted by tau
    std::pair<double, double> residuals{0.0, 0.0};
    int doppler_masked = 0;
};

/// Greedy column matching on the subcarrier factors. Throws AmbiguousAlignment
/// when a row's best and second-best correlations differ by less than 1e-6.
AlignedFactors align_columns(const FactorTriple& phase1, const FactorTriple& phase2);

/// gamma(theta) = (u^T Phi1 a(theta) / u^T Phi2 a(theta))^2.
cdouble gamma_of_theta(double theta, const CVector& u, const PhaseProfile& phi1, const PhaseProfile& phi2,
                       double wavelength);

/// Cross-phase ratio statistic for column k.
cdouble gamma_hat(const AlignedFactors& aligned, int k);

std::vector<DoaEstimate> resolve_doa(const AlignedFactors& aligned, const CVector& u, const PhaseProfile& phi1,
                                     const PhaseProfile& phi2, std::pair<double, double> doa_prior,
                                     double grid_step, double wavelength);

double estimate_doa_multirank(const CVector& b_hat, const ChannelMatrix& g, const PhaseProfile& profile,
                              std::pair<double, double> doa_prior, double grid_step, double wavelength);

std::vector<DopplerEstimate> estimate_doppler(const AlignedFactors& aligned, const std::vector<double>& theta_hats,
                                              const ChannelMatrix& g, const PhaseProfile& phi1,
                                              const PhaseProfile& phi2, const CMatrix& beamformers,
                                              const WaveformConfig& waveform, double grid_step);

/// Generator phases mapped to delays and unwrapped into [T, T + T_cp].
std::vector<DelayEstimate> estimate_delay(const AlignedFactors& aligned, const WaveformConfig& waveform);

/// Unwraps a single generator into the feasible delay window.
double unwrap_delay(cdouble generator, const WaveformConfig& waveform);

EstimationResult estimate_targets(const EchoTensor& y1, const EchoTensor& y2, int rank,
                                  std::pair<double, double> doa_prior, const ChannelMatrix& g,
                                  const PhaseProfile& phi1, const PhaseProfile& phi2, const CMatrix& beamformers,
                                  const WaveformConfig& waveform, const EstimatorOptions& options = {});

/// Everything after the decompositions; exposed for factor-level tests.
EstimationResult estimate_from_factors(const FactorTriple& t1, const FactorTriple& t2,
                                       std::pair<double, double> doa_prior, const ChannelMatrix& g,
                                       const PhaseProfile& phi1, const PhaseProfile& phi2,
                                       const CMatrix& beamformers, const WaveformConfig& waveform,
                                       const EstimatorOptions& options = {});

} // namespace irsense
