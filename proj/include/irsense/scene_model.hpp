// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Physical scene: array geometry, AP-IRS channel, IRS phase profiles,
// transmit beamformers and ground-truth target parameters.
//
// Angle convention: every array is a ULA whose broadside points along a
// global heading (radians, counter-clockwise from +x). The angle of a
// direction with heading h is `broadside - h`, i.e. positive clockwise from
// broadside. With the IRS broadside along +x, the default targets south-east
// of the IRS get positive DOAs. Only sin(angle) enters the steering vectors.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "irsense/common.hpp"

namespace irsense {

struct ArrayConfig {
    int ap_antennas = 16;   // M
    int irs_elements = 32;  // N
    double spacing = 0.0;   // d [m]
    double wavelength = 0.0;

    /// Half-wavelength spacing at carrier `fc`.
    static ArrayConfig half_wavelength(int ap_antennas, int irs_elements, double fc);

    void validate() const;
};

struct WaveformConfig {
    double carrier_hz = 60e9;
    int subcarriers = 10;          // L
    int pulses = 10;               // P, per phase
    double symbol_duration = 2e-6; // T_d
    double cyclic_prefix = 1e-6;   // T_cp
    double pri = 8e-6;             // T_PRI
    double transmit_power = 1.0;   // P_t [W]
    cdouble beta{1.0, 0.0};

    double subcarrier_spacing() const { return 1.0 / symbol_duration; }
    double block_duration() const { return cyclic_prefix + symbol_duration; }
    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    /// Doppler span of one unambiguous period, 1/T_PRI.
    double doppler_period() const { return 1.0 / pri; }

    /// Throws InvalidArgument when the waveform is inconsistent. When
    /// `ap_irs_distance` is given, also checks that the PRI leaves room for
    /// the full echo window.
    void validate(std::optional<double> ap_irs_distance = std::nullopt) const;
};

struct Target {
    Point2 position{0.0, 0.0};
    double radial_velocity = 0.0; // m/s, positive toward the IRS
    double rcs = 1.0;
};

/// How the per-target round-trip gain magnitude is drawn.
enum class TargetGainModel {
    MeanPathLoss,   // deterministic log-distance magnitude, uniform random phase
    Shadowed,       // complex normal per leg with log-normal shadowing
};

struct SceneConfig {
    Point2 ap_position{0.0, 0.0};
    Point2 irs_position{100.0, 100.0};
    double irs_broadside = 0.0;            // global heading [rad]
    double ap_broadside = deg2rad(45.0);   // global heading [rad]
    std::vector<Target> targets;
    std::pair<double, double> doa_prior{deg2rad(30.0), deg2rad(45.0)};
    TargetGainModel gain_model = TargetGainModel::MeanPathLoss;

    /// The two-target scene used throughout the evaluation.
    static SceneConfig default_scene();
};

struct TargetTruth {
    double theta = 0.0;  // DOA w.r.t. the IRS [rad]
    double range = 0.0;  // IRS-target distance [m]
    double tau = 0.0;    // 2R/c [s]
    double nu = 0.0;     // 2 v f_c / c [Hz]
    cdouble alpha_tilde; // round-trip loss times RCS
    cdouble alpha;       // sqrt(P_t) alpha_tilde exp(-j2pi f_c (tau+tau0)) beta T_d
};

struct SceneTruth {
    std::vector<TargetTruth> targets;
    double tau0 = 0.0; // 2 r_IA / c

    std::size_t size() const { return targets.size(); }
};

struct RankOneParts {
    double sigma = 0.0;
    CVector u; // unit N-vector
    CVector v; // unit M-vector, G = sigma u v^T
};

struct ChannelMatrix {
    CMatrix g; // N x M
    std::optional<RankOneParts> rank_one;

    /// Exact parts when present, otherwise the dominant singular triple.
    RankOneParts dominant() const;
    /// sigma_2 / sigma_1 of G (0 for a single column or row).
    double singular_ratio() const;
};

struct PhaseProfile {
    std::vector<double> phases; // theta_n in [0, 2pi)
    int phase_index = 1;
    std::vector<double> beam_directions; // one per subarray [rad]

    /// diag(Phi) as a vector of exp(j theta_n).
    CVector diagonal() const;
};

struct SensingLimits {
    double r_min = 0.0;
    double r_max = 0.0;
    double v_max = 0.0;
};

/// Unit-norm ULA steering vector; element n is exp(j 2pi n d sin(theta)/lambda)/sqrt(n_elem).
CVector steering_vector(double theta, int n_elem, double spacing, double wavelength);

/// d/dtheta of steering_vector.
CVector steering_vector_derivative(double theta, int n_elem, double spacing, double wavelength);

/// Angle of `to` seen from an array at `from` with the given broadside heading.
double relative_angle(const Point2& from, const Point2& to, double broadside);

/// Mean log-distance loss a + 10 b log10(D) in dB (a = 68, b = 2).
double mean_path_loss_db(double distance);

/// LOS AP-IRS channel with complex normal gain and log-normal shadowing.
ChannelMatrix build_los_channel(const SceneConfig& scene, const ArrayConfig& arrays, Rng& rng);

/// Rician mixture of `g_los` with `n_nlos` random scattered paths. A factor of
/// +infinity returns `g_los` unchanged.
ChannelMatrix build_rician_channel(const ChannelMatrix& g_los, const ArrayConfig& arrays,
                                   double rician_db, int n_nlos, Rng& rng);

SceneTruth derive_target_truth(const SceneConfig& scene, const WaveformConfig& waveform, Rng& rng);

SensingLimits sensing_limits(const WaveformConfig& waveform);

/// Subarray beams covering `doa_prior`; phase 2 is offset by half a cell.
/// `incident_angle` is the AP direction seen from the IRS, compensated so each
/// subarray reflects toward its beam direction.
std::pair<PhaseProfile, PhaseProfile> design_phase_profiles(std::pair<double, double> doa_prior,
                                                            const ArrayConfig& arrays,
                                                            int n_subarrays = 4,
                                                            double incident_angle = 0.0);

/// M x P matrix of identical unit-norm beamformers matched to G.
CMatrix design_beamformers(const ChannelMatrix& g, const WaveformConfig& waveform);

} // namespace irsense
