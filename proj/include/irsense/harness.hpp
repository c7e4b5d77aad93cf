// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Monte Carlo experiments comparing the estimator MSE with the CRB.
//
// MSE units: theta rad^2, nu Hz^2, tau s^2. Each trial draws its own channel
// fading and target phases (unless `redraw_per_trial` is off) and its own
// noise from derive_rng(seed, sweep_index, trial_index), so results do not
// depend on the thread count.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irsense/config.hpp"
#include "irsense/crb.hpp"
#include "irsense/two_phase_estimator.hpp"

namespace irsense {

enum class Preset {
    MseVsSnr,
    MseVsPulses,
    MseVsSubcarriers,
    MseVsAntennas,
    RicianComparison,
};

std::optional<Preset> parse_preset(const std::string& name);
std::string preset_name(Preset preset);
/// Name of the swept quantity, e.g. "snr_db".
std::string sweep_name(Preset preset);

struct ExperimentSpec {
    Preset preset = Preset::MseVsSnr;
    std::vector<double> sweep_values;
    int trials = 200;
    std::uint64_t seed = 1;
    SimulationConfig base;
};

/// Preset sweep over `base`; `trials` and `seed` default to the config values.
ExperimentSpec make_spec(Preset preset, const SimulationConfig& base, std::optional<int> trials = std::nullopt,
                         std::optional<std::uint64_t> seed = std::nullopt);

struct ResultRow {
    std::string sweep_name;
    double sweep_value = 0.0;
    std::string parameter; // theta, nu, tau; theta_corr for the single-phase DOA method
    double mse = 0.0;      // NaN when no trial succeeded
    double crb = 0.0;      // NaN when the bound is undefined
    int trials_used = 0;
    int failures = 0;
    bool identifiable = true;
};

/// One configuration of a sweep, fully resolved.
struct SweepPoint {
    SimulationConfig config;
    double snr_db = 5.0;
    std::optional<double> rician_db;
};

SweepPoint sweep_point(const ExperimentSpec& spec, double value);

/// Everything drawn for a single trial.
struct TrialRealization {
    SceneTruth truth;
    ChannelMatrix channel;
    ProfilePair profiles;
    CMatrix beamformers;
    TensorPair tensors;
};

/// Channel, target phases and gains come from `channel_rng`; noise from `noise_rng`.
TrialRealization realize_trial(const SweepPoint& point, Rng& channel_rng, Rng& noise_rng);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

enum class OutputFormat { Csv, Json };

std::string format_csv(const std::vector<ResultRow>& rows);
std::string format_json(const std::vector<ResultRow>& rows);

/// Throws IoError when the file cannot be written.
void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, OutputFormat format);

/// Reads a CSV written by `format_csv`.
std::vector<ResultRow> parse_csv(const std::string& text);

/// Greedy |tau_hat - tau| matching; entry k is the truth index of estimate k or -1.
std::vector<int> match_by_delay(const std::vector<TargetEstimate>& estimates, const SceneTruth& truth);

} // namespace irsense
