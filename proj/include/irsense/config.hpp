// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// JSON configuration. Every key is optional; missing keys keep the defaults of
// the evaluation scene. Angles are in degrees, times in seconds.
//
//   {
//     "waveform":   {"carrier_hz", "subcarriers", "pulses", "symbol_duration_s",
//                    "cyclic_prefix_s", "pri_s", "transmit_power_w"},
//     "arrays":     {"ap_antennas", "irs_elements", "irs_subarrays"},
//     "scene":      {"ap_position", "irs_position", "irs_broadside_deg",
//                    "ap_broadside_deg", "doa_prior_deg", "gain_model",
//                    "targets": [{"position", "velocity_mps", "rcs"}]},
//     "channel":    {"rician_db", "nlos_paths", "redraw_per_trial"},
//     "experiment": {"trials", "seed", "snr_db", "threads"}
//   }

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "irsense/scene_model.hpp"

namespace irsense {

struct ChannelOptions {
    std::optional<double> rician_db; // unset: LOS only
    int nlos_paths = 4; // rank(G) = nlos_paths + 1
    bool redraw_per_trial = true;
};

struct ExperimentDefaults {
    int trials = 200;
    std::uint64_t seed = 1;
    double snr_db = 5.0;
    int threads = 1;
};

struct SimulationConfig {
    WaveformConfig waveform;
    ArrayConfig arrays = ArrayConfig::half_wavelength(16, 32, 60e9);
    int irs_subarrays = 4;
    SceneConfig scene = SceneConfig::default_scene();
    ChannelOptions channel;
    ExperimentDefaults experiment;

    /// Recomputes the half-wavelength spacing after a carrier change and validates.
    void finalize();
};

/// Throws ConfigError on malformed input.
SimulationConfig parse_config(const std::string& json_text);
SimulationConfig load_config(const std::filesystem::path& path);

} // namespace irsense
