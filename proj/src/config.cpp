// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "irsense/errors.hpp"

namespace irsense {

namespace {

using nlohmann::json;

template <class T>
void read(const json& obj, const char* key, T& out)
{
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

Point2 point(const json& j)
{
    if (!j.is_array() || j.size() != 2)
        fail(ErrorCode::ConfigError, "positions must be [x, y] arrays");
    return {j[0].get<double>(), j[1].get<double>()};
}

void read_angle(const json& obj, const char* key, double& out)
{
    if (obj.contains(key))
        out = deg2rad(obj.at(key).get<double>());
}

} // namespace

void SimulationConfig::finalize()
{
    const ArrayConfig a = ArrayConfig::half_wavelength(arrays.ap_antennas, arrays.irs_elements, waveform.carrier_hz);
    arrays = a;
    arrays.validate();
    waveform.validate((scene.irs_position - scene.ap_position).norm());
    if (irs_subarrays < 1)
        fail(ErrorCode::InvalidArgument, "irs_subarrays must be positive");
    if (channel.nlos_paths < 1)
        fail(ErrorCode::InvalidArgument, "nlos_paths must be positive");
    if (experiment.trials < 1)
        fail(ErrorCode::InvalidArgument, "trials must be at least 1");
    if (experiment.threads < 1)
        fail(ErrorCode::InvalidArgument, "threads must be at least 1");
}

SimulationConfig parse_config(const std::string& text)
{
    SimulationConfig cfg;
    try {
        const json root = json::parse(text);
        if (!root.is_object())
            fail(ErrorCode::ConfigError, "top level must be an object");

        if (root.contains("waveform")) {
            const json& w = root.at("waveform");
            read(w, "carrier_hz", cfg.waveform.carrier_hz);
            read(w, "subcarriers", cfg.waveform.subcarriers);
            read(w, "pulses", cfg.waveform.pulses);
            read(w, "symbol_duration_s", cfg.waveform.symbol_duration);
            read(w, "cyclic_prefix_s", cfg.waveform.cyclic_prefix);
            read(w, "pri_s", cfg.waveform.pri);
            read(w, "transmit_power_w", cfg.waveform.transmit_power);
        }
        if (root.contains("arrays")) {
            const json& a = root.at("arrays");
            read(a, "ap_antennas", cfg.arrays.ap_antennas);
            read(a, "irs_elements", cfg.arrays.irs_elements);
            read(a, "irs_subarrays", cfg.irs_subarrays);
        }
        if (root.contains("scene")) {
            const json& s = root.at("scene");
            if (s.contains("ap_position"))
                cfg.scene.ap_position = point(s.at("ap_position"));
            if (s.contains("irs_position"))
                cfg.scene.irs_position = point(s.at("irs_position"));
            read_angle(s, "irs_broadside_deg", cfg.scene.irs_broadside);
            read_angle(s, "ap_broadside_deg", cfg.scene.ap_broadside);
            if (s.contains("doa_prior_deg")) {
                const Point2 p = point(s.at("doa_prior_deg"));
                cfg.scene.doa_prior = {deg2rad(p.x()), deg2rad(p.y())};
            }
            if (s.contains("gain_model")) {
                const std::string m = s.at("gain_model").get<std::string>();
                if (m == "mean_path_loss")
                    cfg.scene.gain_model = TargetGainModel::MeanPathLoss;
                else if (m == "shadowed")
                    cfg.scene.gain_model = TargetGainModel::Shadowed;
                else
                    fail(ErrorCode::ConfigError, "unknown gain_model '" + m + "'");
            }
            if (s.contains("targets")) {
                cfg.scene.targets.clear();
                for (const json& t : s.at("targets")) {
                    Target tgt;
                    tgt.position = point(t.at("position"));
                    read(t, "velocity_mps", tgt.radial_velocity);
                    read(t, "rcs", tgt.rcs);
                    cfg.scene.targets.push_back(tgt);
                }
            }
        }
        if (root.contains("channel")) {
            const json& c = root.at("channel");
            if (c.contains("rician_db") && !c.at("rician_db").is_null())
                cfg.channel.rician_db = c.at("rician_db").get<double>();
            read(c, "nlos_paths", cfg.channel.nlos_paths);
            read(c, "redraw_per_trial", cfg.channel.redraw_per_trial);
        }
        if (root.contains("experiment")) {
            const json& e = root.at("experiment");
            read(e, "trials", cfg.experiment.trials);
            read(e, "seed", cfg.experiment.seed);
            read(e, "snr_db", cfg.experiment.snr_db);
            read(e, "threads", cfg.experiment.threads);
        }
        cfg.finalize();
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, e.what());
    } catch (const SenseError& e) {
        if (e.code() == ErrorCode::ConfigError)
            throw;
        fail(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::ConfigError, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const SenseError& e) {
        throw e.with_context(path.string());
    }
}

} // namespace irsense
