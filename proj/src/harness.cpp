// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "irsense/errors.hpp"
#include "irsense/tensor_synthesis.hpp"

namespace irsense {

namespace {

constexpr const char* kCsvHeader = "sweep_name,sweep_value,parameter,mse,crb,trials_used,failures";

/// Parameters reported per sweep value, in row order.
enum Param { Theta = 0, Nu, Tau, ThetaCorr, NumParams };
constexpr const char* kParamNames[NumParams] = {"theta", "nu", "tau", "theta_corr"};

struct TrialOutcome {
    bool ok[NumParams] = {false, false, false, false};
    double sq_err[NumParams] = {0.0, 0.0, 0.0, 0.0};
    bool crb_ok = false;
    double crb[NumParams] = {0.0, 0.0, 0.0, 0.0};
};

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17e", x);
    return buf;
}

/// Mean over matched targets of the squared errors; false when nothing matched.
bool accumulate_errors(const std::vector<TargetEstimate>& est, const SceneTruth& truth, double& theta, double& nu,
                       double& tau)
{
    const std::vector<int> match = match_by_delay(est, truth);
    int n = 0;
    theta = nu = tau = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        if (match[k] < 0)
            continue;
        const TargetTruth& t = truth.targets[static_cast<std::size_t>(match[k])];
        theta += std::pow(est[k].theta - t.theta, 2);
        nu += std::pow(est[k].nu - t.nu, 2);
        tau += std::pow(est[k].tau - t.tau, 2);
        ++n;
    }
    if (n == 0)
        return false;
    theta /= n;
    nu /= n;
    tau /= n;
    return true;
}

TrialOutcome run_trial(const ExperimentSpec& spec, const SweepPoint& point, std::size_t sweep_idx, int trial)
{
    Rng noise_rng = derive_rng(spec.seed, sweep_idx, static_cast<std::uint64_t>(trial));
    Rng channel_rng = point.config.channel.redraw_per_trial
                          ? derive_rng(spec.seed, sweep_idx, static_cast<std::uint64_t>(trial) + (1ULL << 32))
                          : derive_rng(spec.seed, sweep_idx, ~0ULL);
    TrialOutcome out;
    TrialRealization r;
    try {
        r = realize_trial(point, channel_rng, noise_rng);
    } catch (const SenseError&) {
        return out;
    }
    const SimulationConfig& cfg = point.config;
    const int K = static_cast<int>(r.truth.size());

    try {
        const EstimationResult res =
            estimate_targets(r.tensors.first, r.tensors.second, K, cfg.scene.doa_prior, r.channel, r.profiles.first,
                             r.profiles.second, r.beamformers, cfg.waveform);
        if (accumulate_errors(res.targets, r.truth, out.sq_err[Theta], out.sq_err[Nu], out.sq_err[Tau]))
            out.ok[Theta] = out.ok[Nu] = out.ok[Tau] = true;
    } catch (const SenseError&) {
    }

    if (spec.preset == Preset::RicianComparison) {
        try {
            EstimatorOptions opt;
            opt.doa_method = DoaMethod::SinglePhaseCorrelation;
            const EstimationResult res =
                estimate_targets(r.tensors.first, r.tensors.second, K, cfg.scene.doa_prior, r.channel,
                                 r.profiles.first, r.profiles.second, r.beamformers, cfg.waveform, opt);
            double nu = 0.0, tau = 0.0;
            out.ok[ThetaCorr] = accumulate_errors(res.targets, r.truth, out.sq_err[ThetaCorr], nu, tau);
        } catch (const SenseError&) {
        }
    }

    try {
        const auto s2 = noise_variances_for_snr(r.truth, r.channel, r.profiles, r.beamformers, cfg.waveform,
                                                point.snr_db);
        const CrbResult crb = compute_crb(compute_fim(r.truth, r.channel, r.profiles, r.beamformers, cfg.waveform, s2));
        out.crb[Theta] = out.crb[ThetaCorr] = crb.theta.mean();
        out.crb[Nu] = crb.nu.mean();
        out.crb[Tau] = crb.tau.mean();
        out.crb_ok = true;
    } catch (const SenseError&) {
    }
    return out;
}

std::vector<TrialOutcome> run_trials(const ExperimentSpec& spec, const SweepPoint& point, std::size_t sweep_idx)
{
    std::vector<TrialOutcome> out(static_cast<std::size_t>(spec.trials));
    const int n_threads = std::max(1, std::min(point.config.experiment.threads, spec.trials));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < spec.trials; t = next++)
            out[static_cast<std::size_t>(t)] = run_trial(spec, point, sweep_idx, t);
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i)
            pool.emplace_back(worker);
        for (std::thread& th : pool)
            th.join();
    }
    return out;
}

} // namespace

std::optional<Preset> parse_preset(const std::string& name)
{
    for (Preset p : {Preset::MseVsSnr, Preset::MseVsPulses, Preset::MseVsSubcarriers, Preset::MseVsAntennas,
                     Preset::RicianComparison})
        if (preset_name(p) == name)
            return p;
    return std::nullopt;
}

std::string preset_name(Preset preset)
{
    switch (preset) {
    case Preset::MseVsSnr: return "mse_vs_snr";
    case Preset::MseVsPulses: return "mse_vs_pulses";
    case Preset::MseVsSubcarriers: return "mse_vs_subcarriers";
    case Preset::MseVsAntennas: return "mse_vs_antennas";
    case Preset::RicianComparison: return "rician_comparison";
    }
    return "";
}

std::string sweep_name(Preset preset)
{
    switch (preset) {
    case Preset::MseVsSnr: return "snr_db";
    case Preset::MseVsPulses: return "pulses";
    case Preset::MseVsSubcarriers: return "subcarriers";
    case Preset::MseVsAntennas: return "ap_antennas";
    case Preset::RicianComparison: return "rician_db";
    }
    return "";
}

ExperimentSpec make_spec(Preset preset, const SimulationConfig& base, std::optional<int> trials,
                         std::optional<std::uint64_t> seed)
{
    ExperimentSpec spec;
    spec.preset = preset;
    spec.base = base;
    spec.trials = trials.value_or(base.experiment.trials);
    spec.seed = seed.value_or(base.experiment.seed);
    switch (preset) {
    case Preset::MseVsSnr: spec.sweep_values = {-10, -5, 0, 5, 10, 15, 20}; break;
    case Preset::MseVsPulses: spec.sweep_values = {2, 5, 10, 15, 20}; break;
    case Preset::MseVsSubcarriers: spec.sweep_values = {1, 2, 4, 6, 8, 10}; break;
    case Preset::MseVsAntennas: spec.sweep_values = {1, 2, 4, 8, 16}; break;
    case Preset::RicianComparison: spec.sweep_values = {0, 5, 13}; break;
    }
    if (spec.trials < 1)
        fail(ErrorCode::InvalidArgument, "trials must be at least 1");
    return spec;
}

SweepPoint sweep_point(const ExperimentSpec& spec, double value)
{
    SweepPoint pt;
    pt.config = spec.base;
    pt.snr_db = spec.base.experiment.snr_db;
    pt.rician_db = spec.base.channel.rician_db;
    const int n = static_cast<int>(std::lround(value));
    switch (spec.preset) {
    case Preset::MseVsSnr: pt.snr_db = value; break;
    case Preset::MseVsPulses: pt.config.waveform.pulses = n; break;
    case Preset::MseVsSubcarriers: pt.config.waveform.subcarriers = n; break;
    case Preset::MseVsAntennas:
        pt.config.arrays.ap_antennas = n;
        pt.config.waveform.subcarriers = 8;
        pt.config.waveform.pulses = 8;
        break;
    case Preset::RicianComparison:
        pt.rician_db = value;
        pt.snr_db = 10.0;
        pt.config.scene.targets.resize(1);
        pt.config.scene.targets[0].radial_velocity = 0.0;
        break;
    }
    return pt;
}

TrialRealization realize_trial(const SweepPoint& pt, Rng& channel_rng, Rng& noise_rng)
{
    const SimulationConfig& cfg = pt.config;
    TrialRealization r;
    r.channel = build_los_channel(cfg.scene, cfg.arrays, channel_rng);
    if (pt.rician_db)
        r.channel = build_rician_channel(r.channel, cfg.arrays, *pt.rician_db, cfg.channel.nlos_paths, channel_rng);
    r.truth = derive_target_truth(cfg.scene, cfg.waveform, channel_rng);
    const double incident = relative_angle(cfg.scene.irs_position, cfg.scene.ap_position, cfg.scene.irs_broadside);
    r.profiles = design_phase_profiles(cfg.scene.doa_prior, cfg.arrays, cfg.irs_subarrays, incident);
    r.beamformers = design_beamformers(r.channel, cfg.waveform);
    const EchoTensor y1 = synthesize_echo_tensor(
        build_factor_matrices(r.truth, r.channel, r.profiles.first, r.beamformers, cfg.waveform));
    const EchoTensor y2 = synthesize_echo_tensor(
        build_factor_matrices(r.truth, r.channel, r.profiles.second, r.beamformers, cfg.waveform));
    r.tensors.first = apply_noise(y1, pt.snr_db, noise_rng);
    r.tensors.second = apply_noise(y2, pt.snr_db, noise_rng);
    return r;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec)
{
    if (spec.trials < 1 || spec.sweep_values.empty())
        fail(ErrorCode::InvalidArgument, "experiment needs at least one trial and one sweep value");

    std::vector<ResultRow> rows;
    const std::string name = sweep_name(spec.preset);
    const int n_params = spec.preset == Preset::RicianComparison ? NumParams : ThetaCorr;
    for (std::size_t si = 0; si < spec.sweep_values.size(); ++si) {
        const double value = spec.sweep_values[si];
        const SweepPoint pt = sweep_point(spec, value);
        const std::vector<TrialOutcome> outcomes = run_trials(spec, pt, si);
        const WaveformConfig& w = pt.config.waveform;
        const bool identifiable =
            check_uniqueness(w.pulses, pt.config.arrays.ap_antennas, w.subcarriers,
                             static_cast<int>(pt.config.scene.targets.size()))
                .unique;

        for (int p = 0; p < n_params; ++p) {
            ResultRow row;
            row.sweep_name = name;
            row.sweep_value = value;
            row.parameter = kParamNames[p];
            row.identifiable = identifiable;
            double err = 0.0, crb = 0.0;
            int n_crb = 0;
            for (const TrialOutcome& o : outcomes) {
                if (o.ok[p]) {
                    err += o.sq_err[p];
                    ++row.trials_used;
                } else {
                    ++row.failures;
                }
                if (o.crb_ok) {
                    crb += o.crb[p];
                    ++n_crb;
                }
            }
            row.mse = row.trials_used > 0 ? err / row.trials_used : std::nan("");
            row.crb = n_crb > 0 ? crb / n_crb : std::nan("");
            rows.push_back(row);
        }
    }
    return rows;
}

std::string format_csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const ResultRow& r : rows)
        os << r.sweep_name << ',' << fmt(r.sweep_value) << ',' << r.parameter << ',' << fmt(r.mse) << ','
           << fmt(r.crb) << ',' << r.trials_used << ',' << r.failures << '\n';
    return os.str();
}

std::string format_json(const std::vector<ResultRow>& rows)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const ResultRow& r : rows)
        arr.push_back({{"sweep_name", r.sweep_name},
                       {"sweep_value", r.sweep_value},
                       {"parameter", r.parameter},
                       {"mse", r.mse},
                       {"crb", r.crb},
                       {"trials_used", r.trials_used},
                       {"failures", r.failures},
                       {"identifiable", r.identifiable}});
    return arr.dump(2) + "\n";
}

void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, OutputFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << (format == OutputFormat::Csv ? format_csv(rows) : format_json(rows));
    out.flush();
    if (!out)
        fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<ResultRow> parse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        fail(ErrorCode::IoError, "missing or unexpected CSV header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');)
            f.push_back(cell);
        if (f.size() != 7)
            fail(ErrorCode::IoError, "malformed CSV row: " + line);
        ResultRow r;
        r.sweep_name = f[0];
        r.sweep_value = std::stod(f[1]);
        r.parameter = f[2];
        r.mse = std::stod(f[3]);
        r.crb = std::stod(f[4]);
        r.trials_used = std::stoi(f[5]);
        r.failures = std::stoi(f[6]);
        rows.push_back(r);
    }
    return rows;
}

std::vector<int> match_by_delay(const std::vector<TargetEstimate>& est, const SceneTruth& truth)
{
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j)
            pairs.emplace_back(std::abs(est[i].tau - truth.targets[j].tau), i, j);
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    std::vector<int> out(est.size(), -1);
    std::vector<bool> taken(truth.size(), false);
    for (const auto& [d, i, j] : pairs) {
        if (out[i] >= 0 || taken[j])
            continue;
        out[i] = static_cast<int>(j);
        taken[j] = true;
    }
    return out;
}

} // namespace irsense
