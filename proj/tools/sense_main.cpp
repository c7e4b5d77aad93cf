// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// sense run      --config FILE --preset NAME --out PATH [--trials N] [--seed S] [--format csv|json]
// sense limits   --config FILE
// sense crb      --config FILE --sweep snr [--out PATH]
// sense estimate --config FILE --out PATH [--trials N] [--seed S] [--snr DB] [--dump-dir DIR]
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "irsense/config.hpp"
#include "irsense/crb.hpp"
#include "irsense/errors.hpp"
#include "irsense/harness.hpp"
#include "irsense/tensor_synthesis.hpp"

using namespace irsense;

namespace {

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot open " + path + " for writing");
    out << text;
    if (!out.flush())
        fail(ErrorCode::IoError, "failed writing " + path);
}

std::string sci(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17e", x);
    return buf;
}

int cmd_limits(const std::string& config)
{
    const SimulationConfig cfg = load_config(config);
    const SensingLimits lim = sensing_limits(cfg.waveform);
    std::printf("R_min %.4f m\nR_max %.4f m\nv_max %.4f m/s\n", lim.r_min, lim.r_max, lim.v_max);
    return 0;
}

int cmd_run(const std::string& config, const std::string& preset_name, const std::string& out,
            std::optional<int> trials, std::optional<std::uint64_t> seed, const std::string& format)
{
    const SimulationConfig cfg = load_config(config);
    const auto preset = parse_preset(preset_name);
    if (!preset)
        fail(ErrorCode::ConfigError, "unknown preset '" + preset_name + "'");
    const ExperimentSpec spec = make_spec(*preset, cfg, trials, seed);
    const auto rows = run_experiment(spec);
    emit_results(rows, out, format == "json" ? OutputFormat::Json : OutputFormat::Csv);
    return 0;
}

int cmd_crb(const std::string& config, const std::string& sweep, const std::string& out)
{
    if (sweep != "snr")
        fail(ErrorCode::ConfigError, "only the snr sweep is supported");
    const SimulationConfig cfg = load_config(config);
    const ExperimentSpec spec = make_spec(Preset::MseVsSnr, cfg, 1);
    std::ostringstream os;
    os << "snr_db,k,crb_theta,crb_nu,crb_tau\n";
    for (double snr : spec.sweep_values) {
        const SweepPoint pt = sweep_point(spec, snr);
        Rng channel_rng = derive_rng(spec.seed, 0, 0);
        Rng noise_rng = derive_rng(spec.seed, 0, 1);
        const TrialRealization r = realize_trial(pt, channel_rng, noise_rng);
        const auto s2 = noise_variances_for_snr(r.truth, r.channel, r.profiles, r.beamformers, cfg.waveform, snr);
        const CrbResult crb =
            compute_crb(compute_fim(r.truth, r.channel, r.profiles, r.beamformers, cfg.waveform, s2));
        for (Eigen::Index k = 0; k < crb.theta.size(); ++k)
            os << sci(snr) << ',' << k << ',' << sci(crb.theta(k)) << ',' << sci(crb.nu(k)) << ','
               << sci(crb.tau(k)) << '\n';
    }
    write_text(out, os.str());
    return 0;
}

int cmd_estimate(const std::string& config, const std::string& out, std::optional<int> trials,
                 std::optional<std::uint64_t> seed, std::optional<double> snr, const std::string& dump_dir)
{
    SimulationConfig cfg = load_config(config);
    if (snr)
        cfg.experiment.snr_db = *snr;
    const ExperimentSpec spec = make_spec(Preset::MseVsSnr, cfg, trials, seed);
    SweepPoint pt = sweep_point(spec, cfg.experiment.snr_db);
    const int K = static_cast<int>(cfg.scene.targets.size());

    std::ostringstream os;
    os << "trial_id,k,theta_deg,tau_us,nu_hz,range_m,velocity_mps,gamma_re,gamma_im,residual\n";
    for (int t = 0; t < spec.trials; ++t) {
        Rng channel_rng = derive_rng(spec.seed, 0, static_cast<std::uint64_t>(t) + (1ULL << 32));
        Rng noise_rng = derive_rng(spec.seed, 0, static_cast<std::uint64_t>(t));
        const TrialRealization r = realize_trial(pt, channel_rng, noise_rng);
        if (!dump_dir.empty()) {
            const std::filesystem::path dir(dump_dir);
            write_tensor(dir / ("trial" + std::to_string(t) + "_phase1.bin"), r.tensors.first);
            write_tensor(dir / ("trial" + std::to_string(t) + "_phase2.bin"), r.tensors.second);
        }
        try {
            const EstimationResult res =
                estimate_targets(r.tensors.first, r.tensors.second, K, cfg.scene.doa_prior, r.channel,
                                 r.profiles.first, r.profiles.second, r.beamformers, cfg.waveform);
            const double residual = std::max(res.residuals.first, res.residuals.second);
            for (std::size_t k = 0; k < res.targets.size(); ++k) {
                const TargetEstimate& e = res.targets[k];
                os << t << ',' << k << ',' << sci(rad2deg(e.theta)) << ',' << sci(e.tau * 1e6) << ','
                   << sci(e.nu) << ',' << sci(e.range) << ',' << sci(e.velocity) << ',' << sci(e.gamma.real())
                   << ',' << sci(e.gamma.imag()) << ',' << sci(residual) << '\n';
            }
        } catch (const SenseError& e) {
            std::cerr << "trial " << t << ": " << e.what() << '\n';
        }
    }
    write_text(out, os.str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"IRS-assisted NLOS sensing simulator"};
    app.require_subcommand(1);

    std::string config, preset, out, format = "csv", sweep = "snr", dump_dir;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<double> snr;

    auto* run = app.add_subcommand("run", "Monte Carlo MSE experiment");
    run->add_option("--config", config, "JSON configuration")->required();
    run->add_option("--preset", preset, "mse_vs_snr, mse_vs_pulses, mse_vs_subcarriers, mse_vs_antennas, rician_comparison")
        ->required();
    run->add_option("--out", out, "output file")->required();
    run->add_option("--trials", trials, "trials per sweep value");
    run->add_option("--seed", seed, "random seed");
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* limits = app.add_subcommand("limits", "print the sensing range and velocity limits");
    limits->add_option("--config", config, "JSON configuration")->required();

    auto* crb = app.add_subcommand("crb", "Cramer-Rao bound curves");
    crb->add_option("--config", config, "JSON configuration")->required();
    crb->add_option("--sweep", sweep, "swept quantity")->check(CLI::IsMember({"snr"}));
    crb->add_option("--out", out, "output file (stdout when omitted)");

    auto* est = app.add_subcommand("estimate", "per-trial target estimates");
    est->add_option("--config", config, "JSON configuration")->required();
    est->add_option("--out", out, "output file (stdout when omitted)");
    est->add_option("--trials", trials, "number of trials");
    est->add_option("--seed", seed, "random seed");
    est->add_option("--snr", snr, "SNR in dB");
    est->add_option("--dump-dir", dump_dir, "directory for binary tensor dumps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run)
            return cmd_run(config, preset, out, trials, seed, format);
        if (*limits)
            return cmd_limits(config);
        if (*crb)
            return cmd_crb(config, sweep, out);
        return cmd_estimate(config, out, trials, seed, snr, dump_dir);
    } catch (const SenseError& e) {
        std::cerr << "sense: " << e.what() << '\n';
        switch (e.code()) {
        case ErrorCode::ConfigError: return 2;
        case ErrorCode::IoError: return 3;
        default: return 1;
        }
    }
}
