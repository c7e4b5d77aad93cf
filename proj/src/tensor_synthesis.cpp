// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/tensor_synthesis.hpp"

#include <cmath>
#include <sstream>

#include "irsense/errors.hpp"

namespace irsense {

CVector doppler_vector(double nu, int pulses, double pri)
{
    CVector d(pulses);
    for (int p = 0; p < pulses; ++p)
        d(p) = std::polar(1.0, kTwoPi * (p + 1) * pri * nu);
    return d;
}

CVector delay_vector(double tau, int subcarriers, double subcarrier_spacing)
{
    CVector f(subcarriers);
    for (int l = 0; l < subcarriers; ++l)
        f(l) = std::polar(1.0, -kTwoPi * (l + 1) * subcarrier_spacing * tau);
    return f;
}

namespace {

void check_dimensions(const ChannelMatrix& g, const PhaseProfile& profile, const CMatrix& w,
                      const WaveformConfig& waveform)
{
    std::ostringstream os;
    if (static_cast<Eigen::Index>(profile.phases.size()) != g.g.rows())
        os << "phase profile has " << profile.phases.size() << " entries, G has " << g.g.rows() << " rows";
    else if (w.rows() != g.g.cols())
        os << "beamformer has " << w.rows() << " rows, G has " << g.g.cols() << " columns";
    else if (w.cols() != waveform.pulses)
        os << "beamformer has " << w.cols() << " columns for " << waveform.pulses << " pulses";
    else
        return;
    fail(ErrorCode::DimensionMismatch, os.str());
}

} // namespace

GroundTruthFactors build_factor_matrices(const SceneTruth& truth, const ChannelMatrix& g,
                                         const PhaseProfile& profile, const CMatrix& w,
                                         const WaveformConfig& waveform)
{
    check_dimensions(g, profile, w, waveform);
    const int K = static_cast<int>(truth.size());
    const int N = static_cast<int>(g.g.rows());
    const double lambda = waveform.wavelength();

    GroundTruthFactors f;
    f.phase_index = profile.phase_index;
    f.a.resize(waveform.pulses, K);
    f.b.resize(g.g.cols(), K);
    f.c.resize(waveform.subcarriers, K);

    const CVector phi = profile.diagonal();
    const CMatrix gt = g.g.transpose();
    for (int k = 0; k < K; ++k) {
        const TargetTruth& t = truth.targets[static_cast<std::size_t>(k)];
        const CVector a = steering_vector(t.theta, N, lambda / 2.0, lambda);
        f.b.col(k) = gt * phi.cwiseProduct(a);
        f.a.col(k) = (w.transpose() * f.b.col(k)).cwiseProduct(doppler_vector(t.nu, waveform.pulses, waveform.pri));
        f.c.col(k) = t.alpha * delay_vector(t.tau, waveform.subcarriers, waveform.subcarrier_spacing());
    }
    return f;
}

EchoTensor synthesize_echo_tensor(const GroundTruthFactors& f)
{
    const int P = static_cast<int>(f.a.rows()), M = static_cast<int>(f.b.rows()), L = static_cast<int>(f.c.rows());
    if (f.rank() < 1)
        fail(ErrorCode::InvalidArgument, "at least one component is required");
    if (f.a.cols() != f.c.cols() || f.b.cols() != f.c.cols())
        fail(ErrorCode::DimensionMismatch, "factor matrices disagree on the number of components");
    EchoTensor t(P, M, L, f.phase_index);
    for (int p = 0; p < P; ++p)
        for (int m = 0; m < M; ++m)
            for (int l = 0; l < L; ++l) {
                cdouble s{};
                for (int k = 0; k < f.rank(); ++k)
                    s += f.a(p, k) * f.b(m, k) * f.c(l, k);
                t(p, m, l) = s;
            }
    return t;
}

double noise_variance_for_snr(double signal_energy, std::size_t n_entries, double snr_db)
{
    return signal_energy / (static_cast<double>(n_entries) * std::pow(10.0, snr_db / 10.0));
}

EchoTensor apply_noise(const EchoTensor& tensor, std::optional<double> snr_db, Rng& rng)
{
    if (!snr_db || (std::isinf(*snr_db) && *snr_db > 0.0))
        return tensor;

    const double signal = tensor.frobenius_norm();
    const double var = noise_variance_for_snr(signal * signal, tensor.size(), *snr_db);
    EchoTensor out = tensor;
    double noise_energy = 0.0;
    for (cdouble& x : out.data()) {
        const cdouble n = complex_normal(rng, var);
        noise_energy += std::norm(n);
        x += n;
    }
    out.noise_sigma = std::sqrt(var);
    out.snr_db = noise_energy > 0.0 ? 10.0 * std::log10(signal * signal / noise_energy) : kInf;
    return out;
}

CMatrix time_domain_oracle(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile,
                           const CMatrix& w, const WaveformConfig& waveform, int pulse, int n_samples)
{
    check_dimensions(g, profile, w, waveform);
    const int L = waveform.subcarriers;
    const int M = static_cast<int>(g.g.cols());
    const int N = static_cast<int>(g.g.rows());
    if (n_samples < 8 * L) {
        std::ostringstream os;
        os << n_samples << " samples cannot resolve " << L << " subcarriers (need at least " << 8 * L << ")";
        fail(ErrorCode::InsufficientSampling, os.str());
    }
    if (pulse < 1 || pulse > waveform.pulses)
        fail(ErrorCode::InvalidArgument, "pulse index is 1-based and must not exceed P");

    const double df = waveform.subcarrier_spacing();
    const double T = waveform.block_duration();
    const double fc = waveform.carrier_hz;
    const double lambda = waveform.wavelength();
    const double pulse_start = pulse * waveform.pri;
    const double t_begin = pulse_start + truth.tau0 + T + waveform.cyclic_prefix;
    const double h = waveform.symbol_duration / n_samples;

    const CVector phi = profile.diagonal();
    const CVector w_p = w.col(pulse - 1);

    CMatrix out = CMatrix::Zero(M, L);
    for (const TargetTruth& tgt : truth.targets) {
        const CVector a = steering_vector(tgt.theta, N, lambda / 2.0, lambda);
        const CVector phi_a = phi.cwiseProduct(a);
        const CVector b = g.g.transpose() * phi_a;
        const cdouble illumination = phi_a.transpose() * (g.g * w_p);
        const double delay = tgt.tau + truth.tau0 - tgt.nu * pulse * waveform.pri / fc;
        const double cycles = fc * delay;
        const cdouble carrier = std::polar(1.0, -kTwoPi * (cycles - std::floor(cycles)));
        const cdouble amp = std::sqrt(waveform.transmit_power) * tgt.alpha_tilde * illumination * carrier;

        for (int s = 0; s < n_samples; ++s) {
            const double t = t_begin + (s + 0.5) * h;
            const double local = t - delay - pulse_start;
            if (local < 0.0 || local > T)
                continue; // outside the rectangular pulse support
            cdouble symbol{};
            for (int q = 1; q <= L; ++q)
                symbol += waveform.beta * std::polar(1.0, kTwoPi * q * df * (t - delay));
            for (int l = 1; l <= L; ++l) {
                const cdouble kernel = std::polar(h, -kTwoPi * l * df * t);
                const cdouble v = amp * symbol * kernel;
                for (int m = 0; m < M; ++m)
                    out(m, l - 1) += b(m) * v;
            }
        }
    }
    for (int l = 1; l <= L; ++l)
        out.col(l - 1) *= std::polar(1.0, kTwoPi * l * df * truth.tau0) / (waveform.beta * waveform.symbol_duration);
    return out;
}

} // namespace irsense
