// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "irsense/errors.hpp"

namespace irsense {

namespace {

constexpr double kLossIntercept = 68.0;  // a
constexpr double kLossExponent = 2.0;    // b
constexpr double kShadowingStdDb = 5.8;  // sigma_xi

double wrap_angle(double x)
{
    x = std::fmod(x + kPi, kTwoPi);
    if (x < 0.0)
        x += kTwoPi;
    return x - kPi;
}

double wrap_2pi(double x)
{
    x = std::fmod(x, kTwoPi);
    return x < 0.0 ? x + kTwoPi : x;
}

cdouble shadowed_gain(double distance, Rng& rng)
{
    std::normal_distribution<double> shadow(0.0, kShadowingStdDb);
    const double kappa = mean_path_loss_db(distance) + shadow(rng);
    return complex_normal(rng, std::pow(10.0, -0.1 * kappa));
}

} // namespace

ArrayConfig ArrayConfig::half_wavelength(int ap_antennas, int irs_elements, double fc)
{
    const double lambda = kSpeedOfLight / fc;
    return {ap_antennas, irs_elements, lambda / 2.0, lambda};
}

void ArrayConfig::validate() const
{
    if (ap_antennas < 1 || irs_elements < 1)
        fail(ErrorCode::InvalidArgument, "array sizes must be positive");
    if (!(spacing > 0.0) || !(wavelength > 0.0))
        fail(ErrorCode::InvalidArgument, "element spacing and wavelength must be positive");
}

void WaveformConfig::validate(std::optional<double> ap_irs_distance) const
{
    if (!(carrier_hz > 0.0) || !(symbol_duration > 0.0) || !(cyclic_prefix > 0.0) || !(pri > 0.0))
        fail(ErrorCode::InvalidArgument, "waveform durations and carrier must be positive");
    if (subcarriers < 1 || pulses < 1)
        fail(ErrorCode::InvalidArgument, "subcarrier and pulse counts must be positive");
    if (std::abs(std::abs(beta) - 1.0) > 1e-12)
        fail(ErrorCode::InvalidArgument, "modulation symbol must have unit modulus");
    if (subcarriers * subcarrier_spacing() >= 0.1 * carrier_hz)
        fail(ErrorCode::InvalidArgument, "baseband bandwidth must be far below the carrier");
    if (ap_irs_distance) {
        const double needed = 2.0 * *ap_irs_distance / kSpeedOfLight + 2.0 * block_duration() + cyclic_prefix;
        if (pri < needed) {
            std::ostringstream os;
            os << "PRI " << pri << " s shorter than the echo window " << needed << " s";
            fail(ErrorCode::InvalidArgument, os.str());
        }
    }
}

SceneConfig SceneConfig::default_scene()
{
    SceneConfig s;
    s.targets = {Target{{533.0, -170.0}, 16.66, 1.0}, Target{{541.0, -245.0}, -22.0, 1.0}};
    return s;
}

RankOneParts ChannelMatrix::dominant() const
{
    if (rank_one)
        return *rank_one;
    Eigen::JacobiSVD<CMatrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // G = U S V^H, so the leading term is s0 u0 conj(v0)^T.
    return {svd.singularValues()(0), svd.matrixU().col(0), svd.matrixV().col(0).conjugate()};
}

double ChannelMatrix::singular_ratio() const
{
    Eigen::JacobiSVD<CMatrix> svd(g);
    const auto& s = svd.singularValues();
    if (s.size() < 2 || s(0) == 0.0)
        return 0.0;
    return s(1) / s(0);
}

CVector PhaseProfile::diagonal() const
{
    CVector out(static_cast<Eigen::Index>(phases.size()));
    for (std::size_t n = 0; n < phases.size(); ++n)
        out(static_cast<Eigen::Index>(n)) = std::polar(1.0, phases[n]);
    return out;
}

CVector steering_vector(double theta, int n_elem, double spacing, double wavelength)
{
    CVector a(n_elem);
    const double step = kTwoPi * spacing * std::sin(theta) / wavelength;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elem));
    for (int n = 0; n < n_elem; ++n)
        a(n) = std::polar(scale, step * n);
    return a;
}

CVector steering_vector_derivative(double theta, int n_elem, double spacing, double wavelength)
{
    CVector a = steering_vector(theta, n_elem, spacing, wavelength);
    const double step = kTwoPi * spacing * std::cos(theta) / wavelength;
    for (int n = 0; n < n_elem; ++n)
        a(n) *= kJ * (step * n);
    return a;
}

double relative_angle(const Point2& from, const Point2& to, double broadside)
{
    const Point2 d = to - from;
    return wrap_angle(broadside - std::atan2(d.y(), d.x()));
}

double mean_path_loss_db(double distance)
{
    return kLossIntercept + 10.0 * kLossExponent * std::log10(distance);
}

ChannelMatrix build_los_channel(const SceneConfig& scene, const ArrayConfig& arrays, Rng& rng)
{
    arrays.validate();
    const double distance = (scene.irs_position - scene.ap_position).norm();
    if (!(distance > 0.0))
        fail(ErrorCode::DegenerateGeometry, "AP and IRS positions coincide");

    const double aoa = relative_angle(scene.irs_position, scene.ap_position, scene.irs_broadside);
    const double aod = relative_angle(scene.ap_position, scene.irs_position, scene.ap_broadside);
    const CVector a_irs = steering_vector(aoa, arrays.irs_elements, arrays.spacing, arrays.wavelength);
    const CVector a_ap = steering_vector(aod, arrays.ap_antennas, arrays.spacing, arrays.wavelength);

    const cdouble gain = shadowed_gain(distance, rng);

    ChannelMatrix out;
    out.g = gain * a_irs * a_ap.adjoint();
    RankOneParts parts;
    parts.sigma = std::abs(gain);
    parts.u = (std::abs(gain) > 0.0 ? gain / std::abs(gain) : cdouble{1.0}) * a_irs;
    parts.v = a_ap.conjugate();
    out.rank_one = std::move(parts);
    return out;
}

ChannelMatrix build_rician_channel(const ChannelMatrix& g_los, const ArrayConfig& arrays,
                                   double rician_db, int n_nlos, Rng& rng)
{
    if (n_nlos < 0)
        fail(ErrorCode::InvalidArgument, "NLOS path count must be non-negative");
    if (std::isinf(rician_db) && rician_db > 0.0)
        return g_los;

    const Eigen::Index n = g_los.g.rows();
    const Eigen::Index m = g_los.g.cols();
    std::uniform_real_distribution<double> angle(-kPi / 2.0, kPi / 2.0);

    CMatrix nlos = CMatrix::Zero(n, m);
    for (int i = 0; i < n_nlos; ++i) {
        const double aoa = angle(rng);
        const double aod = angle(rng);
        const cdouble gain = complex_normal(rng, 1.0);
        nlos += gain * steering_vector(aoa, static_cast<int>(n), arrays.spacing, arrays.wavelength) *
                steering_vector(aod, static_cast<int>(m), arrays.spacing, arrays.wavelength).adjoint();
    }
    if (n_nlos > 0 && nlos.norm() > 0.0)
        nlos *= g_los.g.norm() / nlos.norm();

    const double gamma = std::pow(10.0, rician_db / 10.0);
    ChannelMatrix out;
    out.g = std::sqrt(gamma / (1.0 + gamma)) * g_los.g + std::sqrt(1.0 / (1.0 + gamma)) * nlos;
    return out;
}

SceneTruth derive_target_truth(const SceneConfig& scene, const WaveformConfig& waveform, Rng& rng)
{
    waveform.validate();
    if (scene.targets.empty())
        fail(ErrorCode::InvalidArgument, "scene has no targets");

    const SensingLimits limits = sensing_limits(waveform);
    const double r_ia = (scene.irs_position - scene.ap_position).norm();
    // Exact-duplicate tolerances; the estimator itself is super-resolving.
    constexpr double theta_tol = 1e-9, tau_tol = 1e-15, nu_tol = 1e-9;

    SceneTruth truth;
    truth.tau0 = 2.0 * r_ia / kSpeedOfLight;
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);

    for (std::size_t k = 0; k < scene.targets.size(); ++k) {
        const Target& tgt = scene.targets[k];
        TargetTruth t;
        t.range = (tgt.position - scene.irs_position).norm();
        if (t.range < limits.r_min || t.range > limits.r_max) {
            std::ostringstream os;
            os << "target " << k << " at " << t.range << " m outside [" << limits.r_min << ", "
               << limits.r_max << "] m";
            fail(ErrorCode::OutOfRange, os.str());
        }
        t.theta = relative_angle(scene.irs_position, tgt.position, scene.irs_broadside);
        if (t.theta < scene.doa_prior.first || t.theta > scene.doa_prior.second) {
            std::ostringstream os;
            os << "target " << k << " DOA " << rad2deg(t.theta) << " deg outside the prior interval";
            fail(ErrorCode::OutOfRange, os.str());
        }
        t.tau = 2.0 * t.range / kSpeedOfLight;
        t.nu = 2.0 * tgt.radial_velocity * waveform.carrier_hz / kSpeedOfLight;

        if (scene.gain_model == TargetGainModel::Shadowed) {
            t.alpha_tilde = tgt.rcs * shadowed_gain(t.range, rng) * shadowed_gain(t.range, rng);
        } else {
            const double leg = std::pow(10.0, -mean_path_loss_db(t.range) / 20.0);
            t.alpha_tilde = std::polar(std::abs(tgt.rcs) * leg * leg, phase(rng));
        }
        const double carrier_phase = -kTwoPi * waveform.carrier_hz * (t.tau + truth.tau0);
        t.alpha = std::sqrt(waveform.transmit_power) * t.alpha_tilde *
                  std::polar(1.0, std::fmod(carrier_phase, kTwoPi)) * waveform.beta *
                  waveform.symbol_duration;

        for (const TargetTruth& other : truth.targets) {
            if (std::abs(other.theta - t.theta) < theta_tol || std::abs(other.tau - t.tau) < tau_tol ||
                std::abs(other.nu - t.nu) < nu_tol) {
                std::ostringstream os;
                os << "target " << k << " shares a DOA, delay or Doppler with an earlier target";
                fail(ErrorCode::DuplicateParameter, os.str());
            }
        }
        truth.targets.push_back(t);
    }
    return truth;
}

SensingLimits sensing_limits(const WaveformConfig& waveform)
{
    const double t = waveform.block_duration();
    return {kSpeedOfLight * t / 2.0, kSpeedOfLight * (t + waveform.cyclic_prefix) / 2.0,
            kSpeedOfLight / (2.0 * waveform.carrier_hz * waveform.pri)};
}

std::pair<PhaseProfile, PhaseProfile> design_phase_profiles(std::pair<double, double> doa_prior,
                                                            const ArrayConfig& arrays, int n_subarrays,
                                                            double incident_angle)
{
    arrays.validate();
    const auto [lb, ub] = doa_prior;
    if (!(ub > lb))
        fail(ErrorCode::InvalidArgument, "DOA prior upper bound must exceed the lower bound");
    if (n_subarrays < 1 || arrays.irs_elements % n_subarrays != 0) {
        std::ostringstream os;
        os << arrays.irs_elements << " IRS elements cannot be split into " << n_subarrays << " subarrays";
        fail(ErrorCode::InvalidPartition, os.str());
    }

    const int per_sub = arrays.irs_elements / n_subarrays;
    const double cell = (ub - lb) / n_subarrays;
    const double k = kTwoPi * arrays.spacing / arrays.wavelength;

    auto build = [&](int index, double offset) {
        PhaseProfile prof;
        prof.phase_index = index;
        prof.phases.resize(static_cast<std::size_t>(arrays.irs_elements));
        for (int s = 0; s < n_subarrays; ++s) {
            const double dir = lb + (s + offset) * cell;
            prof.beam_directions.push_back(dir);
            for (int n = s * per_sub; n < (s + 1) * per_sub; ++n)
                prof.phases[static_cast<std::size_t>(n)] =
                    wrap_2pi(-k * n * (std::sin(incident_angle) + std::sin(dir)));
        }
        return prof;
    };
    return {build(1, 0.5), build(2, 1.0)};
}

CMatrix design_beamformers(const ChannelMatrix& g, const WaveformConfig& waveform)
{
    if (g.g.norm() == 0.0)
        fail(ErrorCode::InvalidArgument, "channel matrix is zero");
    const RankOneParts parts = g.dominant();
    const CVector w = parts.v.conjugate().normalized();
    CMatrix out(w.size(), waveform.pulses);
    for (int p = 0; p < waveform.pulses; ++p)
        out.col(p) = w;
    return out;
}

} // namespace irsense
