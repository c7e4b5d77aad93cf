// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/two_phase_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "irsense/errors.hpp"
#include "irsense/tensor_synthesis.hpp"

namespace irsense {

namespace {

constexpr double kTieTol = 1e-6;
constexpr double kGridExclusion = 1e-8;
constexpr double kMaskTol = 1e-12;
constexpr double kUnwrapSlack = 0.01;
constexpr double kBoundaryFraction = 0.005;
constexpr int kRefineIterations = 8;

struct GridMin {
    double x = 0.0;
    double f = kInf;
    int local_minima = 0;
};

/// Grid search of `f` over [lo, hi] followed by iterated three-point parabolic
/// refinement. Non-finite values mark excluded points.
template <class F>
GridMin minimize_on_grid(F&& f, double lo, double hi, double step, bool periodic = false)
{
    const int n = std::max(2, static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + (periodic ? 0 : 1));
    std::vector<double> xs(static_cast<std::size_t>(n)), fs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = periodic ? lo + i * step : std::min(hi, lo + i * step);
        fs[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
    }

    GridMin best;
    int ib = -1;
    for (int i = 0; i < n; ++i)
        if (std::isfinite(fs[static_cast<std::size_t>(i)]) && fs[static_cast<std::size_t>(i)] < best.f) {
            best.f = fs[static_cast<std::size_t>(i)];
            ib = i;
        }
    if (ib < 0)
        fail(ErrorCode::NoFeasibleGrid, "every grid point was excluded");
    best.x = xs[static_cast<std::size_t>(ib)];

    for (int i = 0; i < n; ++i) {
        const bool edge = !periodic && (i == 0 || i == n - 1);
        if (edge)
            continue;
        const double fm = fs[static_cast<std::size_t>((i - 1 + n) % n)];
        const double fp = fs[static_cast<std::size_t>((i + 1) % n)];
        const double f0 = fs[static_cast<std::size_t>(i)];
        if (std::isfinite(f0) && std::isfinite(fm) && std::isfinite(fp) && f0 < fm && f0 < fp)
            ++best.local_minima;
    }

    double h = step;
    for (int it = 0; it < kRefineIterations; ++it, h *= 0.25) {
        const double xm = best.x - h, xp = best.x + h;
        if (!periodic && (xm < lo || xp > hi))
            break;
        const double fm = f(xm), fp = f(xp);
        if (!std::isfinite(fm) || !std::isfinite(fp))
            break;
        const double denom = fm - 2.0 * best.f + fp;
        if (!(denom > 0.0))
            continue;
        const double x1 = best.x + 0.5 * h * std::clamp((fm - fp) / denom, -1.0, 1.0);
        const double f1 = f(x1);
        if (std::isfinite(f1) && f1 < best.f) {
            best.x = x1;
            best.f = f1;
        }
    }
    return best;
}

CVector irs_steering(double theta, int n, double wavelength)
{
    return steering_vector(theta, n, wavelength / 2.0, wavelength);
}

double wrap_symmetric(double x, double period)
{
    x = std::fmod(x + 0.5 * period, period);
    if (x < 0.0)
        x += period;
    return x - 0.5 * period;
}

double generator_delay(cdouble t, double subcarrier_spacing)
{
    const double period = 1.0 / subcarrier_spacing;
    double tau = std::arg(t) / (-kTwoPi * subcarrier_spacing);
    tau = std::fmod(tau, period);
    return tau < 0.0 ? tau + period : tau;
}

} // namespace

AlignedFactors align_columns(const FactorTriple& t1, const FactorTriple& t2)
{
    const int K = t1.rank();
    if (K != t2.rank() || t1.c.rows() != t2.c.rows())
        fail(ErrorCode::DimensionMismatch, "phase factor triples differ in shape");

    AlignedFactors out;
    out.rho.resize(K, K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            const double den = t1.c.col(i).norm() * t2.c.col(j).norm();
            out.rho(i, j) = den > 0.0 ? std::abs(t1.c.col(i).dot(t2.c.col(j))) / den : 0.0;
        }

    if (K > 1)
        for (int i = 0; i < K; ++i) {
            std::vector<double> sorted(static_cast<std::size_t>(K));
            for (int j = 0; j < K; ++j)
                sorted[static_cast<std::size_t>(j)] = out.rho(i, j);
            std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end(), std::greater<>());
            if (sorted[0] - sorted[1] < kTieTol) {
                std::ostringstream os;
                os << "phase-1 column " << i << " matches two phase-2 columns equally (rho = " << sorted[0] << ")";
                fail(ErrorCode::AmbiguousAlignment, os.str());
            }
        }

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            pairs.emplace_back(i, j);
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](auto x, auto y) { return out.rho(x.first, x.second) > out.rho(y.first, y.second); });

    out.permutation.assign(static_cast<std::size_t>(K), -1);
    std::vector<bool> used1(static_cast<std::size_t>(K), false);
    for (auto [i, j] : pairs) {
        if (used1[static_cast<std::size_t>(i)] || out.permutation[static_cast<std::size_t>(j)] >= 0)
            continue;
        used1[static_cast<std::size_t>(i)] = true;
        out.permutation[static_cast<std::size_t>(j)] = i;
    }
    out.phase1 = t1.permuted(out.permutation);
    out.phase2 = t2;
    return out;
}

cdouble gamma_of_theta(double theta, const CVector& u, const PhaseProfile& phi1, const PhaseProfile& phi2,
                       double wavelength)
{
    const CVector a = irs_steering(theta, static_cast<int>(u.size()), wavelength);
    const cdouble r = (u.transpose() * phi1.diagonal().cwiseProduct(a)).value() /
                      (u.transpose() * phi2.diagonal().cwiseProduct(a)).value();
    return r * r;
}

cdouble gamma_hat(const AlignedFactors& al, int k)
{
    const CVector rb = al.phase1.b.col(k).cwiseQuotient(al.phase2.b.col(k));
    const CVector ra = al.phase1.a.col(k).cwiseQuotient(al.phase2.a.col(k));
    return rb.mean() * ra.mean();
}

std::vector<DoaEstimate> resolve_doa(const AlignedFactors& al, const CVector& u, const PhaseProfile& phi1,
                                     const PhaseProfile& phi2, std::pair<double, double> prior, double grid_step,
                                     double wavelength)
{
    const int N = static_cast<int>(u.size());
    const CVector d1 = phi1.diagonal(), d2 = phi2.diagonal();
    const double floor = kGridExclusion * u.norm();

    auto gamma_at = [&](double theta, cdouble& g) {
        const CVector a = irs_steering(theta, N, wavelength);
        const cdouble den = (u.transpose() * d2.cwiseProduct(a)).value();
        if (std::abs(den) < floor)
            return false;
        const cdouble r = (u.transpose() * d1.cwiseProduct(a)).value() / den;
        g = r * r;
        return true;
    };

    {
        bool first = true, varies = false;
        cdouble g0{};
        for (double th = prior.first; th <= prior.second + 1e-12; th += grid_step) {
            cdouble g;
            if (!gamma_at(th, g))
                continue;
            if (first) {
                g0 = g;
                first = false;
            } else if (std::abs(g - g0) > 1e-12 * std::max(1.0, std::abs(g0))) {
                varies = true;
                break;
            }
        }
        if (!first && !varies)
            fail(ErrorCode::NonIdentifiable, "gamma(theta) is constant over the prior interval");
    }

    std::vector<DoaEstimate> out;
    for (int k = 0; k < al.phase1.rank(); ++k) {
        DoaEstimate est;
        est.gamma_hat = gamma_hat(al, k);
        auto objective = [&](double theta) {
            cdouble g;
            return gamma_at(theta, g) ? std::norm(est.gamma_hat - g) : std::nan("");
        };
        const GridMin m = minimize_on_grid(objective, prior.first, prior.second, grid_step);
        est.theta = m.x;
        est.residual = std::sqrt(m.f);
        est.local_minima = m.local_minima;
        out.push_back(est);
    }
    return out;
}

double estimate_doa_multirank(const CVector& b_hat, const ChannelMatrix& g, const PhaseProfile& profile,
                              std::pair<double, double> prior, double grid_step, double wavelength)
{
    const double ratio = g.singular_ratio();
    if (ratio < 1e-3) {
        std::ostringstream os;
        os << "sigma_2 / sigma_1 = " << ratio;
        fail(ErrorCode::RankOneChannel, os.str());
    }
    const int N = static_cast<int>(g.g.rows());
    const CMatrix gt_phi = g.g.transpose() * profile.diagonal().asDiagonal();
    const double bn = b_hat.norm();
    auto objective = [&](double theta) {
        const CVector b = gt_phi * irs_steering(theta, N, wavelength);
        const double den = bn * b.norm();
        return den > 0.0 ? -std::abs(b_hat.dot(b)) / den : std::nan("");
    };
    return minimize_on_grid(objective, prior.first, prior.second, grid_step).x;
}

std::vector<DopplerEstimate> estimate_doppler(const AlignedFactors& al, const std::vector<double>& theta_hats,
                                              const ChannelMatrix& g, const PhaseProfile& phi1,
                                              const PhaseProfile& phi2, const CMatrix& w,
                                              const WaveformConfig& waveform, double grid_step)
{
    const int K = al.phase1.rank();
    const int P = waveform.pulses;
    const int N = static_cast<int>(g.g.rows());
    const double period = waveform.doppler_period();
    const double lambda = waveform.wavelength();
    if (static_cast<int>(theta_hats.size()) != K)
        fail(ErrorCode::DimensionMismatch, "one DOA estimate per target is required");
    if (!(grid_step > 0.0))
        grid_step = period / 2000.0;

    std::vector<DopplerEstimate> out(static_cast<std::size_t>(K));
    const PhaseProfile* profiles[2] = {&phi1, &phi2};
    const FactorTriple* triples[2] = {&al.phase1, &al.phase2};
    for (int k = 0; k < K; ++k) {
        DopplerEstimate& est = out[static_cast<std::size_t>(k)];
        double nus[2];
        for (int i = 0; i < 2; ++i) {
            const CVector a = irs_steering(theta_hats[static_cast<std::size_t>(k)], N, lambda);
            const CVector b_check = g.g.transpose() * profiles[i]->diagonal().cwiseProduct(a);
            const CVector den = w.transpose() * b_check;
            const double scale = den.cwiseAbs().maxCoeff();
            std::vector<int> keep;
            CVector ratio = CVector::Zero(P);
            for (int p = 0; p < P; ++p) {
                if (std::abs(den(p)) < kMaskTol * scale || scale == 0.0) {
                    ++est.masked_entries;
                    continue;
                }
                keep.push_back(p);
                ratio(p) = triples[i]->a(p, k) / den(p);
            }
            if (keep.empty())
                fail(ErrorCode::NoFeasibleGrid, "every pulse was masked in the Doppler correlation");
            const double rn = ratio.norm();
            const double dn = std::sqrt(static_cast<double>(keep.size()));
            auto objective = [&](double nu) {
                cdouble acc{};
                for (int p : keep)
                    acc += std::polar(1.0, -kTwoPi * (p + 1) * waveform.pri * nu) * ratio(p);
                return rn > 0.0 ? -std::abs(acc) / (rn * dn) : std::nan("");
            };
            nus[i] = wrap_symmetric(minimize_on_grid(objective, -0.5 * period, 0.5 * period, grid_step, true).x,
                                    period);
        }
        est.per_phase = {nus[0], nus[1]};
        est.nu = wrap_symmetric(nus[0] + 0.5 * wrap_symmetric(nus[1] - nus[0], period), period);
        est.velocity = est.nu * kSpeedOfLight / (2.0 * waveform.carrier_hz);
        est.boundary_ambiguous = std::abs(est.nu) >= (0.5 - kBoundaryFraction) * period;
    }
    return out;
}

double unwrap_delay(cdouble generator, const WaveformConfig& waveform)
{
    const double df = waveform.subcarrier_spacing();
    const double period = 1.0 / df;
    const double raw = generator_delay(generator, df);
    const double lo = waveform.block_duration(), hi = lo + waveform.cyclic_prefix;
    const double slack = kUnwrapSlack * waveform.cyclic_prefix;
    const double n = std::ceil((lo - slack - raw) / period);
    const double tau = raw + n * period;
    if (tau > hi + slack) {
        std::ostringstream os;
        os << "delay " << raw << " s (mod " << period << " s) has no representative in [" << lo << ", " << hi
           << "] s";
        fail(ErrorCode::UnwrapInfeasible, os.str());
    }
    return tau;
}

std::vector<DelayEstimate> estimate_delay(const AlignedFactors& al, const WaveformConfig& waveform)
{
    std::vector<DelayEstimate> out;
    for (int k = 0; k < al.phase1.rank(); ++k) {
        DelayEstimate est;
        est.per_phase = {unwrap_delay(al.phase1.generators[static_cast<std::size_t>(k)], waveform),
                         unwrap_delay(al.phase2.generators[static_cast<std::size_t>(k)], waveform)};
        est.tau = 0.5 * (est.per_phase.first + est.per_phase.second);
        est.range = kSpeedOfLight * est.tau / 2.0;
        out.push_back(est);
    }
    return out;
}

EstimationResult estimate_from_factors(const FactorTriple& t1, const FactorTriple& t2,
                                       std::pair<double, double> prior, const ChannelMatrix& g,
                                       const PhaseProfile& phi1, const PhaseProfile& phi2, const CMatrix& w,
                                       const WaveformConfig& waveform, const EstimatorOptions& opt)
{
    const double lambda = waveform.wavelength();
    EstimationResult res;
    res.residuals = {t1.residual, t2.residual};

    const AlignedFactors al = align_columns(t1, t2);
    const int K = al.phase1.rank();

    std::vector<double> thetas(static_cast<std::size_t>(K));
    std::vector<DoaEstimate> doas;
    if (opt.doa_method == DoaMethod::TwoPhaseRatio) {
        doas = resolve_doa(al, g.dominant().u, phi1, phi2, prior, opt.doa_grid_step, lambda);
        for (int k = 0; k < K; ++k)
            thetas[static_cast<std::size_t>(k)] = doas[static_cast<std::size_t>(k)].theta;
    } else {
        for (int k = 0; k < K; ++k)
            thetas[static_cast<std::size_t>(k)] =
                estimate_doa_multirank(al.phase1.b.col(k), g, phi1, prior, opt.doa_grid_step, lambda);
    }

    const auto dops = estimate_doppler(al, thetas, g, phi1, phi2, w, waveform, opt.doppler_grid_step);
    const auto delays = estimate_delay(al, waveform);

    for (int k = 0; k < K; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        TargetEstimate t;
        t.theta = thetas[ks];
        t.tau = delays[ks].tau;
        t.range = delays[ks].range;
        t.nu = dops[ks].nu;
        t.velocity = dops[ks].velocity;
        t.boundary_ambiguous = dops[ks].boundary_ambiguous;
        if (!doas.empty()) {
            t.gamma = doas[ks].gamma_hat;
            t.doa_residual = doas[ks].residual;
        } else {
            t.gamma = gamma_hat(al, k);
        }
        res.doppler_masked += dops[ks].masked_entries;
        res.targets.push_back(t);
    }
    std::stable_sort(res.targets.begin(), res.targets.end(),
                     [](const TargetEstimate& x, const TargetEstimate& y) { return x.tau < y.tau; });
    return res;
}

EstimationResult estimate_targets(const EchoTensor& y1, const EchoTensor& y2, int rank,
                                  std::pair<double, double> prior, const ChannelMatrix& g,
                                  const PhaseProfile& phi1, const PhaseProfile& phi2, const CMatrix& w,
                                  const WaveformConfig& waveform, const EstimatorOptions& opt)
{
    FactorTriple t1, t2;
    try {
        t1 = cp_decompose(y1, rank);
    } catch (const SenseError& e) {
        throw e.with_context("phase 1");
    }
    try {
        t2 = cp_decompose(y2, rank);
    } catch (const SenseError& e) {
        throw e.with_context("phase 2");
    }
    try {
        return estimate_from_factors(t1, t2, prior, g, phi1, phi2, w, waveform, opt);
    } catch (const SenseError& e) {
        throw e.with_context("estimation");
    }
}

} // namespace irsense
