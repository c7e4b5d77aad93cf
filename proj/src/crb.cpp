// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/crb.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "irsense/errors.hpp"
#include "irsense/tensor_synthesis.hpp"

namespace irsense {

namespace {

constexpr double kFimCondMax = 1e14;

/// One rank-one derivative term vectorized along its differentiated mode.
struct Term {
    int mode = 1;
    CVector vec;
};

CVector kron(const CVector& x, const CVector& y)
{
    CVector out(x.size() * y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out.segment(i * y.size(), y.size()) = x(i) * y;
    return out;
}

/// Vectorization of a o b o c in the ordering of the mode-`mode` unfolding.
Term make_term(int mode, const CVector& a, const CVector& b, const CVector& c)
{
    switch (mode) {
    case 1: return {1, kron(a, kron(c, b))};
    case 2: return {2, kron(b, kron(c, a))};
    default: return {3, kron(c, kron(b, a))};
    }
}

/// Row-major flattening of the mode-`mode` unfolding.
CVector vectorize(const EchoTensor& t, int mode)
{
    const CMatrix u = unfold(t, mode);
    CVector out(u.size());
    for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c)
            out(r * u.cols() + c) = u(r, c);
    return out;
}

struct IndexMaps {
    std::vector<std::size_t> h[3];

    IndexMaps(int P, int M, int L)
    {
        for (int mode = 1; mode <= 3; ++mode) {
            auto& v = h[mode - 1];
            v.reserve(static_cast<std::size_t>(P) * M * L);
            for (int p = 0; p < P; ++p)
                for (int m = 0; m < M; ++m)
                    for (int l = 0; l < L; ++l)
                        v.push_back(unfolding_index(mode, p, m, l, P, M, L));
        }
    }

    /// <x, y> with both vectorizations paired through the index maps.
    cdouble inner(const Term& x, const Term& y) const
    {
        if (x.mode == y.mode)
            return x.vec.dot(y.vec);
        const auto& hx = h[x.mode - 1];
        const auto& hy = h[y.mode - 1];
        cdouble acc{};
        for (std::size_t i = 0; i < hx.size(); ++i)
            acc += std::conj(x.vec(static_cast<Eigen::Index>(hx[i]))) * y.vec(static_cast<Eigen::Index>(hy[i]));
        return acc;
    }
};

/// Derivative terms for all 3K parameters of one phase.
std::vector<std::vector<Term>> derivative_terms(const GroundTruthFactors& f, const FactorDerivatives& d)
{
    const int K = f.rank();
    std::vector<std::vector<Term>> out(static_cast<std::size_t>(3 * K));
    for (int k = 0; k < K; ++k) {
        const CVector a = f.a.col(k), b = f.b.col(k), c = f.c.col(k);
        out[static_cast<std::size_t>(k)] = {make_term(1, d.a_theta.col(k), b, c), make_term(2, a, d.b_theta.col(k), c)};
        out[static_cast<std::size_t>(K + k)] = {make_term(1, d.a_nu.col(k), b, c)};
        out[static_cast<std::size_t>(2 * K + k)] = {make_term(3, a, b, d.c_tau.col(k))};
    }
    return out;
}

RMatrix fim_from_terms(const std::vector<std::vector<Term>>& terms, const IndexMaps& maps, double sigma2)
{
    const auto n = static_cast<Eigen::Index>(terms.size());
    RMatrix omega(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j; k < n; ++k) {
            cdouble acc{};
            for (const Term& s : terms[static_cast<std::size_t>(j)])
                for (const Term& t : terms[static_cast<std::size_t>(k)])
                    acc += maps.inner(s, t);
            omega(j, k) = omega(k, j) = 2.0 / sigma2 * acc.real();
        }
    return omega;
}

SceneTruth perturbed(const SceneTruth& truth, int param, double delta)
{
    SceneTruth t = truth;
    const int K = static_cast<int>(truth.size());
    TargetTruth& tgt = t.targets[static_cast<std::size_t>(param % K)];
    switch (param / K) {
    case 0: tgt.theta += delta; break;
    case 1: tgt.nu += delta; break;
    default: tgt.tau += delta; break;
    }
    return t;
}

void check_variances(std::pair<double, double> s)
{
    if (!(s.first > 0.0) || !(s.second > 0.0))
        fail(ErrorCode::InvalidArgument, "noise variances must be positive");
}

} // namespace

FactorDerivatives factor_derivatives(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile,
                                     const CMatrix& w, const WaveformConfig& waveform)
{
    const GroundTruthFactors f = build_factor_matrices(truth, g, profile, w, waveform);
    const int K = f.rank(), P = waveform.pulses, L = waveform.subcarriers;
    const int N = static_cast<int>(g.g.rows());
    const double lambda = waveform.wavelength();
    const double df = waveform.subcarrier_spacing();
    const CVector phi = profile.diagonal();

    FactorDerivatives d;
    d.phase_index = profile.phase_index;
    d.a_theta.resize(P, K);
    d.b_theta.resize(g.g.cols(), K);
    d.a_nu.resize(P, K);
    d.c_tau.resize(L, K);
    for (int k = 0; k < K; ++k) {
        const TargetTruth& t = truth.targets[static_cast<std::size_t>(k)];
        const CVector dvec = doppler_vector(t.nu, P, waveform.pri);
        const CVector da = steering_vector_derivative(t.theta, N, lambda / 2.0, lambda);
        d.b_theta.col(k) = g.g.transpose() * phi.cwiseProduct(da);
        d.a_theta.col(k) = (w.transpose() * d.b_theta.col(k)).cwiseProduct(dvec);
        const CVector wb = w.transpose() * f.b.col(k);
        for (int p = 0; p < P; ++p)
            d.a_nu(p, k) = wb(p) * dvec(p) * (kJ * (kTwoPi * (p + 1) * waveform.pri));
        for (int l = 0; l < L; ++l)
            d.c_tau(l, k) = f.c(l, k) * (-kJ * (kTwoPi * (l + 1) * df));
    }
    return d;
}

std::size_t unfolding_index(int mode, int p, int m, int l, int P, int M, int L)
{
    const auto sp = static_cast<std::size_t>(p), sm = static_cast<std::size_t>(m), sl = static_cast<std::size_t>(l);
    const auto SP = static_cast<std::size_t>(P), SM = static_cast<std::size_t>(M), SL = static_cast<std::size_t>(L);
    switch (mode) {
    case 1: return sm + sl * SM + sp * SM * SL;
    case 2: return sp + sl * SP + sm * SP * SL;
    case 3: return sp + sm * SP + sl * SP * SM;
    default: fail(ErrorCode::InvalidArgument, "unfolding mode must be 1, 2 or 3");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> noise_cov_map(int j1, int j2, int P, int M, int L)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(static_cast<std::size_t>(P) * M * L);
    for (int p = 0; p < P; ++p)
        for (int m = 0; m < M; ++m)
            for (int l = 0; l < L; ++l)
                out.emplace_back(unfolding_index(j1, p, m, l, P, M, L), unfolding_index(j2, p, m, l, P, M, L));
    return out;
}

std::pair<double, double> noise_variances_for_snr(const SceneTruth& truth, const ChannelMatrix& g,
                                                  const ProfilePair& profiles, const CMatrix& w,
                                                  const WaveformConfig& waveform, double snr_db)
{
    auto var = [&](const PhaseProfile& prof) {
        const EchoTensor y = synthesize_echo_tensor(build_factor_matrices(truth, g, prof, w, waveform));
        const double e = y.frobenius_norm();
        return noise_variance_for_snr(e * e, y.size(), snr_db);
    };
    return {var(profiles.first), var(profiles.second)};
}

RMatrix phase_fim(const SceneTruth& truth, const ChannelMatrix& g, const PhaseProfile& profile, const CMatrix& w,
                  const WaveformConfig& waveform, double sigma2)
{
    const GroundTruthFactors f = build_factor_matrices(truth, g, profile, w, waveform);
    const FactorDerivatives d = factor_derivatives(truth, g, profile, w, waveform);
    const IndexMaps maps(waveform.pulses, static_cast<int>(g.g.cols()), waveform.subcarriers);
    return fim_from_terms(derivative_terms(f, d), maps, sigma2);
}

FimMatrix compute_fim(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& w, const WaveformConfig& waveform, std::pair<double, double> sigma2)
{
    check_variances(sigma2);
    FimMatrix fim;
    fim.targets = static_cast<int>(truth.size());
    fim.noise_variances = sigma2;
    fim.omega = phase_fim(truth, g, profiles.first, w, waveform, sigma2.first) +
                phase_fim(truth, g, profiles.second, w, waveform, sigma2.second);
    fim.omega = 0.5 * (fim.omega + fim.omega.transpose()).eval();

    const RVector diag = fim.omega.diagonal();
    if ((diag.array() <= 0.0).any())
        fail(ErrorCode::SingularFim, "a parameter carries no information");
    const RVector s = diag.cwiseSqrt().cwiseInverse();
    const RMatrix normalized = s.asDiagonal() * fim.omega * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(normalized, Eigen::EigenvaluesOnly);
    const RVector& ev = es.eigenvalues();
    const double cond = ev(0) > 0.0 ? ev(ev.size() - 1) / ev(0) : kInf;
    if (cond > kFimCondMax) {
        std::ostringstream os;
        os << "scaled condition number " << cond;
        fail(ErrorCode::SingularFim, os.str());
    }
    return fim;
}

CrbResult compute_crb(const FimMatrix& fim)
{
    const RVector diag = fim.omega.diagonal();
    if ((diag.array() <= 0.0).any())
        fail(ErrorCode::SingularFim, "a parameter carries no information");
    const RVector s = diag.cwiseSqrt().cwiseInverse();
    const RMatrix normalized = s.asDiagonal() * fim.omega * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMatrix> es(normalized);
    const RVector& ev = es.eigenvalues();
    if (!(ev(0) > 0.0) || ev(ev.size() - 1) / ev(0) > kFimCondMax)
        fail(ErrorCode::SingularFim, "Fisher information is not invertible");
    const RMatrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

    CrbResult out;
    out.covariance = s.asDiagonal() * inv * s.asDiagonal();
    const int K = fim.targets;
    const RVector d = out.covariance.diagonal();
    out.theta = d.segment(0, K);
    out.nu = d.segment(K, K);
    out.tau = d.segment(2 * K, K);
    return out;
}

double log_likelihood(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& w, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> sigma2)
{
    check_variances(sigma2);
    auto term = [&](const PhaseProfile& prof, const EchoTensor& y, double s2) {
        const EchoTensor mu = synthesize_echo_tensor(build_factor_matrices(truth, g, prof, w, waveform));
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            acc += std::norm(y.data()[i] - mu.data()[i]);
        return -acc / s2;
    };
    return term(profiles.first, tensors.first, sigma2.first) + term(profiles.second, tensors.second, sigma2.second);
}

RVector score(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles, const CMatrix& w,
              const WaveformConfig& waveform, const TensorPair& tensors, std::pair<double, double> sigma2)
{
    return score(truth, g, profiles, w, waveform, tensors, sigma2,
                 {factor_derivatives(truth, g, profiles.first, w, waveform),
                  factor_derivatives(truth, g, profiles.second, w, waveform)});
}

RVector score(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles, const CMatrix& w,
              const WaveformConfig& waveform, const TensorPair& tensors, std::pair<double, double> sigma2,
              const DerivativePair& derivs)
{
    check_variances(sigma2);
    const int K = static_cast<int>(truth.size());
    RVector out = RVector::Zero(3 * K);

    auto add_phase = [&](const PhaseProfile& prof, const EchoTensor& y, const FactorDerivatives& d, double s2) {
        const GroundTruthFactors f = build_factor_matrices(truth, g, prof, w, waveform);
        EchoTensor r = y;
        const EchoTensor mu = synthesize_echo_tensor(f);
        for (std::size_t i = 0; i < r.size(); ++i)
            r.data()[i] -= mu.data()[i];
        const CVector res[3] = {vectorize(r, 1), vectorize(r, 2), vectorize(r, 3)};
        const auto terms = derivative_terms(f, d);
        for (std::size_t j = 0; j < terms.size(); ++j) {
            cdouble acc{};
            for (const Term& t : terms[j])
                acc += t.vec.dot(res[t.mode - 1]);
            out(static_cast<Eigen::Index>(j)) += 2.0 / s2 * acc.real();
        }
    };
    add_phase(profiles.first, tensors.first, derivs.first, sigma2.first);
    add_phase(profiles.second, tensors.second, derivs.second, sigma2.second);
    return out;
}

double score_fd_check(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& w, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> sigma2, double step)
{
    return score_fd_check(truth, g, profiles, w, waveform, tensors, sigma2, step,
                          {factor_derivatives(truth, g, profiles.first, w, waveform),
                           factor_derivatives(truth, g, profiles.second, w, waveform)});
}

double score_fd_check(const SceneTruth& truth, const ChannelMatrix& g, const ProfilePair& profiles,
                      const CMatrix& w, const WaveformConfig& waveform, const TensorPair& tensors,
                      std::pair<double, double> sigma2, double step, const DerivativePair& derivs)
{
    const int K = static_cast<int>(truth.size());
    const RVector analytic = score(truth, g, profiles, w, waveform, tensors, sigma2, derivs);
    const RMatrix omega = phase_fim(truth, g, profiles.first, w, waveform, sigma2.first) +
                          phase_fim(truth, g, profiles.second, w, waveform, sigma2.second);
    const double scales[3] = {1.0, waveform.doppler_period(), waveform.symbol_duration};

    // L(z+h) - L(z-h) evaluated as a sum of differences to avoid cancellation.
    auto delta_ll = [&](const SceneTruth& plus, const SceneTruth& minus) {
        double acc = 0.0;
        const PhaseProfile* profs[2] = {&profiles.first, &profiles.second};
        const EchoTensor* ys[2] = {&tensors.first, &tensors.second};
        const double s2[2] = {sigma2.first, sigma2.second};
        for (int i = 0; i < 2; ++i) {
            const EchoTensor mp = synthesize_echo_tensor(build_factor_matrices(plus, g, *profs[i], w, waveform));
            const EchoTensor mm = synthesize_echo_tensor(build_factor_matrices(minus, g, *profs[i], w, waveform));
            double part = 0.0;
            for (std::size_t n = 0; n < mp.size(); ++n) {
                const cdouble y = ys[i]->data()[n];
                part += std::real((mm.data()[n] - mp.data()[n]) * std::conj(2.0 * y - mp.data()[n] - mm.data()[n]));
            }
            acc -= part / s2[i];
        }
        return acc;
    };

    double worst = 0.0;
    for (int j = 0; j < 3 * K; ++j) {
        const double h = step * scales[j / K];
        const double numeric = delta_ll(perturbed(truth, j, h), perturbed(truth, j, -h)) / (2.0 * h);
        const double a = analytic(j);
        const double denom = std::max({std::abs(a), std::abs(numeric), std::sqrt(omega(j, j))});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

} // namespace irsense
