// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/vandermonde_cp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "irsense/errors.hpp"

namespace irsense {

namespace {

constexpr double kRankTol = 1e-12;
constexpr double kShiftCondMax = 1e12;

double delay_key(cdouble t)
{
    double x = std::fmod(-std::arg(t), kTwoPi);
    return x < 0.0 ? x + kTwoPi : x;
}

} // namespace

FactorTriple FactorTriple::permuted(const std::vector<int>& perm) const
{
    FactorTriple out = *this;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        const int src = perm[k];
        out.a.col(static_cast<Eigen::Index>(k)) = a.col(src);
        out.b.col(static_cast<Eigen::Index>(k)) = b.col(src);
        out.c.col(static_cast<Eigen::Index>(k)) = c.col(src);
        out.generators[k] = generators[static_cast<std::size_t>(src)];
    }
    return out;
}

UniquenessCheck check_uniqueness(int pulses, int antennas, int subcarriers, int rank)
{
    if (pulses < 1 || antennas < 1 || subcarriers < 1 || rank < 1)
        return {false, "all dimensions and the rank must be positive"};
    std::ostringstream os;
    if ((subcarriers - 1) * antennas < rank) {
        os << "(L-1)M = " << (subcarriers - 1) * antennas << " < K = " << rank;
        return {false, os.str()};
    }
    if (pulses < rank) {
        os << "P = " << pulses << " < K = " << rank;
        return {false, os.str()};
    }
    return {true, ""};
}

CMatrix pseudo_inverse(const CMatrix& m, double rel_tol)
{
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    const double cutoff = s.size() ? rel_tol * s(0) : 0.0;
    RVector inv = RVector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff)
            inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

EchoTensor reconstruct(const FactorTriple& f)
{
    const int P = static_cast<int>(f.a.rows()), M = static_cast<int>(f.b.rows()), L = static_cast<int>(f.c.rows());
    const CMatrix y1 = f.a * khatri_rao(f.c, f.b).transpose();
    return refold(y1, 1, P, M, L, f.phase_index);
}

FactorTriple cp_decompose(const EchoTensor& tensor, int rank)
{
    const int P = tensor.pulses(), M = tensor.antennas(), L = tensor.subcarriers(), K = rank;
    const UniquenessCheck uc = check_uniqueness(P, M, L, K);
    if (!uc.unique)
        fail(ErrorCode::UniquenessViolated, uc.reason);

    const CMatrix y1 = unfold(tensor, 1);
    Eigen::JacobiSVD<CMatrix> svd(y1.transpose(), Eigen::ComputeThinU);
    const RVector& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(K - 1) / s(0) < kRankTol) {
        std::ostringstream os;
        os << "sigma_K / sigma_1 = " << (s(0) > 0.0 ? s(K - 1) / s(0) : 0.0) << " for K = " << K;
        fail(ErrorCode::RankDeficient, os.str());
    }
    const CMatrix u = svd.matrixU().leftCols(K);

    const Eigen::Index rows = static_cast<Eigen::Index>(L - 1) * M;
    const CMatrix u1 = u.topRows(rows);
    const CMatrix u2 = u.bottomRows(rows);
    {
        Eigen::JacobiSVD<CMatrix> s1(u1);
        const RVector& sv = s1.singularValues();
        const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : kInf;
        if (cond > kShiftCondMax) {
            std::ostringstream os;
            os << "cond(U1) = " << cond;
            fail(ErrorCode::IllConditionedShift, os.str());
        }
    }

    Eigen::ComplexEigenSolver<CMatrix> evd(pseudo_inverse(u1) * u2);
    const CVector& eig = evd.eigenvalues();
    const CMatrix& r = evd.eigenvectors();

    std::vector<int> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return delay_key(eig(x)) > delay_key(eig(y)); });

    FactorTriple out;
    out.phase_index = tensor.phase_index();
    out.a.resize(P, K);
    out.b.resize(M, K);
    out.c.resize(L, K);
    const CMatrix ur = u * r;
    for (int k = 0; k < K; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        const cdouble ev = eig(src);
        const cdouble t = std::abs(ev) > 0.0 ? ev / std::abs(ev) : cdouble{1.0, 0.0};
        out.generators.push_back(t);
        cdouble pw = t;
        for (int l = 0; l < L; ++l, pw *= t)
            out.c(l, k) = pw;
        const Eigen::Map<const CMatrix> x(ur.col(src).data(), M, L);
        out.b.col(k) = x * out.c.col(k).conjugate() / out.c.col(k).squaredNorm();
    }
    out.a = y1 * pseudo_inverse(khatri_rao(out.c, out.b).transpose());

    const CMatrix fit = out.a * khatri_rao(out.c, out.b).transpose();
    const double ynorm = y1.norm();
    out.residual = ynorm > 0.0 ? (y1 - fit).norm() / ynorm : 0.0;
    return out;
}

} // namespace irsense
