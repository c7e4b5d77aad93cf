// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------
//
// Closed-form CP decomposition of a P x M x L tensor whose subcarrier factor
// is Vandermonde, C[:,k] ~ [t_k, t_k^2, ..., t_k^L]^T.
//
//   1. truncated SVD  Y_(1)^T = U S V^H                (K components)
//   2. shift pair     U1 = U[0 : (L-1)M], U2 = U[M : LM]
//   3. EVD            pinv(U1) U2 = R T R^-1,   t_k = T_kk / |T_kk|
//   4. C_hat[:,k]     = [t_k, ..., t_k^L]^T
//   5. b_hat_k        = X_k conj(c_k) / (c_k^H c_k),   X_k = reshape(U R[:,k], M, L)
//   6. A_hat          = Y_(1) pinv((C_hat kr B_hat)^T)
//
// Output columns are ordered by decreasing delay, i.e. by (-arg t_k) mod 2pi.

#pragma once

#include <string>
#include <vector>

#include "irsense/echo_tensor.hpp"

namespace irsense {

struct FactorTriple {
    CMatrix a; // P x K
    CMatrix b; // M x K
    CMatrix c; // L x K, Vandermonde with unit leading generator power
    std::vector<cdouble> generators;
    int phase_index = 1;
    /// ||Y - [[A, B, C]]||_F / ||Y||_F on the input tensor.
    double residual = 0.0;

    int rank() const { return static_cast<int>(generators.size()); }

    /// Same factors with columns reordered so that new column k is old column perm[k].
    FactorTriple permuted(const std::vector<int>& perm) const;
};

struct UniquenessCheck {
    bool unique = false;
    std::string reason;
};

/// Sufficient condition for a unique decomposition: (L-1) M >= K and P >= K.
UniquenessCheck check_uniqueness(int pulses, int antennas, int subcarriers, int rank);

/// Moore-Penrose inverse; singular values below `rel_tol * sigma_max` are dropped.
CMatrix pseudo_inverse(const CMatrix& m, double rel_tol = 1e-10);

/// Sum of outer products a_k o b_k o c_k as a tensor.
EchoTensor reconstruct(const FactorTriple& factors);

FactorTriple cp_decompose(const EchoTensor& tensor, int rank);

} // namespace irsense
