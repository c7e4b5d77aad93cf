// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#pragma once

#include <filesystem>
#include <vector>

#include "irsense/common.hpp"

namespace irsense {

/// P x M x L complex observation (pulses x antennas x subcarriers) of one
/// sensing phase. Storage is row-major: (p, m, l) -> (p*M + m)*L + l.
class EchoTensor {
public:
    EchoTensor() = default;
    EchoTensor(int pulses, int antennas, int subcarriers, int phase_index = 1);

    int pulses() const { return p_; }
    int antennas() const { return m_; }
    int subcarriers() const { return l_; }
    int phase_index() const { return phase_; }
    std::size_t size() const { return data_.size(); }

    cdouble& operator()(int p, int m, int l) { return data_[index(p, m, l)]; }
    const cdouble& operator()(int p, int m, int l) const { return data_[index(p, m, l)]; }

    const std::vector<cdouble>& data() const { return data_; }
    std::vector<cdouble>& data() { return data_; }

    double frobenius_norm() const;

    /// Noise standard deviation per complex entry (0 when noiseless).
    double noise_sigma = 0.0;
    /// Realized SNR in dB; +inf when noiseless.
    double snr_db = kInf;

private:
    std::size_t index(int p, int m, int l) const
    {
        return (static_cast<std::size_t>(p) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(m)) *
                   static_cast<std::size_t>(l_) +
               static_cast<std::size_t>(l);
    }

    int p_ = 0, m_ = 0, l_ = 0, phase_ = 1;
    std::vector<cdouble> data_;
};

/// Mode-j unfolding, j in {1,2,3}:
///   mode 1: P x (L M), column m + l M      (Y_(1) = A (C kr B)^T)
///   mode 2: M x (L P), column p + l P      (Y_(2) = B (C kr A)^T)
///   mode 3: L x (M P), column p + m P      (Y_(3) = C (B kr A)^T)
/// All indices zero-based.
CMatrix unfold(const EchoTensor& tensor, int mode);

/// Inverse of `unfold` for the given shape.
EchoTensor refold(const CMatrix& matrix, int mode, int pulses, int antennas, int subcarriers,
                  int phase_index = 1);

/// Khatri-Rao (column-wise Kronecker) product; column k is kron(x_k, y_k).
CMatrix khatri_rao(const CMatrix& x, const CMatrix& y);

/// Flat binary dump: int32 LE header (P, M, L, phase_index) then row-major
/// interleaved re/im float64 LE.
void write_tensor(const std::filesystem::path& path, const EchoTensor& tensor);
EchoTensor read_tensor(const std::filesystem::path& path);

/// A factor matrix stored in the tensor layout as a rows x cols x 1 tensor.
void write_factor(const std::filesystem::path& path, const CMatrix& factor, int phase_index);
CMatrix read_factor(const std::filesystem::path& path);

} // namespace irsense
