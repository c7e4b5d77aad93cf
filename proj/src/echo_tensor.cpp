// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/echo_tensor.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "irsense/errors.hpp"

namespace irsense {

static_assert(std::endian::native == std::endian::little, "binary tensor I/O assumes a little-endian host");

EchoTensor::EchoTensor(int pulses, int antennas, int subcarriers, int phase_index)
    : p_(pulses), m_(antennas), l_(subcarriers), phase_(phase_index)
{
    if (pulses < 0 || antennas < 0 || subcarriers < 0)
        fail(ErrorCode::InvalidArgument, "tensor dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(pulses) * antennas * subcarriers, cdouble{});
}

double EchoTensor::frobenius_norm() const
{
    double s = 0.0;
    for (const cdouble& x : data_)
        s += std::norm(x);
    return std::sqrt(s);
}

CMatrix unfold(const EchoTensor& t, int mode)
{
    const int P = t.pulses(), M = t.antennas(), L = t.subcarriers();
    CMatrix out;
    switch (mode) {
    case 1:
        out.resize(P, L * M);
        for (int p = 0; p < P; ++p)
            for (int m = 0; m < M; ++m)
                for (int l = 0; l < L; ++l)
                    out(p, m + l * M) = t(p, m, l);
        break;
    case 2:
        out.resize(M, L * P);
        for (int p = 0; p < P; ++p)
            for (int m = 0; m < M; ++m)
                for (int l = 0; l < L; ++l)
                    out(m, p + l * P) = t(p, m, l);
        break;
    case 3:
        out.resize(L, M * P);
        for (int p = 0; p < P; ++p)
            for (int m = 0; m < M; ++m)
                for (int l = 0; l < L; ++l)
                    out(l, p + m * P) = t(p, m, l);
        break;
    default:
        fail(ErrorCode::InvalidArgument, "unfolding mode must be 1, 2 or 3");
    }
    return out;
}

EchoTensor refold(const CMatrix& x, int mode, int P, int M, int L, int phase_index)
{
    EchoTensor t(P, M, L, phase_index);
    const Eigen::Index rows[] = {P, M, L};
    const Eigen::Index cols[] = {Eigen::Index(L) * M, Eigen::Index(L) * P, Eigen::Index(M) * P};
    if (mode < 1 || mode > 3)
        fail(ErrorCode::InvalidArgument, "unfolding mode must be 1, 2 or 3");
    if (x.rows() != rows[mode - 1] || x.cols() != cols[mode - 1])
        fail(ErrorCode::DimensionMismatch, "matrix shape does not match the requested tensor");
    for (int p = 0; p < P; ++p)
        for (int m = 0; m < M; ++m)
            for (int l = 0; l < L; ++l) {
                switch (mode) {
                case 1: t(p, m, l) = x(p, m + l * M); break;
                case 2: t(p, m, l) = x(m, p + l * P); break;
                default: t(p, m, l) = x(l, p + m * P); break;
                }
            }
    return t;
}

CMatrix khatri_rao(const CMatrix& x, const CMatrix& y)
{
    if (x.cols() != y.cols())
        fail(ErrorCode::DimensionMismatch, "Khatri-Rao operands need equal column counts");
    CMatrix out(x.rows() * y.rows(), x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            out.col(k).segment(i * y.rows(), y.rows()) = x(i, k) * y.col(k);
    return out;
}

namespace {

void write_raw(const std::filesystem::path& path, std::array<std::int32_t, 4> header,
               const std::vector<cdouble>& values)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(header.data()), sizeof(header));
    for (const cdouble& v : values) {
        const double parts[2] = {v.real(), v.imag()};
        os.write(reinterpret_cast<const char*>(parts), sizeof(parts));
    }
    if (!os)
        fail(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<cdouble> read_raw(const std::filesystem::path& path, std::array<std::int32_t, 4>& header)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        fail(ErrorCode::IoError, "cannot open " + path.string());
    is.read(reinterpret_cast<char*>(header.data()), sizeof(header));
    if (!is || header[0] < 0 || header[1] < 0 || header[2] < 0)
        fail(ErrorCode::IoError, "malformed tensor header in " + path.string());
    const std::size_t n = static_cast<std::size_t>(header[0]) * header[1] * header[2];
    std::vector<cdouble> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        double parts[2];
        is.read(reinterpret_cast<char*>(parts), sizeof(parts));
        if (!is)
            fail(ErrorCode::IoError, "truncated tensor payload in " + path.string());
        values[i] = {parts[0], parts[1]};
    }
    return values;
}

} // namespace

void write_tensor(const std::filesystem::path& path, const EchoTensor& t)
{
    write_raw(path, {t.pulses(), t.antennas(), t.subcarriers(), t.phase_index()}, t.data());
}

EchoTensor read_tensor(const std::filesystem::path& path)
{
    std::array<std::int32_t, 4> h{};
    auto values = read_raw(path, h);
    EchoTensor t(h[0], h[1], h[2], h[3]);
    t.data() = std::move(values);
    return t;
}

void write_factor(const std::filesystem::path& path, const CMatrix& factor, int phase_index)
{
    std::vector<cdouble> values;
    values.reserve(static_cast<std::size_t>(factor.size()));
    for (Eigen::Index r = 0; r < factor.rows(); ++r)
        for (Eigen::Index c = 0; c < factor.cols(); ++c)
            values.push_back(factor(r, c));
    write_raw(path, {static_cast<std::int32_t>(factor.rows()), static_cast<std::int32_t>(factor.cols()), 1,
                     phase_index},
              values);
}

CMatrix read_factor(const std::filesystem::path& path)
{
    std::array<std::int32_t, 4> h{};
    const auto values = read_raw(path, h);
    if (h[2] != 1)
        fail(ErrorCode::IoError, "factor file must have a unit third dimension");
    CMatrix out(h[0], h[1]);
    for (int r = 0; r < h[0]; ++r)
        for (int c = 0; c < h[1]; ++c)
            out(r, c) = values[static_cast<std::size_t>(r) * h[1] + c];
    return out;
}

} // namespace irsense
