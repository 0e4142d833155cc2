#include "hiersim/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "hiersim/errors.hpp"

namespace hiersim {

Matrix::Matrix(int dim, std::vector<cplx> entries) : dim_(dim), a_(std::move(entries)) {
  if (a_.size() != static_cast<size_t>(dim) * dim)
    throw Error(ErrorKind::DimensionMismatch, "matrix entry count does not match dimension");
}

Matrix Matrix::identity(int dim) {
  Matrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::operator*(const Matrix &rhs) const {
  assert(dim_ == rhs.dim_);
  Matrix out(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int k = 0; k < dim_; ++k) {
      const cplx v = (*this)(r, k);
      if (v == cplx{}) continue;
      for (int c = 0; c < dim_; ++c) out(r, c) += v * rhs(k, c);
    }
  return out;
}

Matrix Matrix::adjoint() const {
  Matrix out(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

double Matrix::max_abs_diff(const Matrix &rhs) const {
  if (dim_ != rhs.dim_) throw Error(ErrorKind::DimensionMismatch, "matrix dimensions differ");
  double d = 0;
  for (size_t i = 0; i < a_.size(); ++i) d = std::max(d, std::abs(a_[i] - rhs.a_[i]));
  return d;
}

bool Matrix::is_identity(double tol) const { return max_abs_diff(identity(dim_)) <= tol; }

bool Matrix::is_unitary(double tol) const { return ((*this) * adjoint()).is_identity(tol); }

namespace {

// Offsets of the 2^k group members relative to a base index.
std::vector<uint64_t> group_offsets(const std::vector<int> &positions) {
  const size_t k = positions.size();
  std::vector<uint64_t> off(size_t{1} << k);
  for (size_t j = 0; j < off.size(); ++j) off[j] = deposit_bits(j, positions);
  return off;
}

// Inserts a zero bit at each sorted position of `sorted`.
inline uint64_t spread_base(uint64_t g, const std::vector<int> &sorted) {
  for (int p : sorted) {
    const uint64_t low = g & ((uint64_t{1} << p) - 1);
    g = ((g >> p) << (p + 1)) | low;
  }
  return g;
}

}  // namespace

void apply_matrix(cplx *data, int nbits, const Matrix &u, const std::vector<int> &positions) {
  const int k = static_cast<int>(positions.size());
  assert(u.dim() == (1 << k));
  if (k == 0) {
    const cplx s = u(0, 0);
    if (s == cplx{1.0, 0.0}) return;
    const uint64_t len = uint64_t{1} << nbits;
    for (uint64_t i = 0; i < len; ++i) data[i] *= s;
    return;
  }
  std::vector<int> sorted = positions;
  std::sort(sorted.begin(), sorted.end());
  const auto off = group_offsets(positions);
  const int dim = 1 << k;
  const uint64_t groups = uint64_t{1} << (nbits - k);
  std::vector<cplx> in(dim), out(dim);
  if (k == 1) {
    const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    const uint64_t stride = uint64_t{1} << positions[0];
    for (uint64_t g = 0; g < groups; ++g) {
      const uint64_t i0 = spread_base(g, sorted);
      const cplx a = data[i0], b = data[i0 + stride];
      data[i0] = u00 * a + u01 * b;
      data[i0 + stride] = u10 * a + u11 * b;
    }
    return;
  }
  for (uint64_t g = 0; g < groups; ++g) {
    const uint64_t base = spread_base(g, sorted);
    for (int j = 0; j < dim; ++j) in[j] = data[base + off[j]];
    for (int r = 0; r < dim; ++r) {
      cplx acc = 0;
      for (int c = 0; c < dim; ++c) acc += u(r, c) * in[c];
      out[r] = acc;
    }
    for (int j = 0; j < dim; ++j) data[base + off[j]] = out[j];
  }
}

Matrix expand(const Matrix &u, const std::vector<int> &positions, int nbits) {
  const int dim = 1 << nbits;
  Matrix out(dim);
  std::vector<cplx> col(dim);
  for (int c = 0; c < dim; ++c) {
    std::fill(col.begin(), col.end(), cplx{});
    col[c] = 1.0;
    apply_matrix(col.data(), nbits, u, positions);
    for (int r = 0; r < dim; ++r) out(r, c) = col[r];
  }
  return out;
}

}  // namespace hiersim
