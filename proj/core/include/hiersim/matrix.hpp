#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace hiersim {

using cplx = std::complex<double>;

// Dense square complex matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}
  Matrix(int dim, std::vector<cplx> entries);

  static Matrix identity(int dim);

  int dim() const { return dim_; }
  cplx &operator()(int r, int c) { return a_[static_cast<size_t>(r) * dim_ + c]; }
  const cplx &operator()(int r, int c) const { return a_[static_cast<size_t>(r) * dim_ + c]; }
  const std::vector<cplx> &entries() const { return a_; }

  Matrix operator*(const Matrix &rhs) const;
  Matrix adjoint() const;
  double max_abs_diff(const Matrix &rhs) const;
  bool is_identity(double tol) const;
  bool is_unitary(double tol) const;

 private:
  int dim_ = 0;
  std::vector<cplx> a_;
};

// Applies `u` (a 2^k matrix whose axis j is bit positions[j]) to every group of
// amplitudes in `data` (length 2^nbits) that agree on the remaining bits.
void apply_matrix(cplx *data, int nbits, const Matrix &u, const std::vector<int> &positions);

// Embeds `u` acting on bit positions `positions` into a 2^nbits matrix.
Matrix expand(const Matrix &u, const std::vector<int> &positions, int nbits);

// Scatters the low bits of `value` into the bit positions listed in `positions`.
inline uint64_t deposit_bits(uint64_t value, const std::vector<int> &positions) {
  uint64_t out = 0;
  for (size_t j = 0; j < positions.size(); ++j)
    if ((value >> j) & 1) out |= uint64_t{1} << positions[j];
  return out;
}

// Inverse of deposit_bits.
inline uint64_t extract_bits(uint64_t value, const std::vector<int> &positions) {
  uint64_t out = 0;
  for (size_t j = 0; j < positions.size(); ++j)
    if ((value >> positions[j]) & 1) out |= uint64_t{1} << j;
  return out;
}

}  // namespace hiersim
