#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "dhpl/grid.hpp"

namespace dhpl {

/// Non-owning column-major view. A view with a null data pointer carries
/// shape only (used by the cost-model engine).
template <typename T>
struct BasicMatrixView {
  T* data = nullptr;
  index_t rows = 0;
  index_t cols = 0;
  index_t ld = 0;

  T& operator()(index_t i, index_t j) const {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[i + j * ld];
  }
  T* col(index_t j) const { return data + j * ld; }
  bool empty() const { return rows == 0 || cols == 0; }
  bool has_storage() const { return data != nullptr; }

  BasicMatrixView block(index_t i0, index_t j0, index_t m, index_t n) const {
    assert(i0 >= 0 && j0 >= 0 && i0 + m <= rows && j0 + n <= cols);
    return {data ? data + i0 + j0 * ld : nullptr, m, n, ld};
  }

  operator BasicMatrixView<const T>() const { return {data, rows, cols, ld}; }
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Owning column-major matrix, element (i, j) at offset i + j * ld.
class LocalMatrix {
 public:
  LocalMatrix() = default;
  LocalMatrix(index_t m, index_t n) : m_(m), n_(n), ld_(m > 0 ? m : 1), data_(ld_ * n, 0.0) {}
  LocalMatrix(index_t m, index_t n, index_t ld) : m_(m), n_(n), ld_(ld), data_(ld * n, 0.0) {
    assert(ld >= m);
  }

  /// Shape-only matrix with no backing storage.
  static LocalMatrix shape_only(index_t m, index_t n) {
    LocalMatrix a;
    a.m_ = m;
    a.n_ = n;
    a.ld_ = m > 0 ? m : 1;
    return a;
  }

  index_t rows() const { return m_; }
  index_t cols() const { return n_; }
  index_t ld() const { return ld_; }
  bool has_storage() const { return !data_.empty() || m_ == 0 || n_ == 0; }

  double& operator()(index_t i, index_t j) { return data_[i + j * ld_]; }
  double operator()(index_t i, index_t j) const { return data_[i + j * ld_]; }

  double* data() { return data_.empty() ? nullptr : data_.data(); }
  const double* data() const { return data_.empty() ? nullptr : data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  MatrixView view() { return {data(), m_, n_, ld_}; }
  ConstMatrixView view() const { return {data(), m_, n_, ld_}; }

 private:
  index_t m_ = 0;
  index_t n_ = 0;
  index_t ld_ = 1;
  std::vector<double> data_;
};

}  // namespace dhpl
