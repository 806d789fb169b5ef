// SPDX-License-Identifier: Apache-2.0
#include "ltlab/linalg.hpp"

#include <algorithm>

#include "ltlab/error.hpp"

namespace ltlab {

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_bt: inner dimension mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < ar.size(); ++k) acc += ar[k] * br[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_at: inner dimension mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ar = a.row(k);
    const auto br = b.row(k);
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < br.size(); ++j) orow[j] += s * br[j];
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    const auto ar = a.row(i);
    for (std::size_t k = 0; k < ar.size(); ++k) {
      const double s = ar[k];
      if (s == 0.0) continue;
      const auto br = b.row(k);
      for (std::size_t j = 0; j < br.size(); ++j) orow[j] += s * br[j];
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < m.rows(), "gather_rows: row index out of range");
    std::ranges::copy(m.row(rows[i]), out.row(i).begin());
  }
  return out;
}

}  // namespace ltlab
