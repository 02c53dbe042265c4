#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace gpnn {

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  [[nodiscard]] bool empty() const noexcept { return data.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }

  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }

  std::span<double> row(int r) {
    return std::span<double>(data).subspan(static_cast<std::size_t>(r) * static_cast<std::size_t>(cols),
                                           static_cast<std::size_t>(cols));
  }
  [[nodiscard]] std::span<const double> row(int r) const {
    return std::span<const double>(data).subspan(
        static_cast<std::size_t>(r) * static_cast<std::size_t>(cols), static_cast<std::size_t>(cols));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Compressed sparse rows.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> offsets{0};
  std::vector<int> indices;
  std::vector<double> values;

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), offsets(static_cast<std::size_t>(r) + 1, 0) {}

  /// Builds from per-row (column, value) lists; rows are sorted by column.
  static SparseMatrix from_rows(int cols, std::vector<std::vector<std::pair<int, double>>> rows);

  [[nodiscard]] std::span<const int> row_indices(int r) const {
    return std::span<const int>(indices).subspan(
        static_cast<std::size_t>(offsets[static_cast<std::size_t>(r)]), row_nnz(r));
  }
  [[nodiscard]] std::span<const double> row_values(int r) const {
    return std::span<const double>(values).subspan(
        static_cast<std::size_t>(offsets[static_cast<std::size_t>(r)]), row_nnz(r));
  }
  [[nodiscard]] std::size_t row_nnz(int r) const {
    return static_cast<std::size_t>(offsets[static_cast<std::size_t>(r) + 1] -
                                    offsets[static_cast<std::size_t>(r)]);
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

} // namespace gpnn
