#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fsiopt {

/// Square sparse matrix in compressed sparse row form. The structure is fixed
/// at construction; column indices are sorted and unique within each row.
class SparseOperator {
public:
  SparseOperator() = default;
  SparseOperator(std::size_t n, std::vector<std::size_t> row_offsets,
                 std::vector<int> column_indices);

  struct Triplet {
    int row;
    int col;
    double value;
  };
  /// Builds structure and values; duplicate entries are summed.
  static SparseOperator from_triplets(std::size_t n, std::span<const Triplet> entries);
  static SparseOperator identity(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return cols_.size(); }

  std::span<const std::size_t> row_offsets() const { return offsets_; }
  std::span<const int> column_indices() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Position of (row, col) in the value array, or -1 if not in the pattern.
  std::ptrdiff_t find(int row, int col) const;
  /// Adds to an existing entry; throws std::out_of_range outside the pattern.
  void add(int row, int col, double v);
  double operator()(int row, int col) const;

  void set_zero();
  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = A^T x
  void multiply_transposed(std::span<const double> x, std::span<double> y) const;

  /// Same pattern, values zeroed.
  SparseOperator zero_like() const;

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

/// Sparse LU factorization supporting solves with A and A^T.
/// Solves are const and may run concurrently.
class LUFactorization {
public:
  /// Throws SingularMatrixError on a numerically singular pivot.
  explicit LUFactorization(const SparseOperator &a);
  ~LUFactorization();
  LUFactorization(LUFactorization &&) noexcept;
  LUFactorization &operator=(LUFactorization &&) noexcept;

  std::size_t size() const { return n_; }

  std::vector<double> solve(std::span<const double> b) const;
  std::vector<double> solve_transposed(std::span<const double> b) const;

private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
/// y += s x
void axpy(double s, std::span<const double> x, std::span<double> y);

} // namespace fsiopt
