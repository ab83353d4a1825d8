#include "fsiopt/linalg.hpp"

#include "fsiopt/errors.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fsiopt {

SparseOperator::SparseOperator(std::size_t n, std::vector<std::size_t> row_offsets,
                               std::vector<int> column_indices)
    : n_(n), offsets_(std::move(row_offsets)), cols_(std::move(column_indices)),
      values_(cols_.size(), 0.0) {
  if (offsets_.size() != n_ + 1 || offsets_.back() != cols_.size())
    throw std::invalid_argument("SparseOperator: inconsistent CSR structure");
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (cols_[k] < 0 || static_cast<std::size_t>(cols_[k]) >= n_)
        throw std::invalid_argument("SparseOperator: column index out of range");
      if (k > offsets_[r] && cols_[k] <= cols_[k - 1])
        throw std::invalid_argument("SparseOperator: columns not sorted/unique");
    }
}

SparseOperator SparseOperator::from_triplets(std::size_t n, std::span<const Triplet> entries) {
  std::vector<Triplet> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto &t = sorted[k];
    if (t.row < 0 || static_cast<std::size_t>(t.row) >= n)
      throw std::invalid_argument("SparseOperator: row index out of range");
    if (k > 0 && sorted[k - 1].row == t.row && sorted[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++offsets[t.row + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  SparseOperator a(n, std::move(offsets), std::move(cols));
  std::copy(vals.begin(), vals.end(), a.values_.begin());
  return a;
}

SparseOperator SparseOperator::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::vector<int> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  SparseOperator a(n, std::move(offsets), std::move(cols));
  std::fill(a.values_.begin(), a.values_.end(), 1.0);
  return a;
}

std::ptrdiff_t SparseOperator::find(int row, int col) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[row]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[row + 1]);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col)
    return -1;
  return it - cols_.begin();
}

void SparseOperator::add(int row, int col, double v) {
  const auto k = find(row, col);
  if (k < 0)
    throw std::out_of_range("SparseOperator: entry (" + std::to_string(row) + "," +
                            std::to_string(col) + ") not in pattern");
  values_[static_cast<std::size_t>(k)] += v;
}

double SparseOperator::operator()(int row, int col) const {
  const auto k = find(row, col);
  return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
}

void SparseOperator::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void SparseOperator::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_)
    throw std::invalid_argument("SparseOperator::multiply: dimension mismatch");
  for (std::size_t r = 0; r < n_; ++r) {
    double s = 0.0;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      s += values_[k] * x[static_cast<std::size_t>(cols_[k])];
    y[r] = s;
  }
}

void SparseOperator::multiply_transposed(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_)
    throw std::invalid_argument("SparseOperator::multiply_transposed: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      y[static_cast<std::size_t>(cols_[k])] += values_[k] * x[r];
}

SparseOperator SparseOperator::zero_like() const {
  SparseOperator a = *this;
  a.set_zero();
  return a;
}

struct LUFactorization::Impl {
  // transpose() is non-const in Eigen although the view only reads the factors
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>>
      lu;
};

LUFactorization::LUFactorization(const SparseOperator &a) : n_(a.size()), impl_(new Impl) {
  using Csr = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
  const auto offsets = a.row_offsets();
  std::vector<int> outer(offsets.begin(), offsets.end());
  Eigen::Map<const Csr> view(static_cast<int>(n_), static_cast<int>(n_),
                             static_cast<int>(a.nonzeros()), outer.data(),
                             a.column_indices().data(), a.values().data());
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> csc = view;
  csc.makeCompressed();
  impl_->lu.analyzePattern(csc);
  impl_->lu.factorize(csc);
  if (impl_->lu.info() != Eigen::Success)
    throw SingularMatrixError("sparse LU failed: " + impl_->lu.lastErrorMessage());
}

LUFactorization::~LUFactorization() = default;
LUFactorization::LUFactorization(LUFactorization &&) noexcept = default;
LUFactorization &LUFactorization::operator=(LUFactorization &&) noexcept = default;

namespace {

void check_finite(const Eigen::VectorXd &x) {
  if (!x.allFinite())
    throw SingularMatrixError("sparse LU solve produced non-finite values");
}

} // namespace

std::vector<double> LUFactorization::solve(std::span<const double> b) const {
  if (b.size() != n_)
    throw std::invalid_argument("LUFactorization::solve: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
  const Eigen::VectorXd x = impl_->lu.solve(rhs);
  check_finite(x);
  return {x.data(), x.data() + x.size()};
}

std::vector<double> LUFactorization::solve_transposed(std::span<const double> b) const {
  if (b.size() != n_)
    throw std::invalid_argument("LUFactorization::solve_transposed: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
  const Eigen::VectorXd x = impl_->lu.transpose().solve(rhs);
  check_finite(x);
  return {x.data(), x.data() + x.size()};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double s, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += s * x[i];
}

} // namespace fsiopt
