#pragma once

// Exact integer linear algebra for stoichiometry: fraction-free row reduction,
// rank and primitive null-space bases. All arithmetic is overflow-checked.

#include <Eigen/Core>

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace speciation {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("integer overflow in stoichiometry");
  return out;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_sub_overflow(a, b, &out)) throw std::overflow_error("integer overflow in stoichiometry");
  return out;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("integer overflow in stoichiometry");
  return out;
}

template <class Derived>
std::int64_t content(const Eigen::MatrixBase<Derived>& v) {
  std::int64_t g = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) g = std::gcd(g, v(i));
  return g;
}

}  // namespace detail

/// Divides out the gcd of the entries and flips the sign so the first nonzero
/// entry is positive. The zero vector is returned unchanged.
inline IntVector make_primitive(IntVector v) {
  const std::int64_t g = detail::content(v);
  if (g == 0) return v;
  v /= g;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return v;
}

/// Integer analogue of the reduced row echelon form: every pivot column has a
/// single nonzero entry (positive, not necessarily 1) and every row is primitive.
struct IntegerEchelon {
  IntMatrix rows;
  std::vector<Eigen::Index> pivot_columns;

  std::size_t rank() const { return pivot_columns.size(); }
};

inline IntegerEchelon integer_echelon(IntMatrix m) {
  IntegerEchelon out;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < m.cols() && row < m.rows(); ++col) {
    // smallest nonzero magnitude keeps intermediate growth down
    Eigen::Index pivot = -1;
    for (Eigen::Index i = row; i < m.rows(); ++i) {
      if (m(i, col) != 0 && (pivot < 0 || std::llabs(m(i, col)) < std::llabs(m(pivot, col)))) pivot = i;
    }
    if (pivot < 0) continue;
    m.row(row).swap(m.row(pivot));
    if (m(row, col) < 0) m.row(row) = -m.row(row);

    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i == row || m(i, col) == 0) continue;
      const std::int64_t g = std::gcd(m(row, col), m(i, col));
      const std::int64_t a = m(row, col) / g;
      const std::int64_t b = m(i, col) / g;
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = detail::checked_sub(detail::checked_mul(a, m(i, j)), detail::checked_mul(b, m(row, j)));
      }
      const std::int64_t c = detail::content(m.row(i));
      if (c > 1) m.row(i) /= c;
    }
    const std::int64_t c = detail::content(m.row(row));
    if (c > 1) m.row(row) /= c;

    out.pivot_columns.push_back(col);
    ++row;
  }
  out.rows = std::move(m);
  return out;
}

inline std::size_t integer_rank(const IntMatrix& m) { return integer_echelon(m).rank(); }

/// Primitive integer basis of {x : m x = 0}, one vector per free column, in
/// increasing free-column order.
inline std::vector<IntVector> integer_null_space(const IntMatrix& m) {
  const IntegerEchelon ech = integer_echelon(m);
  std::vector<bool> is_pivot(static_cast<std::size_t>(m.cols()), false);
  for (auto c : ech.pivot_columns) is_pivot[static_cast<std::size_t>(c)] = true;

  std::vector<IntVector> basis;
  for (Eigen::Index f = 0; f < m.cols(); ++f) {
    if (is_pivot[static_cast<std::size_t>(f)]) continue;
    std::int64_t scale = 1;
    for (std::size_t r = 0; r < ech.rank(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      if (ech.rows(ri, f) != 0) scale = std::lcm(scale, ech.rows(ri, ech.pivot_columns[r]));
    }
    IntVector x = IntVector::Zero(m.cols());
    x(f) = scale;
    for (std::size_t r = 0; r < ech.rank(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const Eigen::Index pc = ech.pivot_columns[r];
      x(pc) = -detail::checked_mul(ech.rows(ri, f), scale / ech.rows(ri, pc));
    }
    basis.push_back(make_primitive(std::move(x)));
  }
  return basis;
}

inline bool is_in_kernel(const IntMatrix& m, const IntVector& v) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::int64_t acc = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) acc = detail::checked_add(acc, detail::checked_mul(m(i, j), v(j)));
    if (acc != 0) return false;
  }
  return true;
}

/// Rank of the matrix whose rows are the given vectors.
inline std::size_t rank_of_rows(const std::vector<IntVector>& rows, Eigen::Index width) {
  if (rows.empty()) return 0;
  IntMatrix m(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return integer_rank(m);
}

}  // namespace speciation
