#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace scacopf::ipm {

struct Inertia {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t zero = 0;
  friend bool operator==(const Inertia&, const Inertia&) = default;
};

/// Dense symmetric indefinite factorization P A P^T = L D L^T with
/// Bunch-Kaufman pivoting (1x1 and 2x2 diagonal blocks).
class DenseLdlt {
 public:
  /// Factors the lower triangle of `a` (column-major, n x n, upper part ignored).
  /// Pivots with magnitude <= zero_tol * max|a| count as zero eigenvalues.
  void factor(std::vector<double> a, std::size_t n, double zero_tol = 1e-14);

  const Inertia& inertia() const { return inertia_; }
  bool singular() const { return inertia_.zero > 0; }
  std::size_t size() const { return n_; }

  /// Solves A x = rhs in place. Undefined if singular().
  void solve(std::span<double> rhs) const;

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i + j * n_]; }
  double at(std::size_t i, std::size_t j) const { return a_[i + j * n_]; }

  std::vector<double> a_;
  std::vector<long> pivots_;
  std::size_t n_ = 0;
  Inertia inertia_;
};

/// Lower-triangular triplets of a symmetric matrix; duplicates are summed.
struct SymmetricTriplets {
  std::size_t dim = 0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> values;

  void clear(std::size_t n) {
    dim = n;
    rows.clear();
    cols.clear();
    values.clear();
  }
  void add(std::size_t r, std::size_t c, double v) {
    rows.push_back(r);
    cols.push_back(c);
    values.push_back(v);
  }
};

/// Factorization of symmetric KKT matrices: dense Bunch-Kaufman below
/// `dense_threshold`, sparse simplicial LDL^T (AMD ordering, no pivoting) above.
/// The matrix is symmetrically equilibrated first, which leaves the inertia
/// unchanged and keeps the zero-pivot test independent of row scaling.
class KktFactorization {
 public:
  explicit KktFactorization(std::size_t dense_threshold = 2000);
  ~KktFactorization();
  KktFactorization(KktFactorization&&) noexcept;
  KktFactorization& operator=(KktFactorization&&) noexcept;

  /// Returns false if the factorization broke down (sparse path only).
  bool factor(const SymmetricTriplets& m);
  const Inertia& inertia() const { return inertia_; }
  void solve(std::span<double> rhs) const;
  bool uses_dense() const { return dense_; }

 private:
  struct SparseImpl;
  std::size_t threshold_;
  bool dense_ = true;
  DenseLdlt dense_ldlt_;
  std::unique_ptr<SparseImpl> sparse_;
  Inertia inertia_;
  std::vector<double> scale_;
};

}  // namespace scacopf::ipm
