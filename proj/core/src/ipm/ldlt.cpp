#include "scacopf/ipm/ldlt.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <utility>

namespace scacopf::ipm {

void DenseLdlt::factor(std::vector<double> a, std::size_t n, double zero_tol) {
  a_ = std::move(a);
  n_ = n;
  pivots_.assign(n, 0);
  inertia_ = {};

  double amax = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j; i < n; ++i) amax = std::max(amax, std::abs(at(i, j)));
  const double tiny = zero_tol * std::max(amax, 1e-300);
  const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;

  std::size_t k = 0;
  while (k < n) {
    std::size_t kstep = 1;
    std::size_t kp = k;
    const double absakk = std::abs(at(k, k));
    std::size_t imax = k;
    double colmax = 0.0;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(at(i, k)) > colmax) {
        colmax = std::abs(at(i, k));
        imax = i;
      }

    if (std::max(absakk, colmax) <= tiny) {
      // Numerically zero column: record a zero pivot and move on.
      at(k, k) = 0.0;
      pivots_[k] = static_cast<long>(k);
      ++inertia_.zero;
      ++k;
      continue;
    }

    if (absakk >= alpha * colmax) {
      kp = k;
    } else {
      double rowmax = 0.0;
      for (std::size_t j = k; j < imax; ++j) rowmax = std::max(rowmax, std::abs(at(imax, j)));
      for (std::size_t j = imax + 1; j < n; ++j) rowmax = std::max(rowmax, std::abs(at(j, imax)));
      if (absakk >= alpha * colmax * (colmax / rowmax)) {
        kp = k;
      } else if (std::abs(at(imax, imax)) >= alpha * rowmax) {
        kp = imax;
      } else {
        kp = imax;
        kstep = 2;
      }
    }

    const std::size_t kk = k + kstep - 1;
    if (kp != kk) {
      for (std::size_t i = kp + 1; i < n; ++i) std::swap(at(i, kk), at(i, kp));
      for (std::size_t j = kk + 1; j < kp; ++j) std::swap(at(j, kk), at(kp, j));
      std::swap(at(kk, kk), at(kp, kp));
      if (kstep == 2) std::swap(at(k + 1, k), at(kp, k));
    }

    if (kstep == 1) {
      const double d = at(k, k);
      if (std::abs(d) <= tiny) {
        ++inertia_.zero;
      } else if (d > 0) {
        ++inertia_.positive;
      } else {
        ++inertia_.negative;
      }
      const double r1 = std::abs(d) <= tiny ? 0.0 : 1.0 / d;
      for (std::size_t j = k + 1; j < n; ++j) {
        const double ajk = at(j, k) * r1;
        if (ajk == 0.0) continue;
        double* colj = &a_[j * n];
        const double* colk = &a_[k * n];
        for (std::size_t i = j; i < n; ++i) colj[i] -= colk[i] * ajk;
      }
      for (std::size_t i = k + 1; i < n; ++i) at(i, k) *= r1;
      pivots_[k] = static_cast<long>(kp);
    } else {
      const double a11 = at(k, k);
      const double a21 = at(k + 1, k);
      const double a22 = at(k + 1, k + 1);
      const double det = a11 * a22 - a21 * a21;
      if (det < 0) {
        ++inertia_.positive;
        ++inertia_.negative;
      } else if (a11 + a22 > 0) {
        inertia_.positive += 2;
      } else {
        inertia_.negative += 2;
      }
      if (k + 2 < n) {
        double d21 = a21;
        const double d11 = a22 / d21;
        const double d22 = a11 / d21;
        const double t = 1.0 / (d11 * d22 - 1.0);
        d21 = t / d21;
        for (std::size_t j = k + 2; j < n; ++j) {
          const double wk = d21 * (d11 * at(j, k) - at(j, k + 1));
          const double wkp1 = d21 * (d22 * at(j, k + 1) - at(j, k));
          double* colj = &a_[j * n];
          const double* colk = &a_[k * n];
          const double* colk1 = &a_[(k + 1) * n];
          for (std::size_t i = j; i < n; ++i) colj[i] -= colk[i] * wk + colk1[i] * wkp1;
          at(j, k) = wk;
          at(j, k + 1) = wkp1;
        }
      }
      pivots_[k] = pivots_[k + 1] = -static_cast<long>(kp) - 1;
    }
    k += kstep;
  }
}

void DenseLdlt::solve(std::span<double> b) const {
  const std::size_t n = n_;
  std::size_t k = 0;
  while (k < n) {
    if (pivots_[k] >= 0) {
      const auto kp = static_cast<std::size_t>(pivots_[k]);
      if (kp != k) std::swap(b[k], b[kp]);
      const double bk = b[k];
      for (std::size_t i = k + 1; i < n; ++i) b[i] -= at(i, k) * bk;
      const double d = at(k, k);
      b[k] = d == 0.0 ? 0.0 : b[k] / d;
      k += 1;
    } else {
      const auto kp = static_cast<std::size_t>(-pivots_[k] - 1);
      if (kp != k + 1) std::swap(b[k + 1], b[kp]);
      for (std::size_t i = k + 2; i < n; ++i) b[i] -= at(i, k) * b[k] + at(i, k + 1) * b[k + 1];
      const double akm1k = at(k + 1, k);
      const double akm1 = at(k, k) / akm1k;
      const double ak = at(k + 1, k + 1) / akm1k;
      const double denom = akm1 * ak - 1.0;
      const double bkm1 = b[k] / akm1k;
      const double bk = b[k + 1] / akm1k;
      b[k] = (ak * bkm1 - bk) / denom;
      b[k + 1] = (akm1 * bk - bkm1) / denom;
      k += 2;
    }
  }
  long kk = static_cast<long>(n) - 1;
  while (kk >= 0) {
    const auto k2 = static_cast<std::size_t>(kk);
    if (pivots_[k2] >= 0) {
      double s = 0.0;
      for (std::size_t i = k2 + 1; i < n; ++i) s += at(i, k2) * b[i];
      b[k2] -= s;
      const auto kp = static_cast<std::size_t>(pivots_[k2]);
      if (kp != k2) std::swap(b[k2], b[kp]);
      kk -= 1;
    } else {
      double s1 = 0.0, s0 = 0.0;
      for (std::size_t i = k2 + 1; i < n; ++i) {
        s1 += at(i, k2) * b[i];
        s0 += at(i, k2 - 1) * b[i];
      }
      b[k2] -= s1;
      b[k2 - 1] -= s0;
      const auto kp = static_cast<std::size_t>(-pivots_[k2] - 1);
      if (kp != k2) std::swap(b[k2], b[kp]);
      kk -= 2;
    }
  }
}

struct KktFactorization::SparseImpl {
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SimplicialLDLT<Matrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  bool analyzed = false;
  std::size_t nnz = 0;
};

KktFactorization::KktFactorization(std::size_t dense_threshold) : threshold_(dense_threshold) {}
KktFactorization::~KktFactorization() = default;
KktFactorization::KktFactorization(KktFactorization&&) noexcept = default;
KktFactorization& KktFactorization::operator=(KktFactorization&&) noexcept = default;

namespace {

// Ruiz equilibration of a symmetric matrix given as merged lower-triangle
// entries (r >= c). Returns d with max_j |d_i a_ij d_j| close to 1 for every row.
template <class ForEach>
std::vector<double> equilibrate(std::size_t n, ForEach&& for_each) {
  std::vector<double> d(n, 1.0), rmax(n);
  for (int pass = 0; pass < 10; ++pass) {
    std::fill(rmax.begin(), rmax.end(), 0.0);
    for_each([&](std::size_t r, std::size_t c, double v) {
      const double s = std::abs(d[r] * v * d[c]);
      rmax[r] = std::max(rmax[r], s);
      rmax[c] = std::max(rmax[c], s);
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rmax[i] == 0.0 || !std::isfinite(rmax[i])) continue;
      d[i] /= std::sqrt(rmax[i]);
      worst = std::max(worst, std::abs(1.0 - rmax[i]));
    }
    if (worst < 1e-2) break;
  }
  return d;
}

}  // namespace

bool KktFactorization::factor(const SymmetricTriplets& m) {
  const std::size_t n = m.dim;
  dense_ = n < threshold_;
  if (dense_) {
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      auto r = m.rows[i];
      auto c = m.cols[i];
      if (r < c) std::swap(r, c);
      a[r + c * n] += m.values[i];
    }
    scale_ = equilibrate(n, [&](auto&& f) {
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = c; r < n; ++r)
          if (a[r + c * n] != 0.0) f(r, c, a[r + c * n]);
    });
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = c; r < n; ++r) a[r + c * n] *= scale_[r] * scale_[c];
    dense_ldlt_.factor(std::move(a), n);
    inertia_ = dense_ldlt_.inertia();
    return true;
  }

  if (!sparse_) sparse_ = std::make_unique<SparseImpl>();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(m.values.size());
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    auto r = m.rows[i];
    auto c = m.cols[i];
    if (r < c) std::swap(r, c);
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), m.values[i]);
  }
  SparseImpl::Matrix mat(static_cast<int>(n), static_cast<int>(n));
  mat.setFromTriplets(trips.begin(), trips.end());
  scale_ = equilibrate(n, [&](auto&& f) {
    for (int c = 0; c < mat.outerSize(); ++c)
      for (SparseImpl::Matrix::InnerIterator it(mat, c); it; ++it)
        f(static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value());
  });
  for (int c = 0; c < mat.outerSize(); ++c)
    for (SparseImpl::Matrix::InnerIterator it(mat, c); it; ++it)
      it.valueRef() *= scale_[static_cast<std::size_t>(it.row())] * scale_[static_cast<std::size_t>(c)];
  if (!sparse_->analyzed || sparse_->nnz != static_cast<std::size_t>(mat.nonZeros())) {
    sparse_->ldlt.analyzePattern(mat);
    sparse_->analyzed = true;
    sparse_->nnz = static_cast<std::size_t>(mat.nonZeros());
  }
  sparse_->ldlt.factorize(mat);
  inertia_ = {};
  if (sparse_->ldlt.info() != Eigen::Success) {
    inertia_.zero = n;
    return false;
  }
  const auto& d = sparse_->ldlt.vectorD();
  double dmax = 0.0;
  for (int i = 0; i < d.size(); ++i) dmax = std::max(dmax, std::abs(d[i]));
  for (int i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= 1e-14 * dmax)
      ++inertia_.zero;
    else if (d[i] > 0)
      ++inertia_.positive;
    else
      ++inertia_.negative;
  }
  return true;
}

void KktFactorization::solve(std::span<double> rhs) const {
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] *= scale_[i];
  if (dense_) {
    dense_ldlt_.solve(rhs);
  } else {
    Eigen::Map<Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = sparse_->ldlt.solve(b);
    b = x;
  }
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] *= scale_[i];
}

}  // namespace scacopf::ipm
