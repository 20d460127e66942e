#pragma once

// Revised primal simplex for min c'x, Ax = b, x >= 0.
//
// The working basis inverse is held explicitly and updated by elementary
// row operations after each pivot; a dense LU with partial pivoting of the
// final basis is exposed through BasisState for downstream sensitivity work.
// Pricing is Dantzig (most negative reduced cost); after a run of degenerate
// pivots it falls back to Bland's smallest-index rule until the objective
// moves again, which rules out cycling.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "otr/error.hpp"

namespace otr {

enum class ColumnKind {
  kPg,
  kThetaPlus,
  kThetaMinus,
  kSlackFlowUpper,
  kSlackFlowLower,
  kSlackGenUpper,
  kSlackGenLower,
};

enum class RowKind {
  kBalance,
  kPowerSum,
  kFlowUpper,
  kFlowLower,
  kGenUpper,
  kGenLower,
};

struct ColumnTag {
  ColumnKind kind;
  int element;  // generator, bus or line index depending on kind
};

struct RowTag {
  RowKind kind;
  int element;
};

struct StandardFormLp {
  Eigen::SparseMatrix<double> a;  // column major
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<ColumnTag> column_tags;
  std::vector<RowTag> row_tags;

  int rows() const { return static_cast<int>(a.rows()); }
  int cols() const { return static_cast<int>(a.cols()); }

  Eigen::VectorXd column(int j) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
      out[it.row()] = it.value();
    return out;
  }
};

struct SimplexOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  double phase1_tol = 1e-7;
  int max_iterations = 0;  // 0: 50 * (rows + cols)
  int degenerate_run = 30;  // degenerate pivots before switching to Bland
  int refresh_period = 100;
  int refactor_period = 500;
  bool factorize = true;  // build the LU handle for the final basis
};

// LU of the basis matrix B (columns of A listed in basic order).
class BasisFactorization {
 public:
  explicit BasisFactorization(Eigen::MatrixXd basis)
      : basis_(std::move(basis)), lu_(basis_) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return lu_.solve(rhs); }
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& rhs) const {
    return lu_.transpose().solve(rhs);
  }
  const Eigen::MatrixXd& matrix() const { return basis_; }
  int size() const { return static_cast<int>(basis_.rows()); }

 private:
  Eigen::MatrixXd basis_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct BasisState {
  std::vector<int> basic_idx;     // column of A at each basis position
  std::vector<int> nonbasic_idx;  // ascending
  std::vector<int> position;      // column -> basis position, -1 if nonbasic
  std::shared_ptr<const BasisFactorization> factorization;
  Eigen::VectorXd x_b;
  Eigen::VectorXd y;               // row duals c_B' B^-1
  Eigen::VectorXd reduced_costs;   // per column, zero on basic columns
  double objective = 0.0;
  int iterations = 0;

  bool is_basic(int col) const { return position[col] >= 0; }

  Eigen::VectorXd primal(int cols) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    for (size_t r = 0; r < basic_idx.size(); ++r) x[basic_idx[r]] = x_b[r];
    return x;
  }
};

namespace detail {

inline Eigen::MatrixXd basis_matrix(const StandardFormLp& lp,
                                    const std::vector<int>& basic) {
  Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(lp.rows(), lp.rows());
  for (size_t r = 0; r < basic.size(); ++r)
    for (Eigen::SparseMatrix<double>::InnerIterator it(lp.a, basic[r]); it; ++it)
      bm(it.row(), static_cast<Eigen::Index>(r)) = it.value();
  return bm;
}

class SimplexEngine {
 public:
  SimplexEngine(const StandardFormLp& lp, const SimplexOptions& opts)
      : lp_(lp), opts_(opts), m_(lp.rows()), n_(lp.cols()) {
    max_iter_ = opts.max_iterations > 0 ? opts.max_iterations : 50 * (m_ + n_);
  }

  BasisState run() {
    if (lp_.b.size() != m_ || lp_.c.size() != n_)
      throw ValidationError("LP dimensions are inconsistent");
    crash_basis();
    if (num_art_ > 0) {
      cost_ = Eigen::VectorXd::Zero(n_ + num_art_);
      cost_.tail(num_art_).setOnes();
      refresh();
      optimize(/*phase1=*/true);
      refresh();
      double infeas = 0.0;
      for (int r = 0; r < m_; ++r)
        if (basis_[r] >= n_) infeas += std::abs(x_b_[r]);
      if (infeas > opts_.phase1_tol)
        throw InfeasibleError("LP is infeasible (phase-1 residual " +
                              std::to_string(infeas) + ")");
      drive_out_artificials();
    }
    cost_ = Eigen::VectorXd::Zero(n_ + num_art_);
    cost_.head(n_) = lp_.c;
    refresh();
    optimize(/*phase1=*/false);
    return finish();
  }

 private:
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp_.a, j); it; ++it)
        f(static_cast<int>(it.row()), it.value());
    } else {
      f(art_row_[j - n_], art_sign_[j - n_]);
    }
  }

  // Slack-like unit columns where b >= 0, artificials elsewhere.
  void crash_basis() {
    std::vector<int> unit_for_row(m_, -1);
    for (int j = 0; j < n_; ++j) {
      if (lp_.a.col(j).nonZeros() != 1) continue;
      Eigen::SparseMatrix<double>::InnerIterator it(lp_.a, j);
      if (it.value() > 0 && unit_for_row[it.row()] < 0 && lp_.b[it.row()] >= 0)
        unit_for_row[it.row()] = j;
    }
    basis_.assign(m_, -1);
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r) {
      if (unit_for_row[r] >= 0) {
        basis_[r] = unit_for_row[r];
        Eigen::SparseMatrix<double>::InnerIterator it(lp_.a, unit_for_row[r]);
        binv_(r, r) = 1.0 / it.value();
      } else {
        art_row_.push_back(r);
        art_sign_.push_back(lp_.b[r] >= 0 ? 1.0 : -1.0);
        basis_[r] = n_ + num_art_++;
        binv_(r, r) = art_sign_.back();
      }
    }
    pos_.assign(n_ + num_art_, -1);
    frozen_.assign(n_ + num_art_, 0);
    ray_tol_ = 1e-6 * std::max(1.0, lp_.c.cwiseAbs().maxCoeff());
    for (int r = 0; r < m_; ++r) pos_[basis_[r]] = r;
    x_b_ = binv_ * lp_.b;
  }

  void refresh() {
    x_b_ = binv_ * lp_.b;
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) cb[r] = cost_[basis_[r]];
    y_ = binv_.transpose() * cb;
    d_.resize(n_ + num_art_);
    for (int j = 0; j < n_ + num_art_; ++j) {
      double dot = 0.0;
      for_column(j, [&](int row, double v) { dot += y_[row] * v; });
      d_[j] = pos_[j] >= 0 ? 0.0 : cost_[j] - dot;
    }
  }

  void refactor() {
    Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r)
      for_column(basis_[r], [&](int row, double v) { bm(row, r) = v; });
    binv_ = bm.partialPivLu().inverse();
  }

  Eigen::VectorXd ftran(int j) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
    for_column(j, [&](int row, double v) { w.noalias() += v * binv_.col(row); });
    return w;
  }

  int price(bool phase1, bool bland) const {
    const int limit = phase1 ? n_ + num_art_ : n_;
    int best = -1;
    double best_d = -opts_.opt_tol;
    for (int j = 0; j < limit; ++j) {
      if (pos_[j] >= 0 || d_[j] >= best_d || frozen_[j]) continue;
      best = j;
      if (bland) return j;
      best_d = d_[j];
    }
    return best;
  }

  void pivot(int r, int q, const Eigen::VectorXd& w) {
    const double wr = w[r];
    // Reduced costs via the pivot row of B^-1 A.
    const Eigen::RowVectorXd brow = binv_.row(r);
    const double dq = d_[q];
    for (int j = 0; j < n_ + num_art_; ++j) {
      double alpha = 0.0;
      for_column(j, [&](int row, double v) { alpha += brow[row] * v; });
      d_[j] -= dq * alpha / wr;
    }
    const double theta = x_b_[r] / wr;
    x_b_.noalias() -= theta * w;
    x_b_[r] = theta;

    binv_.row(r) /= wr;
    const Eigen::RowVectorXd prow = binv_.row(r);
    Eigen::VectorXd wcol = w;
    wcol[r] = 0.0;
    binv_.noalias() -= wcol * prow;

    std::fill(frozen_.begin(), frozen_.end(), 0);
    pos_[basis_[r]] = -1;
    basis_[r] = q;
    pos_[q] = r;
    d_[q] = 0.0;
  }

  void optimize(bool phase1) {
    int degenerate = 0;
    int since_refresh = 0, since_refactor = 0;
    while (true) {
      if (iterations_ >= max_iter_)
        throw Error("simplex iteration limit reached (" + std::to_string(max_iter_) + ")");
      const bool bland = degenerate >= opts_.degenerate_run;
      int q = price(phase1, bland);
      if (q < 0) {
        // Confirm optimality on fresh reduced costs before stopping.
        if (since_refresh == 0) return;
        refresh();
        since_refresh = 0;
        continue;
      }
      Eigen::VectorXd w = ftran(q);
      int r = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (w[i] <= opts_.pivot_tol) continue;
        const double ratio = std::max(x_b_[i], 0.0) / w[i];
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          r = i;
        } else if (ratio <= best_ratio + 1e-12) {
          // Ties: Bland takes the smallest leaving column, otherwise the
          // largest pivot element.
          if (bland ? basis_[i] < basis_[r] : w[i] > w[r]) {
            best_ratio = std::min(best_ratio, ratio);
            r = i;
          }
        }
      }
      if (r < 0) {
        // Drifted reduced costs can point along the zero-cost angle shift.
        if (since_refactor > 0) {
          refactor();
          refresh();
          since_refactor = since_refresh = 0;
          continue;
        }
        // A zero-cost ray (theta+ and theta- of one bus rising together)
        // priced slightly negative by roundoff; park the column.
        if (std::abs(d_[q]) <= ray_tol_) {
          frozen_[q] = 1;
          continue;
        }
        if (phase1) throw Error("phase-1 subproblem reported unbounded");
        throw UnboundedError("LP is unbounded along column " + std::to_string(q));
      }
      if (x_b_[r] < 0) x_b_[r] = 0.0;
      pivot(r, q, w);
      ++iterations_;
      degenerate = best_ratio <= 1e-12 ? degenerate + 1 : 0;
      if (++since_refactor >= opts_.refactor_period) {
        refactor();
        refresh();
        since_refactor = since_refresh = 0;
      } else if (++since_refresh >= opts_.refresh_period) {
        refresh();
        since_refresh = 0;
      }
    }
  }

  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      const Eigen::RowVectorXd brow = binv_.row(r);
      int best = -1;
      double best_abs = 1e-7;
      for (int j = 0; j < n_; ++j) {
        if (pos_[j] >= 0) continue;
        double alpha = 0.0;
        for_column(j, [&](int row, double v) { alpha += brow[row] * v; });
        if (std::abs(alpha) > best_abs) {
          best_abs = std::abs(alpha);
          best = j;
        }
      }
      if (best < 0)
        throw ValidationError("constraint matrix is row-rank deficient (row " +
                              std::to_string(art_row_[basis_[r] - n_]) + ")");
      Eigen::VectorXd w = ftran(best);
      pivot(r, best, w);
      ++iterations_;
    }
  }

  BasisState finish() {
    BasisState st;
    st.basic_idx.assign(basis_.begin(), basis_.end());
    st.position.assign(n_, -1);
    for (int r = 0; r < m_; ++r) st.position[basis_[r]] = r;
    for (int j = 0; j < n_; ++j)
      if (st.position[j] < 0) st.nonbasic_idx.push_back(j);
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) cb[r] = lp_.c[basis_[r]];
    if (opts_.factorize) {
      auto f = std::make_shared<BasisFactorization>(basis_matrix(lp_, st.basic_idx));
      st.x_b = f->solve(lp_.b);
      st.y = f->solve_transpose(cb);
      st.factorization = std::move(f);
    } else {
      st.x_b = binv_ * lp_.b;
      st.y = binv_.transpose() * cb;
    }
    st.reduced_costs = lp_.c - lp_.a.transpose() * st.y;
    for (int r = 0; r < m_; ++r) st.reduced_costs[basis_[r]] = 0.0;
    st.objective = cb.dot(st.x_b);
    st.iterations = iterations_;
    return st;
  }

  const StandardFormLp& lp_;
  SimplexOptions opts_;
  int m_, n_;
  int max_iter_ = 0;
  int iterations_ = 0;
  int num_art_ = 0;
  std::vector<int> art_row_;
  std::vector<double> art_sign_;
  std::vector<int> basis_, pos_;
  std::vector<char> frozen_;
  double ray_tol_ = 1e-6;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_b_, y_, d_, cost_;
};

}  // namespace detail

// Solves the LP to optimality. Throws InfeasibleError or UnboundedError.
inline BasisState simplex_solve(const StandardFormLp& lp,
                                const SimplexOptions& opts = {}) {
  return detail::SimplexEngine(lp, opts).run();
}

// Factorizes a given basis and evaluates its primal/dual quantities.
inline BasisState evaluate_basis(const StandardFormLp& lp,
                                 std::vector<int> basic_idx) {
  BasisState st;
  const int m = lp.rows(), n = lp.cols();
  if (static_cast<int>(basic_idx.size()) != m)
    throw ValidationError("basis size does not match row count");
  st.position.assign(n, -1);
  for (int r = 0; r < m; ++r) st.position[basic_idx[r]] = r;
  for (int j = 0; j < n; ++j)
    if (st.position[j] < 0) st.nonbasic_idx.push_back(j);
  auto f = std::make_shared<BasisFactorization>(detail::basis_matrix(lp, basic_idx));
  Eigen::VectorXd cb(m);
  for (int r = 0; r < m; ++r) cb[r] = lp.c[basic_idx[r]];
  st.x_b = f->solve(lp.b);
  st.y = f->solve_transpose(cb);
  st.reduced_costs = lp.c - lp.a.transpose() * st.y;
  for (int r = 0; r < m; ++r) st.reduced_costs[basic_idx[r]] = 0.0;
  st.objective = cb.dot(st.x_b);
  st.basic_idx = std::move(basic_idx);
  st.factorization = std::move(f);
  return st;
}

}  // namespace otr
