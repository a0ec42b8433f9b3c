#pragma once

#include <Eigen/Dense>

#include <string>

#include "hdarcy/error.hpp"

namespace hdarcy {

/// Block LDL^T factorization of a dense saddle matrix
///
///   [ M  B^T ]   [ I        0 ] [ M   0 ] [ I  M^{-1} B^T ]
///   [ B   0  ] = [ B M^{-1} I ] [ 0  -C ] [ 0      I      ],  C = B M^{-1} B^T,
///
/// with M symmetric positive definite and B of full row rank, so both M and
/// C are factorized by Cholesky.
class SaddleBlockLdl {
 public:
  SaddleBlockLdl() = default;

  SaddleBlockLdl(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B) { factorize(M, B); }

  void factorize(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B) {
    if (M.rows() != M.cols() || B.cols() != M.rows()) {
      throw InvalidArgument("saddle factorization: inconsistent block sizes");
    }
    B_ = B;
    m_llt_.compute(M);
    if (m_llt_.info() != Eigen::Success) {
      throw SolverError("mass block is not positive definite");
    }
    MinvBt_ = m_llt_.solve(B.transpose());
    c_llt_.compute(B * MinvBt_);
    if (c_llt_.info() != Eigen::Success) {
      throw SolverError("saddle block is singular (constraint block rank deficient)");
    }
    ready_ = true;
  }

  bool ready() const noexcept { return ready_; }
  Eigen::Index n_primal() const noexcept { return MinvBt_.rows(); }
  Eigen::Index n_constraint() const noexcept { return MinvBt_.cols(); }
  Eigen::Index size() const noexcept { return n_primal() + n_constraint(); }

  /// Solves [M B^T; B 0] [x; y] = rhs for a stacked right-hand side.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const Eigen::Index nu = n_primal(), np = n_constraint();
    const Eigen::VectorXd z = m_llt_.solve(rhs.head(nu));
    const Eigen::VectorXd y = c_llt_.solve(B_ * z - rhs.tail(np));
    Eigen::VectorXd out(nu + np);
    out.head(nu) = z - MinvBt_ * y;
    out.tail(np) = y;
    return out;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    const Eigen::Index nu = n_primal(), np = n_constraint();
    const Eigen::MatrixXd z = m_llt_.solve(rhs.topRows(nu));
    const Eigen::MatrixXd y = c_llt_.solve(B_ * z - rhs.bottomRows(np));
    Eigen::MatrixXd out(nu + np, rhs.cols());
    out.topRows(nu) = z - MinvBt_ * y;
    out.bottomRows(np) = y;
    return out;
  }

 private:
  Eigen::MatrixXd B_;
  Eigen::MatrixXd MinvBt_;
  Eigen::LLT<Eigen::MatrixXd> m_llt_;
  Eigen::LLT<Eigen::MatrixXd> c_llt_;
  bool ready_ = false;
};

}  // namespace hdarcy
