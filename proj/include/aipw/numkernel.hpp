#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aipw/error.hpp"

namespace aipw {

// Dense column-major design matrix with labelled columns.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t k) { return data_[k * rows_ + i]; }
  double operator()(std::size_t i, std::size_t k) const { return data_[k * rows_ + i]; }

  std::span<double> column(std::size_t k) { return {data_.data() + k * rows_, rows_}; }
  std::span<const double> column(std::size_t k) const { return {data_.data() + k * rows_, rows_}; }

  // Appends a column; the first column fixes the row count.
  void append_column(std::string label, std::span<const double> values);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::vector<std::string>& labels() noexcept { return labels_; }

  // Row-major nested-list construction, used mostly by tests.
  static DesignMatrix from_rows(const std::vector<std::vector<double>>& rows);

  // Copy of the rows whose mask entry is nonzero.
  DesignMatrix select_rows(std::span<const double> mask) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

struct SolveReport {
  std::vector<double> coefficients;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  // Newton solver only: deviance after each accepted step, starting value first.
  std::vector<double> deviance_trace;
};

// Minimizes sum_i w_i (y_i - X_i beta)^2 by Householder QR on the weighted,
// column-equilibrated design followed by one step of iterative refinement.
// Throws RankDeficient when a squared pivot falls below 1e-12 of the largest.
SolveReport least_squares(const DesignMatrix& x, std::span<const double> y,
                          std::optional<std::span<const double>> weights = std::nullopt);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 100;
  int max_halvings = 30;
  double divergence_bound = 1e4;
  std::optional<std::vector<double>> start;
};

// Binary-regression maximum likelihood (logit link) by safeguarded Newton.
// Convergence is judged on the sup-norm of the score sum_i (t_i - expit(X_i a)) X_i.
SolveReport logistic_newton(const DesignMatrix& x, std::span<const double> t,
                            const NewtonOptions& options = {});

// 1 / (1 + exp(-u)) without overflow.
double expit(double u) noexcept;

// -2 log-likelihood of binary outcomes t under linear predictor eta.
double binomial_deviance(std::span<const double> t, std::span<const double> eta);

// Cholesky solve of the symmetric positive definite system a x = b, with
// `a` row-major p x p. Throws `code` when a pivot falls below rel_tol times
// the largest diagonal entry.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t p,
                              ErrorCode code = ErrorCode::RankDeficient, double rel_tol = 1e-12);

// LU solve with partial pivoting; `a` row-major p x p.
std::vector<double> solve_general(std::vector<double> a, std::vector<double> b, std::size_t p,
                                  ErrorCode code = ErrorCode::RankDeficient,
                                  double rel_tol = 1e-12);

}  // namespace aipw
