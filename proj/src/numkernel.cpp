#include "aipw/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "aipw/kernels.hpp"

namespace aipw {

namespace {

constexpr double kRankTolerance = 1e-12;
// Deviance this close to zero with both classes present only happens when
// the fitted probabilities have collapsed onto 0/1.
constexpr double kSeparatedDeviance = 1e-6;

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

void require_finite(const DesignMatrix& x) {
  for (std::size_t k = 0; k < x.cols(); ++k) {
    for (double v : x.column(k)) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "design matrix has a non-finite entry");
    }
  }
}

std::vector<double> linear_predictor(const DesignMatrix& x, std::span<const double> coef) {
  std::vector<double> eta(x.rows(), 0.0);
  for (std::size_t k = 0; k < x.cols(); ++k) kernels::axpy(coef[k], x.column(k), eta);
  return eta;
}

// Householder QR of a column-major m x p matrix held in `a`; R is left in the
// upper triangle and reflectors on and below the diagonal.
struct Householder {
  std::size_t m = 0, p = 0;
  std::vector<double> a;
  std::vector<double> diag;  // R_kk
  std::vector<double> vnorm2;

  double* col(std::size_t k) { return a.data() + k * m; }

  void factor() {
    diag.assign(p, 0.0);
    vnorm2.assign(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
      double* v = col(k) + k;
      const std::size_t len = m - k;
      const double norm = std::sqrt(kernels::active().dot(v, v, len));
      if (norm == 0.0) {
        diag[k] = 0.0;
        continue;
      }
      const double alpha = v[0] > 0 ? -norm : norm;
      v[0] -= alpha;
      vnorm2[k] = kernels::active().dot(v, v, len);
      diag[k] = alpha;
      for (std::size_t j = k + 1; j < p; ++j) reflect(k, col(j));
    }
  }

  // Applies reflector k to a length-m vector.
  void reflect(std::size_t k, double* target) const {
    if (vnorm2[k] == 0.0) return;
    const double* v = a.data() + k * m + k;
    const std::size_t len = m - k;
    const double s = kernels::active().dot(v, target + k, len);
    kernels::active().axpy(-2.0 * s / vnorm2[k], v, target + k, len);
  }

  double r(std::size_t i, std::size_t j) const { return i == j ? diag[i] : a[j * m + i]; }

  std::vector<double> back_substitute(std::vector<double> rhs) const {
    for (std::size_t ii = p; ii-- > 0;) {
      double s = rhs[ii];
      for (std::size_t j = ii + 1; j < p; ++j) s -= r(ii, j) * rhs[j];
      rhs[ii] = s / diag[ii];
    }
    return rhs;
  }

  // Solves R^T R z = g.
  std::vector<double> normal_solve(std::vector<double> g) const {
    for (std::size_t i = 0; i < p; ++i) {
      double s = g[i];
      for (std::size_t j = 0; j < i; ++j) s -= r(j, i) * g[j];
      g[i] = s / diag[i];
    }
    return back_substitute(std::move(g));
  }
};

}  // namespace

DesignMatrix::DesignMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0), labels_(cols) {}

void DesignMatrix::append_column(std::string label, std::span<const double> values) {
  if (cols_ == 0 && data_.empty()) {
    rows_ = values.size();
  } else if (values.size() != rows_) {
    throw Error(ErrorCode::DimensionMismatch, "column '" + label + "' has " +
                                                  std::to_string(values.size()) + " rows, expected " +
                                                  std::to_string(rows_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  labels_.push_back(std::move(label));
  ++cols_;
}

DesignMatrix DesignMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t p = n == 0 ? 0 : rows.front().size();
  DesignMatrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != p) throw Error(ErrorCode::DimensionMismatch, "ragged row list");
    for (std::size_t k = 0; k < p; ++k) x(i, k) = rows[i][k];
  }
  for (std::size_t k = 0; k < p; ++k) x.labels_[k] = "c" + std::to_string(k);
  return x;
}

DesignMatrix DesignMatrix::select_rows(std::span<const double> mask) const {
  if (mask.size() != rows_) throw Error(ErrorCode::DimensionMismatch, "row mask length differs from rows");
  std::size_t kept = 0;
  for (double m : mask) kept += m != 0.0;
  DesignMatrix out(kept, cols_);
  out.labels_ = labels_;
  for (std::size_t k = 0; k < cols_; ++k) {
    std::size_t r = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (mask[i] != 0.0) out(r++, k) = (*this)(i, k);
    }
  }
  return out;
}

SolveReport least_squares(const DesignMatrix& x, std::span<const double> y,
                          std::optional<std::span<const double>> weights) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (p == 0) throw Error(ErrorCode::DimensionMismatch, "design has no columns");
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
  if (weights && weights->size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "weight length differs from design rows");
  }
  require_finite(x);

  std::vector<std::size_t> support;
  std::vector<double> root_w;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    if (w > 0.0) {
      if (!std::isfinite(y[i])) throw Error(ErrorCode::InvalidArgument, "non-finite response on weighted support");
      support.push_back(i);
      root_w.push_back(std::sqrt(w));
    }
  }
  const std::size_t m = support.size();
  if (m < p) {
    throw Error(ErrorCode::RankDeficient, std::to_string(m) + " weighted rows for " + std::to_string(p) + " columns");
  }

  Householder qr;
  qr.m = m;
  qr.p = p;
  qr.a.resize(m * p);
  std::vector<double> scale(p);
  for (std::size_t k = 0; k < p; ++k) {
    double* c = qr.col(k);
    for (std::size_t r = 0; r < m; ++r) c[r] = root_w[r] * x(support[r], k);
    scale[k] = std::sqrt(kernels::active().dot(c, c, m));
    if (scale[k] == 0.0) {
      throw Error(ErrorCode::RankDeficient, "column '" + x.labels()[k] + "' is zero on the weighted support");
    }
    for (std::size_t r = 0; r < m; ++r) c[r] /= scale[k];
  }
  qr.factor();

  double largest = 0.0;
  for (double d : qr.diag) largest = std::max(largest, d * d);
  for (std::size_t k = 0; k < p; ++k) {
    if (qr.diag[k] * qr.diag[k] <= kRankTolerance * largest) {
      throw Error(ErrorCode::RankDeficient,
                  "column '" + x.labels()[k] + "' is numerically collinear with earlier columns");
    }
  }

  std::vector<double> rhs(m);
  for (std::size_t r = 0; r < m; ++r) rhs[r] = root_w[r] * y[support[r]];
  for (std::size_t k = 0; k < p; ++k) qr.reflect(k, rhs.data());
  rhs.resize(p);
  std::vector<double> z = qr.back_substitute(std::move(rhs));

  SolveReport report;
  report.coefficients.resize(p);
  for (std::size_t k = 0; k < p; ++k) report.coefficients[k] = z[k] / scale[k];

  // One refinement pass through the semi-normal equations R^T R dz = S^-1 X^T W r.
  auto weighted_gradient = [&](const std::vector<double>& beta) {
    std::vector<double> wr(n, 0.0);
    const std::vector<double> fit = linear_predictor(x, beta);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t i = support[r];
      wr[i] = root_w[r] * root_w[r] * (y[i] - fit[i]);
    }
    std::vector<double> g(p);
    for (std::size_t k = 0; k < p; ++k) g[k] = kernels::dot(x.column(k), wr);
    return g;
  };
  std::vector<double> g = weighted_gradient(report.coefficients);
  for (std::size_t k = 0; k < p; ++k) g[k] /= scale[k];
  const std::vector<double> dz = qr.normal_solve(std::move(g));
  for (std::size_t k = 0; k < p; ++k) report.coefficients[k] += dz[k] / scale[k];

  report.gradient_norm = sup_norm(weighted_gradient(report.coefficients));
  report.converged = true;
  report.iterations = 1;
  return report;
}

double expit(double u) noexcept {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double binomial_deviance(std::span<const double> t, std::span<const double> eta) {
  if (t.size() != eta.size()) throw Error(ErrorCode::DimensionMismatch, "deviance inputs differ in length");
  double dev = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    dev += t[i] != 0.0 ? softplus(-eta[i]) : softplus(eta[i]);
  }
  return 2.0 * dev;
}

SolveReport logistic_newton(const DesignMatrix& x, std::span<const double> t, const NewtonOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (t.size() != n) throw Error(ErrorCode::DimensionMismatch, "indicator length differs from design rows");
  if (p == 0) throw Error(ErrorCode::DimensionMismatch, "design has no columns");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  require_finite(x);
  std::size_t ones = 0;
  for (double v : t) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "indicator values must be 0 or 1");
    ones += v == 1.0;
  }
  if (ones == 0 || ones == n) throw Error(ErrorCode::OneClassOnly, "response indicator is constant");

  std::vector<double> alpha = options.start.value_or(std::vector<double>(p, 0.0));
  if (alpha.size() != p) throw Error(ErrorCode::DimensionMismatch, "start vector length differs from columns");

  std::vector<double> eta = linear_predictor(x, alpha);
  double deviance = binomial_deviance(t, eta);
  std::vector<double> prob(n), resid(n), weight(n);

  SolveReport report;
  report.deviance_trace.push_back(deviance);

  for (int iter = 0;; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = expit(eta[i]);
      resid[i] = t[i] - prob[i];
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    std::vector<double> score(p);
    for (std::size_t k = 0; k < p; ++k) score[k] = kernels::dot(x.column(k), resid);
    report.gradient_norm = sup_norm(score);

    if (deviance <= kSeparatedDeviance || sup_norm(alpha) > options.divergence_bound) {
      throw Error(ErrorCode::Separated, "fitted probabilities collapse to 0/1 (deviance " +
                                            std::to_string(deviance) + "); data are separated");
    }
    if (report.gradient_norm <= options.tol) {
      report.converged = true;
      break;
    }
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "score norm " << report.gradient_norm << " after " << iter << " iterations";
      throw Error(ErrorCode::NotConverged, msg.str());
    }

    std::vector<double> hessian(p * p);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k <= j; ++k) {
        const double v = kernels::dot3(weight, x.column(j), x.column(k));
        hessian[j * p + k] = v;
        hessian[k * p + j] = v;
      }
    }
    std::vector<double> step;
    try {
      step = solve_spd(std::move(hessian), score, p);
    } catch (const Error&) {
      if (*std::max_element(weight.begin(), weight.end()) < 1e-10) {
        throw Error(ErrorCode::Separated, "information matrix vanished; data are separated");
      }
      throw;
    }

    // Near the optimum the deviance change falls below its own rounding error.
    const double slack = 1e-13 * (1.0 + deviance);
    double fraction = 1.0;
    bool accepted = false;
    std::vector<double> trial(p), trial_eta;
    for (int h = 0; h <= options.max_halvings; ++h) {
      for (std::size_t k = 0; k < p; ++k) trial[k] = alpha[k] + fraction * step[k];
      trial_eta = linear_predictor(x, trial);
      const double trial_dev = binomial_deviance(t, trial_eta);
      if (trial_dev <= deviance + slack) {
        alpha = trial;
        eta = std::move(trial_eta);
        deviance = trial_dev;
        accepted = true;
        break;
      }
      fraction *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "no deviance decrease after " << options.max_halvings << " step halvings (score norm "
          << report.gradient_norm << ")";
      throw Error(ErrorCode::NotConverged, msg.str());
    }
    report.deviance_trace.push_back(deviance);
    ++report.iterations;
  }

  report.coefficients = std::move(alpha);
  return report;
}

std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t p, ErrorCode code,
                              double rel_tol) {
  if (a.size() != p * p || b.size() != p) throw Error(ErrorCode::DimensionMismatch, "solve_spd shape");
  double largest = 0.0;
  for (std::size_t k = 0; k < p; ++k) largest = std::max(largest, a[k * p + k]);
  for (std::size_t k = 0; k < p; ++k) {
    double d = a[k * p + k];
    for (std::size_t j = 0; j < k; ++j) d -= a[k * p + j] * a[k * p + j];
    if (!(d > rel_tol * largest)) throw Error(code, "matrix is numerically singular (Cholesky pivot " + std::to_string(k) + ")");
    const double l = std::sqrt(d);
    a[k * p + k] = l;
    for (std::size_t i = k + 1; i < p; ++i) {
      double s = a[i * p + k];
      for (std::size_t j = 0; j < k; ++j) s -= a[i * p + j] * a[k * p + j];
      a[i * p + k] = s / l;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= a[i * p + j] * b[j];
    b[i] = s / a[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < p; ++j) s -= a[j * p + i] * b[j];
    b[i] = s / a[i * p + i];
  }
  return b;
}

std::vector<double> solve_general(std::vector<double> a, std::vector<double> b, std::size_t p, ErrorCode code,
                                  double rel_tol) {
  if (a.size() != p * p || b.size() != p) throw Error(ErrorCode::DimensionMismatch, "solve_general shape");
  double largest = 0.0;
  for (double v : a) largest = std::max(largest, std::fabs(v));
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i) {
      if (std::fabs(a[i * p + k]) > std::fabs(a[piv * p + k])) piv = i;
    }
    if (!(std::fabs(a[piv * p + k]) > rel_tol * largest)) {
      throw Error(code, "matrix is numerically singular (LU pivot " + std::to_string(k) + ")");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < p; ++j) std::swap(a[k * p + j], a[piv * p + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < p; ++i) {
      const double f = a[i * p + k] / a[k * p + k];
      for (std::size_t j = k; j < p; ++j) a[i * p + j] -= f * a[k * p + j];
      b[i] -= f * b[k];
    }
  }
  for (std::size_t i = p; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < p; ++j) s -= a[i * p + j] * b[j];
    b[i] = s / a[i * p + i];
  }
  return b;
}

}  // namespace aipw
