#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eegbench/baselines/features.hpp"
#include "eegbench/baselines/knn.hpp"
#include "eegbench/log.hpp"

namespace eegbench::baselines {

struct SvmOptions {
  double c = 1.0;
  double gamma = 0.0;          // <= 0 means "scale": 1 / (d * Var(all features))
  double tolerance = 1e-3;     // KKT violation at which SMO stops
  std::size_t max_passes = 10000;  // iteration cap = max_passes * n

  void validate() const {
    if (!(c > 0.0)) throw ParameterError("svm: C must be positive");
    if (!(tolerance > 0.0)) throw ParameterError("svm: tolerance must be positive");
    if (max_passes == 0) throw ParameterError("svm: max_passes must be positive");
  }
};

inline double scale_gamma(const Samples& s) {
  const double count = static_cast<double>(s.size()) * static_cast<double>(s.dim);
  double mean = 0.0;
  for (const double* r : s.rows)
    for (std::size_t j = 0; j < s.dim; ++j) mean += r[j];
  mean /= count;
  double var = 0.0;
  for (const double* r : s.rows)
    for (std::size_t j = 0; j < s.dim; ++j) var += (r[j] - mean) * (r[j] - mean);
  var /= count;
  return var > 0.0 ? 1.0 / (static_cast<double>(s.dim) * var) : 1.0;
}

// Soft-margin RBF SVM on the dual
//   min 1/2 a'Qa - e'a,  0 <= a_i <= C,  y'a = 0,  Q_ij = y_i y_j K(x_i, x_j)
// solved by SMO with second-order working-set selection. y = +1 for SZ.
// decision(x) = sum_i a_i y_i K(x_i, x) - rho; SZ iff decision >= 0.
//
// The model keeps pointers to its support vectors, which must outlive it.
class Svm {
 public:
  explicit Svm(SvmOptions opt = {}) : opt_(opt) { opt_.validate(); }

  void fit(const Samples& train) {
    require_training_set(train, "svm");
    require_two_classes(train, "svm");
    const std::size_t n = train.size();
    dim_ = train.dim;
    gamma_ = opt_.gamma > 0.0 ? opt_.gamma : scale_gamma(train);

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = train.labels[i] == Label::SZ ? 1.0 : -1.0;
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      k[i * n + i] = 1.0;
      for (std::size_t j = 0; j < i; ++j)
        k[i * n + j] = k[j * n + i] = std::exp(-gamma_ * squared_distance(train.rows[i], train.rows[j], dim_));
    }

    const double c = opt_.c, tau = 1e-12;
    std::vector<double> a(n, 0.0), g(n, -1.0);
    auto up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0); };
    auto low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c); };

    const std::size_t max_iter = opt_.max_passes * n;
    converged_ = false;
    iterations_ = 0;
    while (iterations_ < max_iter) {
      double gmax = -std::numeric_limits<double>::infinity(), gmax2 = gmax;
      std::ptrdiff_t i = -1;
      for (std::size_t t = 0; t < n; ++t)
        if (up(t) && -y[t] * g[t] > gmax) {
          i = static_cast<std::ptrdiff_t>(t);
          gmax = -y[t] * g[t];
        }
      std::ptrdiff_t j = -1;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        if (!low(t)) continue;
        gmax2 = std::max(gmax2, y[t] * g[t]);
        if (i < 0) continue;
        const double b = gmax + y[t] * g[t];
        if (b <= 0) continue;
        const auto ii = static_cast<std::size_t>(i);
        double quad = k[ii * n + ii] + k[t * n + t] - 2.0 * k[ii * n + t];
        if (quad <= 0) quad = tau;
        const double obj = -(b * b) / quad;
        if (obj < best) {
          best = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
      if (i < 0 || j < 0 || gmax + gmax2 < opt_.tolerance) {
        converged_ = true;
        break;
      }
      ++iterations_;
      const auto ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
      const double old_i = a[ii], old_j = a[jj];
      double quad = k[ii * n + ii] + k[jj * n + jj] - 2.0 * k[ii * n + jj];
      if (quad <= 0) quad = tau;
      if (y[ii] != y[jj]) {
        const double delta = (-g[ii] - g[jj]) / quad, diff = a[ii] - a[jj];
        a[ii] += delta;
        a[jj] += delta;
        if (diff > 0) {
          if (a[jj] < 0) { a[jj] = 0; a[ii] = diff; }
        } else if (a[ii] < 0) {
          a[ii] = 0;
          a[jj] = -diff;
        }
        if (diff > 0) {
          if (a[ii] > c) { a[ii] = c; a[jj] = c - diff; }
        } else if (a[jj] > c) {
          a[jj] = c;
          a[ii] = c + diff;
        }
      } else {
        const double delta = (g[ii] - g[jj]) / quad, sum = a[ii] + a[jj];
        a[ii] -= delta;
        a[jj] += delta;
        if (sum > c) {
          if (a[ii] > c) { a[ii] = c; a[jj] = sum - c; }
        } else if (a[jj] < 0) {
          a[jj] = 0;
          a[ii] = sum;
        }
        if (sum > c) {
          if (a[jj] > c) { a[jj] = c; a[ii] = sum - c; }
        } else if (a[ii] < 0) {
          a[ii] = 0;
          a[jj] = sum;
        }
      }
      const double di = a[ii] - old_i, dj = a[jj] - old_j;
      for (std::size_t t = 0; t < n; ++t)
        g[t] += y[t] * (y[ii] * k[t * n + ii] * di + y[jj] * k[t * n + jj] * dj);
    }
    if (!converged_) {
      log::warn("svm: SMO stopped after " + std::to_string(iterations_) +
                " iterations without meeting the KKT tolerance; using the last iterate");
    }

    // rho: mean of y_i G_i over free vectors, else the midpoint of the bounds.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double yg = y[t] * g[t];
      if (a[t] >= c) {
        if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (a[t] <= 0) {
        if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++free;
        sum += yg;
      }
    }
    rho_ = free > 0 ? sum / static_cast<double>(free) : (ub + lb) / 2.0;

    alpha_ = a;
    labels_sign_ = y;
    support_.clear();
    coef_.clear();
    sv_rows_.clear();
    for (std::size_t t = 0; t < n; ++t) {
      if (a[t] > 0) {
        support_.push_back(t);
        coef_.push_back(a[t] * y[t]);
        sv_rows_.push_back(train.rows[t]);
      }
    }
  }

  double decision(const double* x) const {
    double s = -rho_;
    for (std::size_t i = 0; i < sv_rows_.size(); ++i)
      s += coef_[i] * std::exp(-gamma_ * squared_distance(sv_rows_[i], x, dim_));
    return s;
  }

  Label predict(const double* x) const { return decision(x) >= 0.0 ? Label::SZ : Label::HC; }

  std::vector<double> decision(const Samples& q) const {
    if (sv_rows_.empty() && dim_ == 0) throw ContractError("svm: model is not fitted");
    require_dim(q, dim_, "svm");
    std::vector<double> out;
    for (const double* row : q.rows) out.push_back(decision(row));
    return out;
  }

  const SvmOptions& options() const { return opt_; }
  double gamma() const { return gamma_; }
  double rho() const { return rho_; }
  bool converged() const { return converged_; }
  std::size_t iterations() const { return iterations_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& label_signs() const { return labels_sign_; }
  const std::vector<std::size_t>& support() const { return support_; }
  const std::vector<double>& dual_coef() const { return coef_; }

  // Restores a fitted model; support indices refer to rows of `train`.
  void set_state(const Samples& train, std::vector<std::size_t> support, std::vector<double> coef, double rho,
                 double gamma, bool converged, std::size_t iterations) {
    if (support.size() != coef.size()) throw DataError("svm: support and coefficient counts differ");
    sv_rows_.clear();
    for (auto i : support) {
      if (i >= train.size()) throw DataError("svm: support index out of range");
      sv_rows_.push_back(train.rows[i]);
    }
    support_ = std::move(support);
    coef_ = std::move(coef);
    rho_ = rho;
    gamma_ = gamma;
    dim_ = train.dim;
    converged_ = converged;
    iterations_ = iterations;
  }

 private:
  SvmOptions opt_;
  std::size_t dim_ = 0;
  double gamma_ = 0.0;
  double rho_ = 0.0;
  bool converged_ = false;
  std::size_t iterations_ = 0;
  std::vector<double> alpha_, labels_sign_, coef_;
  std::vector<std::size_t> support_;
  std::vector<const double*> sv_rows_;
};

}  // namespace eegbench::baselines
