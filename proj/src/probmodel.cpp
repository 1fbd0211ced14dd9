#include "snerv/probmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snerv::probmodel {

double box_cox(double x, double beta) {
  if (!(x > 0.0)) throw NonPositiveInput("box_cox requires x > 0");
  if (beta == 0.0) return std::log(x);
  return (std::pow(x, beta) - 1.0) / beta;
}

double inverse_box_cox(double y, double beta) {
  if (beta == 0.0) return std::exp(y);
  const double base = beta * y + 1.0;
  if (!(base > 0.0))
    throw NonPositiveInput("inverse_box_cox outside the transform's range");
  return std::pow(base, 1.0 / beta);
}

double box_cox_loglik(const Eigen::VectorXd& log_xs, double beta) {
  const Eigen::Index n = log_xs.size();
  Eigen::ArrayXd t;
  if (beta == 0.0)
    t = log_xs.array();
  else
    t = ((beta * log_xs.array()).exp() - 1.0) / beta;
  const double mean = t.mean();
  const double var = (t - mean).square().mean();  // population
  if (var <= 0.0) return -std::numeric_limits<double>::infinity();
  return -0.5 * static_cast<double>(n) * std::log(var) +
         (beta - 1.0) * log_xs.sum();
}

double box_cox_mle(const Eigen::VectorXd& xs) {
  if (xs.size() < 10) throw TooFewSamples("box_cox_mle needs >= 10 samples");
  if ((xs.array() <= 0.0).any())
    throw NonPositiveInput("box_cox_mle requires positive samples");
  if ((xs.array() == xs[0]).all())
    throw DegenerateData("box_cox_mle: all samples equal");
  const Eigen::VectorXd lx = xs.array().log().matrix();

  // coarse grid
  double best_beta = 0.0, best_ll = -std::numeric_limits<double>::infinity();
  for (int i = -300; i <= 300; ++i) {
    const double beta = i * 0.01;
    const double ll = box_cox_loglik(lx, beta);
    if (ll > best_ll) {
      best_ll = ll;
      best_beta = beta;
    }
  }

  // golden-section refinement around the grid optimum
  double a = std::max(-3.0, best_beta - 0.01);
  double b = std::min(3.0, best_beta + 0.01);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = box_cox_loglik(lx, c);
  double fd = box_cox_loglik(lx, d);
  while (b - a > 1e-4) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = box_cox_loglik(lx, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = box_cox_loglik(lx, d);
    }
  }
  return 0.5 * (a + b);
}

std::vector<ComponentModel> fit_component_models(const Matrix& W) {
  if ((W.array() < 0.0).any())
    throw NegativeInput("fit_component_models requires W >= 0");
  const Eigen::Index N = W.rows(), k = W.cols();
  std::vector<ComponentModel> models(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    ComponentModel& m = models[static_cast<std::size_t>(j)];
    m.n_total = static_cast<std::size_t>(N);
    std::vector<double> nz;
    nz.reserve(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i)
      if (W(i, j) > 0.0) nz.push_back(W(i, j));
    m.n_nonzero = nz.size();
    m.p = N > 0 ? static_cast<double>(nz.size()) / N : 0.0;
    if (nz.size() < 10) continue;  // null continuous model, flagged not fatal
    Eigen::Map<Eigen::VectorXd> xs(nz.data(),
                                   static_cast<Eigen::Index>(nz.size()));
    if ((xs.array() == nz[0]).all()) continue;  // degenerate column
    m.beta = box_cox_mle(xs);
    Eigen::ArrayXd t(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) t[i] = box_cox(xs[i], m.beta);
    m.mu = t.mean();
    m.sigma = std::sqrt((t - m.mu).square().mean());
    if (m.sigma <= 0.0) continue;
    m.has_continuous = true;
  }
  return models;
}

StandardizedCoefficients standardize(const Matrix& W,
                                     const std::vector<ComponentModel>& models) {
  const Eigen::Index N = W.rows(), k = W.cols();
  if (static_cast<Eigen::Index>(models.size()) != k)
    throw ModelMismatch("model count does not match component count");
  StandardizedCoefficients out;
  out.Z.resize(N, k);
  out.M.resize(N, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const ComponentModel& m = models[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < N; ++i) {
      if (W(i, j) > 0.0) {
        if (!m.has_continuous)
          throw ModelMismatch("nonzero coefficient in a column with a null "
                              "continuous model");
        out.M(i, j) = 1;
        out.Z(i, j) = (box_cox(W(i, j), m.beta) - m.mu) / m.sigma;
      } else {
        out.M(i, j) = 0;
        out.Z(i, j) = kAbsentSentinel;
      }
    }
  }
  return out;
}

}  // namespace snerv::probmodel
