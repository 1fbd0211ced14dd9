#include "snerv/unmixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "snerv/rng.hpp"

namespace snerv::unmixing {

void UnmixingConfig::validate() const {
  if (k < 1) throw ConfigInvalid("k must be >= 1");
  if (lambda1 < 0 || lambdaF < 0)
    throw ConfigInvalid("regularization weights must be >= 0");
  if (max_iters < 1) throw ConfigInvalid("max_iters must be >= 1");
  if (!(rel_tol > 0)) throw ConfigInvalid("rel_tol must be > 0");
  if (init != "nndsvd-like" && init != "random")
    throw ConfigInvalid("init must be 'nndsvd-like' or 'random'");
}

double nmf_objective(const Matrix& S, const Matrix& W, const Matrix& H,
                     double lambda1, double lambdaF) {
  if (W.rows() != S.rows() || H.cols() != S.cols() || W.cols() != H.rows())
    throw ShapeMismatch("nmf_objective: non-conforming shapes");
  if (!S.allFinite() || !W.allFinite() || !H.allFinite())
    throw ShapeMismatch("nmf_objective: non-finite input");
  const double fit = 0.5 * (S - W * H).squaredNorm();
  const double l1 = lambda1 * (W.cwiseAbs().sum() + H.cwiseAbs().sum());
  const double fro = 0.5 * lambdaF * (W.squaredNorm() + H.squaredNorm());
  return fit + l1 + fro;
}

// One HALS sweep over the columns of W. Each column update is the exact
// minimizer of the objective in that column, so the objective cannot rise.
static void update_W(Matrix& W, const Matrix& G, const Matrix& P,
                     double lambda1, double lambdaF) {
  const Eigen::Index k = W.cols();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double denom = G(j, j) + lambdaF;
    if (denom <= 0.0) {
      W.col(j).setZero();
      continue;
    }
    Eigen::VectorXd numer = P.col(j) - W * G.col(j) + W.col(j) * G(j, j);
    W.col(j) = ((numer.array() - lambda1).max(0.0) / denom).matrix();
  }
}

static void update_H(Matrix& H, const Matrix& A, const Matrix& B,
                     double lambda1, double lambdaF) {
  const Eigen::Index k = H.rows();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double denom = A(j, j) + lambdaF;
    if (denom <= 0.0) {
      H.row(j).setZero();
      continue;
    }
    Eigen::RowVectorXd numer = B.row(j) - A.row(j) * H + A(j, j) * H.row(j);
    H.row(j) = ((numer.array() - lambda1).max(0.0) / denom).matrix();
  }
}

static void init_factors(const Matrix& S, const UnmixingConfig& cfg, Matrix& W,
                         Matrix& H) {
  const Eigen::Index N = S.rows(), L = S.cols(), k = cfg.k;
  W = Matrix::Zero(N, k);
  H = Matrix::Zero(k, L);
  if (cfg.init == "random") {
    const double scale = std::sqrt(std::max(S.mean(), 1e-30) / cfg.k);
    std::uint64_t ctr = 0;
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < N; ++i)
        W(i, j) = scale * std::abs(counter_gaussian(cfg.seed, ctr++));
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index l = 0; l < L; ++l)
        H(j, l) = scale * std::abs(counter_gaussian(cfg.seed, ctr++));
    return;
  }
  // nndsvd-like: split each singular pair into its positive or negative part
  const Eigen::Index r = std::min({N, L, k});
  Eigen::BDCSVD<Matrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& U = svd.matrixU();
  const auto& V = svd.matrixV();
  const auto& sv = svd.singularValues();
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::VectorXd u = U.col(j), v = V.col(j);
    if (j == 0) {
      u = u.cwiseAbs();
      v = v.cwiseAbs();
      W.col(0) = std::sqrt(sv[0]) * u;
      H.row(0) = std::sqrt(sv[0]) * v.transpose();
      continue;
    }
    Eigen::VectorXd up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
    Eigen::VectorXd vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
    const double mp = up.norm() * vp.norm();
    const double mn = un.norm() * vn.norm();
    Eigen::VectorXd uu, vv;
    double m;
    if (mp >= mn) {
      uu = up;
      vv = vp;
      m = mp;
    } else {
      uu = un;
      vv = vn;
      m = mn;
    }
    if (m <= 0.0) continue;  // dead column; the reseed step may revive it
    uu /= uu.norm();
    vv /= vv.norm();
    const double s = std::sqrt(sv[j] * m);
    W.col(j) = s * uu;
    H.row(j) = s * vv.transpose();
  }
  // columns beyond min(N, L) start empty and rely on reseeding
}

// Sort components by total coefficient mass, descending; ties broken by the
// first wavelength index at which the component spectrum peaks.
static void canonicalize(Matrix& W, Matrix& H) {
  const Eigen::Index k = W.cols();
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd totals = W.colwise().sum();
  std::vector<int> peak(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    H.row(j).maxCoeff(&arg);
    peak[static_cast<std::size_t>(j)] = static_cast<int>(arg);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (totals[a] != totals[b]) return totals[a] > totals[b];
    return peak[static_cast<std::size_t>(a)] < peak[static_cast<std::size_t>(b)];
  });
  Matrix W2(W.rows(), k), H2(k, H.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    W2.col(j) = W.col(order[static_cast<std::size_t>(j)]);
    H2.row(j) = H.row(order[static_cast<std::size_t>(j)]);
  }
  W = std::move(W2);
  H = std::move(H2);
}

static bool window_converged(const std::vector<double>& trace, double rel_tol,
                             int window = 10) {
  if (trace.size() <= static_cast<std::size_t>(window)) return false;
  const double a = trace[trace.size() - 1 - window];
  const double b = trace.back();
  const double denom = std::max(std::abs(a), 1e-300);
  return (a - b) / denom < rel_tol;
}

UnmixingResult fit(const Matrix& S, const UnmixingConfig& cfg) {
  cfg.validate();
  if (!S.allFinite()) throw NegativeInput("S has non-finite entries");
  if ((S.array() < 0.0).any()) throw NegativeInput("S has negative entries");
  if (S.rows() < cfg.k)
    throw ConfigInvalid("need at least k rows in S");

  Matrix Suse = S;
  if (cfg.row_max_normalize) {
    for (Eigen::Index i = 0; i < Suse.rows(); ++i) {
      const double m = Suse.row(i).maxCoeff();
      if (m > 0) Suse.row(i) /= m;
    }
  }

  UnmixingResult res;
  Matrix& W = res.W;
  Matrix& H = res.H;
  init_factors(Suse, cfg, W, H);

  const double s_norm2 = Suse.squaredNorm();
  std::vector<std::uint8_t> reseeded(static_cast<std::size_t>(cfg.k), 0);
  res.objective_trace.push_back(
      nmf_objective(Suse, W, H, cfg.lambda1, cfg.lambdaF));

  for (int it = 0; it < cfg.max_iters; ++it) {
    {
      Matrix A = W.transpose() * W;
      Matrix B = W.transpose() * Suse;
      update_H(H, A, B, cfg.lambda1, cfg.lambdaF);
    }
    {
      Matrix G = H * H.transpose();
      Matrix P = Suse * H.transpose();
      update_W(W, G, P, cfg.lambda1, cfg.lambdaF);
    }
    double obj = nmf_objective(Suse, W, H, cfg.lambda1, cfg.lambdaF);

    // Revive dead components once from the strongest residual row. Kept only
    // if the local refit actually lowers the objective.
    for (Eigen::Index j = 0; j < cfg.k; ++j) {
      if (reseeded[static_cast<std::size_t>(j)]) continue;
      if (W.col(j).lpNorm<Eigen::Infinity>() > 0 ||
          H.row(j).lpNorm<Eigen::Infinity>() > 0)
        continue;
      reseeded[static_cast<std::size_t>(j)] = 1;
      Matrix R = Suse - W * H;
      Eigen::Index best = 0;
      double best_norm = -1.0;
      for (Eigen::Index i = 0; i < R.rows(); ++i) {
        const double n = R.row(i).cwiseMax(0.0).squaredNorm();
        if (n > best_norm) {
          best_norm = n;
          best = i;
        }
      }
      if (best_norm <= 0.0) continue;
      H.row(j) = R.row(best).cwiseMax(0.0);
      {
        Matrix G = H * H.transpose();
        Matrix P = Suse * H.transpose();
        update_W(W, G, P, cfg.lambda1, cfg.lambdaF);
        Matrix A = W.transpose() * W;
        Matrix B = W.transpose() * Suse;
        update_H(H, A, B, cfg.lambda1, cfg.lambdaF);
      }
      const double obj2 = nmf_objective(Suse, W, H, cfg.lambda1, cfg.lambdaF);
      if (obj2 <= obj) {
        obj = obj2;
      } else {
        W.col(j).setZero();
        H.row(j).setZero();
        obj = nmf_objective(Suse, W, H, cfg.lambda1, cfg.lambdaF);
      }
    }

    res.objective_trace.push_back(obj);
    if (window_converged(res.objective_trace, cfg.rel_tol)) {
      res.converged = true;
      break;
    }
  }

  // Final polish of W against the fixed H, so the reported coefficients are
  // the exact minimizers of the W-subproblem (matches transform()).
  {
    Matrix G = H * H.transpose();
    Matrix P = Suse * H.transpose();
    double prev = res.objective_trace.back();
    for (int s = 0; s < 200; ++s) {
      update_W(W, G, P, cfg.lambda1, cfg.lambdaF);
      const double obj = nmf_objective(Suse, W, H, cfg.lambda1, cfg.lambdaF);
      res.objective_trace.push_back(obj);
      if (prev - obj <= 1e-13 * std::max(std::abs(prev), 1.0)) break;
      prev = obj;
    }
  }

  canonicalize(W, H);
  res.relative_error =
      s_norm2 > 0 ? (Suse - W * H).squaredNorm() / s_norm2 : 0.0;
  return res;
}

Matrix transform(const Matrix& S_new, const Matrix& H,
                 const UnmixingConfig& cfg) {
  cfg.validate();
  if (S_new.cols() != H.cols())
    throw ShapeMismatch("transform: S_new and H wavelength counts differ");
  if (!S_new.allFinite())
    throw NegativeInput("S_new has non-finite entries");
  if ((S_new.array() < 0.0).any())
    throw NegativeInput("S_new has negative entries");

  Matrix W = Matrix::Zero(S_new.rows(), H.rows());
  Matrix G = H * H.transpose();
  Matrix P = S_new * H.transpose();
  std::vector<double> trace;
  trace.push_back(nmf_objective(S_new, W, H, cfg.lambda1, cfg.lambdaF));
  for (int it = 0; it < cfg.max_iters; ++it) {
    update_W(W, G, P, cfg.lambda1, cfg.lambdaF);
    trace.push_back(nmf_objective(S_new, W, H, cfg.lambda1, cfg.lambdaF));
    if (window_converged(trace, cfg.rel_tol)) break;
  }
  return W;
}

std::vector<ComponentMatch> match_components(const Matrix& H,
                                             const ChromophoreLibrary& library) {
  const Eigen::Index k = H.rows();
  const std::size_t n = library.size();
  for (Eigen::Index j = 0; j < k; ++j)
    if (H.row(j).norm() == 0.0)
      throw ZeroSpectrum("component " + std::to_string(j) + " is zero");

  Matrix angles(k, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < k; ++j)
    for (std::size_t c = 0; c < n; ++c)
      angles(j, static_cast<Eigen::Index>(c)) = spectral_angle(
          H.row(j).transpose(), library.spectra()[c]);

  std::vector<ComponentMatch> out;
  std::vector<bool> comp_used(static_cast<std::size_t>(k), false);
  std::vector<bool> lib_used(n, false);
  const std::size_t n_pairs = std::min(static_cast<std::size_t>(k), n);
  while (out.size() < n_pairs) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index bj = -1;
    std::size_t bc = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (comp_used[static_cast<std::size_t>(j)]) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (lib_used[c]) continue;
        if (angles(j, static_cast<Eigen::Index>(c)) < best) {
          best = angles(j, static_cast<Eigen::Index>(c));
          bj = j;
          bc = c;
        }
      }
    }
    comp_used[static_cast<std::size_t>(bj)] = true;
    lib_used[bc] = true;
    out.push_back({static_cast<int>(bj), library.names()[bc], best});
  }
  std::sort(out.begin(), out.end(),
            [](const ComponentMatch& a, const ComponentMatch& b) {
              return a.component < b.component;
            });
  return out;
}

}  // namespace snerv::unmixing
