#include "snerv/statmetrics.hpp"

#include <cmath>

#include "snerv/rng.hpp"

namespace snerv::statmetrics {

static std::vector<int> all_rows(Eigen::Index n) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] =
      static_cast<int>(i);
  return rows;
}

Matrix dice_matrix(const BoolMatrix& M, BoolMatrix* defined,
                   Eigen::MatrixXi* joint_counts,
                   const std::vector<int>& rows) {
  if (M.rows() < 1) throw ShapeMismatch("dice_matrix: empty support matrix");
  const std::vector<int> use = rows.empty() ? all_rows(M.rows()) : rows;
  const Eigen::Index k = M.cols();
  Matrix out = Matrix::Zero(k, k);
  BoolMatrix def = BoolMatrix::Zero(k, k);
  Eigen::MatrixXi joint = Eigen::MatrixXi::Zero(k, k);

  std::vector<long> support(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 0; j < k; ++j)
    for (int r : use) support[static_cast<std::size_t>(j)] += (M(r, j) != 0);

  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = j; l < k; ++l) {
      long both = 0;
      for (int r : use) both += (M(r, j) != 0 && M(r, l) != 0);
      joint(j, l) = joint(l, j) = static_cast<int>(both);
      const long denom =
          support[static_cast<std::size_t>(j)] + support[static_cast<std::size_t>(l)];
      if (denom == 0) continue;  // both supports empty: 0, flagged undefined
      const double v = 2.0 * static_cast<double>(both) / denom;
      out(j, l) = out(l, j) = v;
      def(j, l) = def(l, j) = 1;
    }
  }
  if (defined) *defined = def;
  if (joint_counts) *joint_counts = joint;
  return out;
}

static bool pearson_pair(const Matrix& Z, const BoolMatrix& M,
                         const std::vector<int>& use, Eigen::Index j,
                         Eigen::Index l, const PearsonOptions& opts,
                         double* out) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  long n = 0;
  for (int r : use) {
    if (!opts.include_sentinels && !(M(r, j) != 0 && M(r, l) != 0)) continue;
    const double x = Z(r, j), y = Z(r, l);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    ++n;
  }
  if (n < opts.min_joint_support) return false;
  const double mx = sx / n, my = sy / n;
  const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
  if (vx <= 0.0 || vy <= 0.0) return false;
  const double cov = sxy / n - mx * my;
  double rho = cov / std::sqrt(vx * vy);
  if (rho > 1.0) rho = 1.0;
  if (rho < -1.0) rho = -1.0;
  *out = rho;
  return true;
}

Matrix pearson_matrix(const probmodel::StandardizedCoefficients& zc,
                      const PearsonOptions& opts, BoolMatrix* defined,
                      const std::vector<int>& rows) {
  const Matrix& Z = zc.Z;
  const BoolMatrix& M = zc.M;
  if (Z.rows() != M.rows() || Z.cols() != M.cols())
    throw ShapeMismatch("pearson_matrix: Z and M disagree");
  const std::vector<int> use = rows.empty() ? all_rows(Z.rows()) : rows;
  const Eigen::Index k = Z.cols();
  Matrix out = Matrix::Zero(k, k);
  BoolMatrix def = BoolMatrix::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = j; l < k; ++l) {
      double rho;
      if (!pearson_pair(Z, M, use, j, l, opts, &rho)) continue;
      if (j == l) rho = 1.0;
      out(j, l) = out(l, j) = rho;
      def(j, l) = def(l, j) = 1;
    }
  }
  if (defined) *defined = def;
  return out;
}

CorrelationMatrices correlation_matrices(
    const probmodel::StandardizedCoefficients& zc, const PearsonOptions& opts,
    const std::vector<int>& rows) {
  CorrelationMatrices out;
  out.dsc = dice_matrix(zc.M, &out.dsc_defined, &out.support_counts, rows);
  out.pcc = pearson_matrix(zc, opts, &out.pcc_defined, rows);
  return out;
}

CorrelationMatrices difference_matrices(const CorrelationMatrices& a,
                                        const CorrelationMatrices& b) {
  if (a.dsc.rows() != b.dsc.rows() || a.pcc.rows() != b.pcc.rows())
    throw ShapeMismatch("difference_matrices: component counts differ");
  CorrelationMatrices d;
  const Eigen::Index k = a.dsc.rows();
  d.dsc = Matrix::Zero(k, k);
  d.pcc = Matrix::Zero(k, k);
  d.dsc_defined = BoolMatrix::Zero(k, k);
  d.pcc_defined = BoolMatrix::Zero(k, k);
  d.support_counts = a.support_counts - b.support_counts;
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = 0; l < k; ++l) {
      if (a.dsc_defined(j, l) && b.dsc_defined(j, l)) {
        d.dsc(j, l) = a.dsc(j, l) - b.dsc(j, l);
        d.dsc_defined(j, l) = 1;
      }
      if (a.pcc_defined(j, l) && b.pcc_defined(j, l)) {
        d.pcc(j, l) = a.pcc(j, l) - b.pcc(j, l);
        d.pcc_defined(j, l) = 1;
      }
    }
  }
  return d;
}

ReferenceSampler fit_reference_sampler(const std::vector<RoiMask>& nerve_rois) {
  if (nerve_rois.empty())
    throw EmptyRoi("fit_reference_sampler: no ROIs given");
  double s_lat = 0, s_ax = 0, ss_lat = 0, ss_ax = 0;
  std::size_t n = 0;
  for (const auto& roi : nerve_rois) {
    std::size_t before = n;
    for (int r = 0; r < roi.height; ++r) {
      for (int c = 0; c < roi.width; ++c) {
        if (!roi.at(r, c)) continue;
        s_lat += c;
        s_ax += r;
        ss_lat += static_cast<double>(c) * c;
        ss_ax += static_cast<double>(r) * r;
        ++n;
      }
    }
    if (n == before)
      throw EmptyRoi("fit_reference_sampler: ROI '" + roi.label + "' is empty");
  }
  ReferenceSampler s;
  s.n_pixels = n;
  s.mu_lat = s_lat / n;
  s.mu_ax = s_ax / n;
  s.sigma_lat = std::sqrt(std::max(0.0, ss_lat / n - s.mu_lat * s.mu_lat));
  s.sigma_ax = std::sqrt(std::max(0.0, ss_ax / n - s.mu_ax * s.mu_ax));
  return s;
}

ReferenceSamples sample_reference_roi(const ReferenceSampler& sampler,
                                      const MultispectralStack& stack,
                                      const RoiMask& nerve_roi,
                                      std::size_t n_samples,
                                      std::uint64_t seed) {
  if (n_samples < 1)
    throw ConfigInvalid("sample_reference_roi: n_samples must be >= 1");
  if (nerve_roi.height != stack.height || nerve_roi.width != stack.width)
    throw ShapeMismatch("nerve ROI does not match stack dimensions");
  ReferenceSamples out;
  out.mask.label = "reference";
  out.mask.height = stack.height;
  out.mask.width = stack.width;
  out.mask.mask.assign(stack.n_pixels(), 0);
  const std::size_t max_attempts = 100 * n_samples;
  std::size_t accepted = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && accepted < n_samples;
       ++attempt) {
    const double lat =
        sampler.mu_lat + sampler.sigma_lat * counter_gaussian(seed, 2 * attempt);
    const double ax =
        sampler.mu_ax + sampler.sigma_ax * counter_gaussian(seed, 2 * attempt + 1);
    const long col = std::lround(lat);
    const long row = std::lround(ax);
    if (col < 0 || col >= stack.width || row < 0 || row >= stack.height)
      continue;
    if (!stack.valid(static_cast<int>(row), static_cast<int>(col))) continue;
    if (nerve_roi.at(static_cast<int>(row), static_cast<int>(col))) continue;
    out.samples.emplace_back(static_cast<int>(row), static_cast<int>(col));
    out.mask.mask[static_cast<std::size_t>(row) * stack.width + col] = 1;
    ++accepted;
  }
  if (accepted < n_samples)
    throw SamplingExhausted("accepted " + std::to_string(accepted) + " of " +
                            std::to_string(n_samples) + " requested samples");
  return out;
}

}  // namespace snerv::statmetrics
