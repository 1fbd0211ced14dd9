#include "snerv/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace snerv::clustering {

ClassEnumeration enumerate_classes(const BoolMatrix& M, const Matrix& S) {
  if (M.rows() != S.rows())
    throw ShapeMismatch("enumerate_classes: M and S row counts differ");
  if (M.cols() > 32)
    throw ShapeMismatch("enumerate_classes: more than 32 components");
  const Eigen::Index N = M.rows(), k = M.cols(), L = S.cols();

  std::map<std::uint32_t, std::vector<int>> members;
  for (Eigen::Index i = 0; i < N; ++i) {
    std::uint32_t pat = 0;
    for (Eigen::Index j = 0; j < k; ++j)
      if (M(i, j) != 0) pat |= (1u << j);
    members[pat].push_back(static_cast<int>(i));
  }

  ClassEnumeration out;
  out.class_of_row.assign(static_cast<std::size_t>(N), -1);
  for (auto& [pat, rows] : members) {
    if (pat == 0) {
      out.empty_pattern_pixels = rows;
      continue;
    }
    MixtureClass cls;
    cls.pattern = pat;
    cls.pixel_ids = rows;
    cls.count = rows.size();
    Spectrum sum = Spectrum::Zero(L);
    std::size_t used = 0;
    for (int r : rows) {
      const double n = S.row(r).norm();
      if (n == 0.0) continue;
      sum += S.row(r).transpose() / n;
      ++used;
    }
    cls.representative = used > 0 ? Spectrum(sum / static_cast<double>(used))
                                  : Spectrum(Spectrum::Zero(L));
    const int idx = static_cast<int>(out.classes.size());
    for (int r : rows) out.class_of_row[static_cast<std::size_t>(r)] = idx;
    out.classes.push_back(std::move(cls));
  }
  return out;  // std::map iteration gives ascending pattern order
}

MixtureTree build_tree(const std::vector<MixtureClass>& classes,
                       bool weighted) {
  const int n = static_cast<int>(classes.size());
  if (n < 2) throw TooFewClasses("build_tree needs at least 2 classes");

  MixtureTree tree;
  tree.leaves = classes;
  tree.weighted = weighted;

  struct Cluster {
    int node = 0;
    double weight = 0;          // Ward mass (pixels, or 1 per class)
    std::size_t pixels = 0;
    std::uint32_t min_pattern = 0;
    bool active = true;
  };
  std::vector<Cluster> cl(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cl[i] = {i, weighted ? static_cast<double>(classes[i].count) : 1.0,
             classes[i].count, classes[i].pattern, true};
  }

  // d(i, j) = (w_i w_j / (w_i + w_j)) ||r_i - r_j||^2, the in-cluster
  // variance increase of merging i and j; Lance-Williams keeps it exact.
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n),
                                     std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double sq =
          (classes[i].representative - classes[j].representative).squaredNorm();
      d[i][j] = d[j][i] = cl[i].weight * cl[j].weight /
                          (cl[i].weight + cl[j].weight) * sq;
    }
  }

  std::vector<int> slot_of_cluster;  // active slots
  double prev_height = -std::numeric_limits<double>::infinity();
  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_lo = 0, best_hi = 0;
    for (int i = 0; i < n; ++i) {
      if (!cl[i].active) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!cl[j].active) continue;
        const std::uint32_t lo = std::min(cl[i].min_pattern, cl[j].min_pattern);
        const std::uint32_t hi = std::max(cl[i].min_pattern, cl[j].min_pattern);
        const bool better =
            d[i][j] < best ||
            (d[i][j] == best && (lo < best_lo || (lo == best_lo && hi < best_hi)));
        if (better) {
          best = d[i][j];
          bi = i;
          bj = j;
          best_lo = lo;
          best_hi = hi;
        }
      }
    }
    // child with the smaller min pattern goes left
    int a = bi, b = bj;
    if (cl[b].min_pattern < cl[a].min_pattern) std::swap(a, b);

    Merge m;
    m.left = cl[a].node;
    m.right = cl[b].node;
    m.height = best;
    m.size = cl[a].pixels + cl[b].pixels;
    if (m.height < prev_height - 1e-9 * std::max(1.0, std::abs(prev_height)))
      throw Error("InvariantViolation", "Ward merge heights decreased");
    prev_height = std::max(prev_height, m.height);
    tree.merges.push_back(m);

    const double wa = cl[a].weight, wb = cl[b].weight, dab = d[bi][bj];
    for (int c = 0; c < n; ++c) {
      if (!cl[c].active || c == bi || c == bj) continue;
      const double wc = cl[c].weight;
      const double nd = ((wa + wc) * d[a][c] + (wb + wc) * d[b][c] - wc * dab) /
                        (wa + wb + wc);
      d[a][c] = d[c][a] = nd;
    }
    cl[a].node = n + step;
    cl[a].weight = wa + wb;
    cl[a].pixels = m.size;
    cl[a].min_pattern = std::min(cl[a].min_pattern, cl[b].min_pattern);
    cl[b].active = false;
  }
  return tree;
}

namespace {

struct TreeIndex {
  int n_leaves = 0;
  // children[internal t] = (left, right) node ids of node n_leaves + t
  std::vector<std::pair<int, int>> children;
  std::vector<std::uint32_t> min_pattern;  // per node id
};

TreeIndex index_tree(const MixtureTree& tree) {
  TreeIndex ti;
  ti.n_leaves = static_cast<int>(tree.leaves.size());
  const int total = ti.n_leaves + static_cast<int>(tree.merges.size());
  ti.min_pattern.assign(static_cast<std::size_t>(total), 0);
  for (int i = 0; i < ti.n_leaves; ++i)
    ti.min_pattern[i] = tree.leaves[static_cast<std::size_t>(i)].pattern;
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const auto& m = tree.merges[t];
    ti.children.emplace_back(m.left, m.right);
    ti.min_pattern[ti.n_leaves + t] =
        std::min(ti.min_pattern[static_cast<std::size_t>(m.left)],
                 ti.min_pattern[static_cast<std::size_t>(m.right)]);
  }
  return ti;
}

void collect_leaves(const TreeIndex& ti, int node, std::vector<int>* out) {
  if (node < ti.n_leaves) {
    out->push_back(node);
    return;
  }
  auto [l, r] = ti.children[static_cast<std::size_t>(node - ti.n_leaves)];
  if (ti.min_pattern[static_cast<std::size_t>(r)] <
      ti.min_pattern[static_cast<std::size_t>(l)])
    std::swap(l, r);
  collect_leaves(ti, l, out);
  collect_leaves(ti, r, out);
}

}  // namespace

std::vector<int> leaf_order(const MixtureTree& tree) {
  if (tree.merges.empty()) return {0};
  const TreeIndex ti = index_tree(tree);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(ti.n_leaves));
  collect_leaves(ti, ti.n_leaves + static_cast<int>(tree.merges.size()) - 1,
                 &order);
  return order;
}

SpectralFingerprint fingerprint(const MixtureTree& tree,
                                const ClassEnumeration& enumeration,
                                const std::vector<int>& roi_rows,
                                const std::string& label) {
  SpectralFingerprint fp;
  fp.label = label;
  fp.leaves = leaf_order(tree);
  std::vector<std::size_t> counts(tree.leaves.size(), 0);
  std::size_t total = 0;
  for (int r : roi_rows) {
    const int cls = enumeration.class_of_row[static_cast<std::size_t>(r)];
    if (cls < 0) {
      ++fp.n_unexplained;
      continue;
    }
    ++counts[static_cast<std::size_t>(cls)];
    ++total;
  }
  if (total == 0)
    throw EmptyRoi("fingerprint: no pixels with a nonempty pattern in ROI");
  fp.n_pixels = total;
  fp.weights.reserve(fp.leaves.size());
  for (int leaf : fp.leaves)
    fp.weights.push_back(static_cast<double>(counts[static_cast<std::size_t>(leaf)]) /
                         static_cast<double>(total));
  return fp;
}

double total_variation_distance(const SpectralFingerprint& a,
                                const SpectralFingerprint& b) {
  if (a.weights.size() != b.weights.size() || a.leaves != b.leaves)
    throw ShapeMismatch("fingerprints are over different trees");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.weights.size(); ++i)
    tv += std::abs(a.weights[i] - b.weights[i]);
  return 0.5 * tv;
}

namespace {

std::vector<int> assignment_from_roots(const MixtureTree& tree,
                                       const std::vector<int>& root_of_leaf) {
  // renumber cluster ids by first appearance along the dendrogram leaf order
  const auto order = leaf_order(tree);
  std::map<int, int> renumber;
  for (int leaf : order)
    if (!renumber.count(root_of_leaf[static_cast<std::size_t>(leaf)]))
      renumber[root_of_leaf[static_cast<std::size_t>(leaf)]] =
          static_cast<int>(renumber.size());
  std::vector<int> out(root_of_leaf.size());
  for (std::size_t i = 0; i < root_of_leaf.size(); ++i)
    out[i] = renumber[root_of_leaf[i]];
  return out;
}

std::vector<int> cut_by_merge_count(const MixtureTree& tree,
                                    std::size_t n_merges) {
  const int n = static_cast<int>(tree.leaves.size());
  std::vector<int> parent(static_cast<std::size_t>(n) + tree.merges.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (std::size_t t = 0; t < n_merges; ++t) {
    const auto& m = tree.merges[t];
    const int node = n + static_cast<int>(t);
    parent[static_cast<std::size_t>(find(m.left))] = node;
    parent[static_cast<std::size_t>(find(m.right))] = node;
  }
  std::vector<int> roots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = find(i);
  return assignment_from_roots(tree, roots);
}

}  // namespace

std::vector<int> cut_tree(const MixtureTree& tree, int n_clusters) {
  const int n = static_cast<int>(tree.leaves.size());
  if (n_clusters < 1 || n_clusters > n)
    throw InvalidCut("n_clusters must be in [1, " + std::to_string(n) + "]");
  return cut_by_merge_count(tree, static_cast<std::size_t>(n - n_clusters));
}

std::vector<int> cut_tree_height(const MixtureTree& tree, double height) {
  std::size_t n_merges = 0;
  while (n_merges < tree.merges.size() &&
         tree.merges[n_merges].height <= height)
    ++n_merges;
  return cut_by_merge_count(tree, n_merges);
}

LeafCorrelations leaf_correlations(
    const MixtureTree& tree, const std::vector<int>& leaf_indices,
    const probmodel::StandardizedCoefficients& zc,
    const std::vector<int>& roi_rows, const std::vector<int>& reference_rows,
    const statmetrics::PearsonOptions& opts) {
  if (leaf_indices.empty())
    throw InvalidCut("leaf_correlations: no leaves selected");
  std::uint32_t common = 0xffffffffu;
  std::vector<int> member_rows;
  for (int li : leaf_indices) {
    const auto& leaf = tree.leaves.at(static_cast<std::size_t>(li));
    common &= leaf.pattern;
    member_rows.insert(member_rows.end(), leaf.pixel_ids.begin(),
                       leaf.pixel_ids.end());
  }
  std::sort(member_rows.begin(), member_rows.end());

  LeafCorrelations out;
  for (int j = 0; j < static_cast<int>(zc.Z.cols()); ++j)
    if (common & (1u << j)) out.components.push_back(j);
  const Eigen::Index kc = static_cast<Eigen::Index>(out.components.size());

  probmodel::StandardizedCoefficients sub;
  sub.Z.resize(zc.Z.rows(), kc);
  sub.M.resize(zc.M.rows(), kc);
  for (Eigen::Index c = 0; c < kc; ++c) {
    sub.Z.col(c) = zc.Z.col(out.components[static_cast<std::size_t>(c)]);
    sub.M.col(c) = zc.M.col(out.components[static_cast<std::size_t>(c)]);
  }

  auto intersect = [&](const std::vector<int>& rows) {
    std::vector<int> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> out_rows;
    std::set_intersection(member_rows.begin(), member_rows.end(),
                          sorted.begin(), sorted.end(),
                          std::back_inserter(out_rows));
    return out_rows;
  };
  std::vector<int> rows_roi = intersect(roi_rows);
  std::vector<int> rows_ref = intersect(reference_rows);

  auto restricted = [&](const std::vector<int>& rows) {
    statmetrics::CorrelationMatrices cm;
    if (rows.empty()) {
      cm.dsc = Matrix::Zero(kc, kc);
      cm.pcc = Matrix::Zero(kc, kc);
      cm.dsc_defined = BoolMatrix::Zero(kc, kc);
      cm.pcc_defined = BoolMatrix::Zero(kc, kc);
      cm.support_counts = Eigen::MatrixXi::Zero(static_cast<int>(kc),
                                                static_cast<int>(kc));
      return cm;
    }
    return statmetrics::correlation_matrices(sub, opts, rows);
  };
  out.roi = restricted(rows_roi);
  out.reference = restricted(rows_ref);
  out.difference = statmetrics::difference_matrices(out.roi, out.reference);
  return out;
}

MeanShape cluster_mean_shape(const Matrix& S,
                             const std::vector<int>& member_rows) {
  if (member_rows.empty())
    throw EmptyCluster("cluster_mean_shape: no member pixels");
  const Eigen::Index L = S.cols();
  Spectrum sum = Spectrum::Zero(L), sumsq = Spectrum::Zero(L);
  std::size_t used = 0;
  for (int r : member_rows) {
    const double n = S.row(r).norm();
    if (n == 0.0) continue;
    const Spectrum s = S.row(r).transpose() / n;
    sum += s;
    sumsq += s.cwiseProduct(s);
    ++used;
  }
  if (used == 0)
    throw EmptyCluster("cluster_mean_shape: only zero spectra in cluster");
  MeanShape out;
  out.n = used;
  out.mean = sum / static_cast<double>(used);
  Spectrum var =
      sumsq / static_cast<double>(used) - out.mean.cwiseProduct(out.mean);
  out.std = var.cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace snerv::clustering
