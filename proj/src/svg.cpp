#include "snerv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace snerv::svg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// diverging blue-white-red
std::string cell_color(double v, double vmin, double vmax) {
  double t = (v - vmin) / std::max(vmax - vmin, 1e-12);
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(40 + u * (255 - 40));
    g = static_cast<int>(80 + u * (255 - 80));
    b = 255;
  } else {
    const double u = (t - 0.5) / 0.5;
    r = 255;
    g = static_cast<int>(255 - u * (255 - 60));
    b = static_cast<int>(255 - u * (255 - 40));
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

void heatmap_body(std::ostringstream& out, double x0, double y0,
                  const Matrix& values, const BoolMatrix& defined,
                  const std::vector<std::string>& labels,
                  const std::string& title, double vmin, double vmax,
                  double cell) {
  const Eigen::Index k = values.rows();
  out << "<text x='" << fmt(x0 + k * cell / 2) << "' y='" << fmt(y0 - 26)
      << "' text-anchor='middle' font-size='14'>" << title << "</text>\n";
  for (Eigen::Index j = 0; j < k; ++j) {
    out << "<text x='" << fmt(x0 + (j + 0.5) * cell) << "' y='" << fmt(y0 - 8)
        << "' text-anchor='middle' font-size='10'>" << labels[j] << "</text>\n";
    out << "<text x='" << fmt(x0 - 8) << "' y='" << fmt(y0 + (j + 0.65) * cell)
        << "' text-anchor='end' font-size='10'>" << labels[j] << "</text>\n";
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double x = x0 + j * cell, y = y0 + i * cell;
      if (defined(i, j)) {
        out << "<rect x='" << fmt(x) << "' y='" << fmt(y) << "' width='"
            << fmt(cell) << "' height='" << fmt(cell) << "' fill='"
            << cell_color(values(i, j), vmin, vmax)
            << "' stroke='#ffffff'/>\n";
        out << "<text x='" << fmt(x + cell / 2) << "' y='"
            << fmt(y + cell / 2 + 3)
            << "' text-anchor='middle' font-size='9'>" << fmt3(values(i, j))
            << "</text>\n";
      } else {
        out << "<rect x='" << fmt(x) << "' y='" << fmt(y) << "' width='"
            << fmt(cell) << "' height='" << fmt(cell)
            << "' fill='#d9d9d9' stroke='#ffffff'/>\n";
        out << "<text x='" << fmt(x + cell / 2) << "' y='"
            << fmt(y + cell / 2 + 3)
            << "' text-anchor='middle' font-size='9' fill='#666666'>"
               "n/a</text>\n";
      }
    }
  }
}

}  // namespace

std::string heatmap(const Matrix& values, const BoolMatrix& defined,
                    const std::vector<std::string>& labels,
                    const std::string& title, double vmin, double vmax) {
  const double cell = 40.0;
  const Eigen::Index k = values.rows();
  const double w = 80 + k * cell + 20, h = 60 + k * cell + 20;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << fmt(w)
      << "' height='" << fmt(h) << "'>\n";
  heatmap_body(out, 70, 50, values, defined, labels, title, vmin, vmax, cell);
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_pair(const Matrix& a, const BoolMatrix& a_def,
                         const Matrix& b, const BoolMatrix& b_def,
                         const std::vector<std::string>& labels,
                         const std::string& title_a, const std::string& title_b,
                         double vmin, double vmax) {
  const double cell = 40.0;
  const Eigen::Index k = a.rows();
  const double block = 70 + k * cell + 30;
  const double w = 2 * block + 20, h = 60 + k * cell + 20;
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << fmt(w)
      << "' height='" << fmt(h) << "'>\n";
  heatmap_body(out, 70, 50, a, a_def, labels, title_a, vmin, vmax, cell);
  heatmap_body(out, 70 + block, 50, b, b_def, labels, title_b, vmin, vmax,
               cell);
  out << "</svg>\n";
  return out.str();
}

std::string line_plot(const std::vector<LineSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  const double W = 640, H = 420, ml = 60, mr = 140, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double band = s.band.empty() ? 0.0 : s.band[i];
      ymin = std::min(ymin, s.y[i] - band);
      ymax = std::max(ymax, s.y[i] + band);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
                                  "#bcbd22", "#17becf"};
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
      << H << "'>\n";
  out << "<text x='" << fmt(W / 2) << "' y='20' text-anchor='middle' "
         "font-size='14'>" << title << "</text>\n";
  out << "<line x1='" << fmt(ml) << "' y1='" << fmt(H - mb) << "' x2='"
      << fmt(W - mr) << "' y2='" << fmt(H - mb) << "' stroke='#333'/>\n";
  out << "<line x1='" << fmt(ml) << "' y1='" << fmt(mt) << "' x2='" << fmt(ml)
      << "' y2='" << fmt(H - mb) << "' stroke='#333'/>\n";
  out << "<text x='" << fmt((W - mr + ml) / 2) << "' y='" << fmt(H - 12)
      << "' text-anchor='middle' font-size='11'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << fmt((H - mb + mt) / 2)
      << "' font-size='11' transform='rotate(-90 16 " << fmt((H - mb + mt) / 2)
      << ")' text-anchor='middle'>" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* color = palette[s % 10];
    if (!sr.band.empty()) {
      std::ostringstream path;
      for (std::size_t i = 0; i < sr.x.size(); ++i)
        path << (i == 0 ? "M" : "L") << fmt(px(sr.x[i])) << " "
             << fmt(py(sr.y[i] + sr.band[i]));
      for (std::size_t i = sr.x.size(); i-- > 0;)
        path << "L" << fmt(px(sr.x[i])) << " " << fmt(py(sr.y[i] - sr.band[i]));
      out << "<path d='" << path.str() << "Z' fill='" << color
          << "' opacity='0.15'/>\n";
    }
    out << "<polyline fill='none' stroke='" << color << "' points='";
    for (std::size_t i = 0; i < sr.x.size(); ++i)
      out << fmt(px(sr.x[i])) << "," << fmt(py(sr.y[i])) << " ";
    out << "'/>\n";
    out << "<text x='" << fmt(W - mr + 10) << "' y='" << fmt(mt + 16.0 * s + 10)
        << "' font-size='11' fill='" << color << "'>" << sr.label
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string polar_dendrogram(
    const clustering::MixtureTree& tree,
    const std::vector<clustering::SpectralFingerprint>& fingerprints,
    const std::string& title) {
  const auto order = clustering::leaf_order(tree);
  const int n = static_cast<int>(order.size());
  const double W = 900, H = 560, cx = W / 2, cy = H - 60;
  const double R = 340, r0 = 40;

  std::vector<int> pos_of_leaf(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pos_of_leaf[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  auto angle_of_pos = [&](double p) {
    return 3.14159265358979323846 * (1.0 - (p + 0.5) / n);
  };

  double hmax = 0;
  for (const auto& m : tree.merges) hmax = std::max(hmax, m.height);
  if (hmax <= 0) hmax = 1;
  auto radius_of_height = [&](double h) { return R - (R - r0) * (h / hmax); };

  // node -> (angle position, height)
  const int total = n + static_cast<int>(tree.merges.size());
  std::vector<double> pos(static_cast<std::size_t>(total), 0.0);
  std::vector<double> hgt(static_cast<std::size_t>(total), 0.0);
  for (int i = 0; i < n; ++i)
    pos[static_cast<std::size_t>(i)] = pos_of_leaf[static_cast<std::size_t>(i)];
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
      << H << "'>\n";
  out << "<text x='" << fmt(cx) << "' y='24' text-anchor='middle' "
         "font-size='14'>" << title << "</text>\n";

  auto pt = [&](double p, double radius, double* x, double* y) {
    const double a = angle_of_pos(p);
    *x = cx + radius * std::cos(a);
    *y = cy - radius * std::sin(a);
  };
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const auto& m = tree.merges[t];
    const int node = n + static_cast<int>(t);
    const double pl = pos[static_cast<std::size_t>(m.left)];
    const double pr = pos[static_cast<std::size_t>(m.right)];
    pos[static_cast<std::size_t>(node)] = 0.5 * (pl + pr);
    hgt[static_cast<std::size_t>(node)] = m.height;
    const double rp = radius_of_height(m.height);
    double x1, y1, x2, y2, x3, y3, x4, y4;
    pt(pl, radius_of_height(hgt[static_cast<std::size_t>(m.left)]), &x1, &y1);
    pt(pl, rp, &x2, &y2);
    pt(pr, radius_of_height(hgt[static_cast<std::size_t>(m.right)]), &x3, &y3);
    pt(pr, rp, &x4, &y4);
    out << "<line x1='" << fmt(x1) << "' y1='" << fmt(y1) << "' x2='" << fmt(x2)
        << "' y2='" << fmt(y2) << "' stroke='#555'/>\n";
    out << "<line x1='" << fmt(x3) << "' y1='" << fmt(y3) << "' x2='" << fmt(x4)
        << "' y2='" << fmt(y4) << "' stroke='#555'/>\n";
    out << "<path d='M" << fmt(x2) << " " << fmt(y2) << " A" << fmt(rp) << " "
        << fmt(rp) << " 0 0 " << (pl < pr ? 1 : 0) << " " << fmt(x4) << " "
        << fmt(y4) << "' fill='none' stroke='#555'/>\n";
  }

  // fingerprints along the rim
  static const char* colors[] = {"#ff7f0e", "#1f77b4", "#2ca02c", "#d62728"};
  double wmax = 1e-12;
  for (const auto& fp : fingerprints)
    for (double w : fp.weights) wmax = std::max(wmax, w);
  for (std::size_t f = 0; f < fingerprints.size(); ++f) {
    const auto& fp = fingerprints[f];
    out << "<polyline fill='none' stroke='" << colors[f % 4] << "' points='";
    for (int i = 0; i < n; ++i) {
      const double radius = R + 8 + 60.0 * (fp.weights[static_cast<std::size_t>(i)] / wmax);
      double x, y;
      pt(i, radius, &x, &y);
      out << fmt(x) << "," << fmt(y) << " ";
    }
    out << "'/>\n";
    out << "<text x='20' y='" << fmt(40.0 + 16.0 * f) << "' font-size='11' fill='"
        << colors[f % 4] << "'>" << fp.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace snerv::svg
