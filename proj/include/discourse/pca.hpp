#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "analytics.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "util.hpp"

namespace discourse {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  std::size_t sweeps = 0;
  double off_norm = 0;
};

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Cyclic Jacobi rotations on a symmetric matrix.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-10, std::size_t max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  Matrix v = Matrix::identity(n);
  EigenDecomposition out;
  while (out.sweeps < max_sweeps && off_diagonal_norm(a) >= tol) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  out.off_norm = off_diagonal_norm(a);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a(order[j], order[j]));
    // largest-magnitude entry positive; first one wins ties
    std::size_t big = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v(i, order[j])) > std::abs(v(big, order[j]))) big = i;
    const double sign = v(big, order[j]) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, order[j]);
  }
  return out;
}

struct PcaResult {
  std::vector<std::string> variables;  // retained, in input order
  std::vector<std::string> dropped;    // zero-variance columns
  std::vector<std::string> row_ids;
  std::vector<double> eigenvalues;
  Matrix loadings;     // variables x components
  Matrix scores;       // rows x components
  Matrix correlation;  // of the retained variables
  std::vector<double> explained;
  std::vector<std::string> warnings;

  std::size_t components() const noexcept { return eigenvalues.size(); }
};

// PCA of the correlation matrix. Columns are standardized with the
// population standard deviation.
inline PcaResult pca(const DataTable& t) {
  const std::size_t n = t.data.rows();
  if (n < 3) throw Error(ErrorKind::TooFewRows, "need at least 3 rows, got " + std::to_string(n));
  auto corr = pearson_matrix(t);

  PcaResult out;
  out.row_ids = t.row_ids;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (corr.undefined[c]) {
      out.dropped.push_back(t.columns[c]);
      out.warnings.push_back("ZeroVarianceColumn: " + t.columns[c] + " dropped");
    } else {
      keep.push_back(c);
      out.variables.push_back(t.columns[c]);
    }
  }
  const std::size_t p = keep.size();
  if (p == 0) throw Error(ErrorKind::DegenerateInput, "every column has zero variance");

  Matrix z(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t c = keep[j];
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += t.data(r, c);
    mean /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t r = 0; r < n; ++r) ss += (t.data(r, c) - mean) * (t.data(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r) z(r, j) = (t.data(r, c) - mean) / sd;
  }

  out.correlation = Matrix(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) out.correlation(a, b) = corr.r(keep[a], keep[b]);

  auto eig = jacobi_eigen(out.correlation);
  out.eigenvalues = std::move(eig.values);
  out.loadings = std::move(eig.vectors);
  out.scores = z * out.loadings;
  for (double l : out.eigenvalues) out.explained.push_back(l / static_cast<double>(p));
  return out;
}

inline PcaResult pca(std::span<const GroupFeatureRow> rows) { return pca(to_table(rows)); }

// --- CSV export -------------------------------------------------------------------

inline std::string eigen_summary_csv(const PcaResult& p) {
  std::string out = "# correlation-matrix PCA, population variance\n";
  for (const auto& d : p.dropped) out += "# dropped zero-variance column: " + d + "\n";
  out += "component,eigenvalue,explained,cumulative\n";
  double cum = 0;
  for (std::size_t j = 0; j < p.components(); ++j) {
    cum += p.explained[j];
    out += "PC" + std::to_string(j + 1) + "," + util::fixed(p.eigenvalues[j], 8) + "," +
           util::fixed(p.explained[j], 6) + "," + util::fixed(cum, 6) + "\n";
  }
  return out;
}

struct BiplotCsv {
  std::string arrows;
  std::string scores;
};

// Arrow coordinates are variable-component correlations, loading * sqrt(eigenvalue).
inline std::pair<double, double> biplot_arrow(const PcaResult& p, std::size_t variable) {
  auto scale = [&](std::size_t j) { return std::sqrt(std::max(0.0, p.eigenvalues[j])); };
  return {p.loadings(variable, 0) * scale(0), p.loadings(variable, 1) * scale(1)};
}

inline BiplotCsv export_biplot(const PcaResult& p, std::span<const GroupFeatureRow> rows) {
  if (p.components() < 2) throw Error(ErrorKind::DegenerateInput, "biplot needs two components");
  const std::string header = "# explained_variance PC1=" + util::fixed(p.explained[0], 6) +
                             " PC2=" + util::fixed(p.explained[1], 6) +
                             " PC1+PC2=" + util::fixed(p.explained[0] + p.explained[1], 6) + "\n";
  BiplotCsv out;
  out.arrows = header + "variable,loading_pc1,loading_pc2,pc1,pc2\n";
  for (std::size_t v = 0; v < p.variables.size(); ++v) {
    auto [x, y] = biplot_arrow(p, v);
    out.arrows += p.variables[v] + "," + util::fixed(p.loadings(v, 0), 8) + "," + util::fixed(p.loadings(v, 1), 8) +
                  "," + util::fixed(x, 8) + "," + util::fixed(y, 8) + "\n";
  }
  out.scores = header + "group_id,dd_id,pc1,pc2\n";
  for (std::size_t r = 0; r < p.scores.rows(); ++r) {
    std::string dd = r < rows.size() ? rows[r].dd_id : "";
    std::string gid = r < p.row_ids.size() ? p.row_ids[r] : "";
    out.scores += util::csv_escape(gid) + "," + util::csv_escape(dd) + "," + util::fixed(p.scores(r, 0), 8) + "," +
                  util::fixed(p.scores(r, 1), 8) + "\n";
  }
  return out;
}

}  // namespace discourse
