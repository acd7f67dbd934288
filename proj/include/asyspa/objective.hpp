#pragma once

// Node-local convex objectives and their subgradient oracles.
//
// Supported kinds:
//   abs_deviation      f(x) = sum_d |x_d - c_d|
//   quadratic          f(x) = 0.5 * ||x - c||^2
//   logistic_multiclass  multiclass cross-entropy over a dataset shard with
//                        an L2 term (gamma/2)||X||_F^2
//   hinge_svm          multiclass hinge loss over a shard + same L2 term
//
// For the classifier kinds the decision variable is an n_f x n_c matrix
// stored flat, column-major by class: x[j*n_f + r] = X[r][j].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyspa/errors.hpp"
#include "asyspa/rng.hpp"

namespace asyspa {

using Vec = std::vector<double>;

// --- Dataset -----------------------------------------------------------------

struct Dataset {
  int n_features = 0;
  int n_classes = 0;
  std::vector<double> features;  // row-major, n_rows x n_features
  std::vector<int> labels;       // 0-based class ids
  bool normalized = false;
  std::set<int> categorical;  // columns excluded from normalization

  int rows() const { return static_cast<int>(labels.size()); }
  const double* row(int r) const { return features.data() + static_cast<std::size_t>(r) * n_features; }
};

// Standardize non-categorical feature columns in place (mean 0, population
// std 1).  Zero-variance columns are left unchanged and reported back.
inline std::vector<int> normalize_features(Dataset& ds) {
  if (ds.normalized) throw std::logic_error("normalize_features: dataset already normalized");
  std::vector<int> zero_variance;
  const int n = ds.rows();
  for (int c = 0; c < ds.n_features; ++c) {
    if (ds.categorical.count(c)) continue;
    double mean = 0;
    for (int r = 0; r < n; ++r) mean += ds.features[static_cast<std::size_t>(r) * ds.n_features + c];
    mean /= n;
    double var = 0;
    for (int r = 0; r < n; ++r) {
      double d = ds.features[static_cast<std::size_t>(r) * ds.n_features + c] - mean;
      var += d * d;
    }
    var /= n;
    if (var == 0.0) {
      zero_variance.push_back(c);
      continue;
    }
    double inv = 1.0 / std::sqrt(var);
    for (int r = 0; r < n; ++r) {
      auto& v = ds.features[static_cast<std::size_t>(r) * ds.n_features + c];
      v = (v - mean) * inv;
    }
  }
  ds.normalized = true;
  return zero_variance;
}

// CSV with header f0,...,f{n_f-1},label; labels are 0-based ints.
inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
  for (int c = 0; c < ds.n_features; ++c) os << "f" << c << ",";
  os << "label\n";
  os.precision(17);
  for (int r = 0; r < ds.rows(); ++r) {
    const double* x = ds.row(r);
    for (int c = 0; c < ds.n_features; ++c) os << x[c] << ",";
    os << ds.labels[r] << "\n";
  }
}

inline Dataset read_dataset_csv(std::istream& is, int n_classes = 0) {
  Dataset ds;
  std::string line;
  if (!std::getline(is, line)) throw config_error("dataset csv: empty file");
  {
    std::istringstream hs(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.empty() || cols.back() != "label")
      throw config_error("dataset csv: last header column must be 'label'");
    ds.n_features = static_cast<int>(cols.size()) - 1;
    for (int c = 0; c < ds.n_features; ++c)
      if (cols[c] != "f" + std::to_string(c))
        throw config_error("dataset csv: expected header column f" + std::to_string(c) +
                           ", got '" + cols[c] + "'");
    if (ds.n_features == 0) throw config_error("dataset csv: no feature columns");
  }
  int lineno = 1;
  int max_label = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c < ds.n_features; ++c) {
      if (!std::getline(ls, cell, ','))
        throw config_error("dataset csv: too few columns on line " + std::to_string(lineno));
      try {
        ds.features.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw config_error("dataset csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      }
    }
    if (!std::getline(ls, cell, ','))
      throw config_error("dataset csv: missing label on line " + std::to_string(lineno));
    int lab = 0;
    try {
      lab = std::stoi(cell);
    } catch (const std::exception&) {
      throw config_error("dataset csv: bad label '" + cell + "' on line " + std::to_string(lineno));
    }
    if (lab < 0) throw config_error("dataset csv: negative label on line " + std::to_string(lineno));
    ds.labels.push_back(lab);
    max_label = std::max(max_label, lab);
  }
  if (ds.labels.empty()) throw config_error("dataset csv: no data rows");
  ds.n_classes = n_classes > 0 ? n_classes : max_label + 1;
  if (max_label >= ds.n_classes)
    throw config_error("dataset csv: label " + std::to_string(max_label) +
                       " exceeds declared class count");
  return ds;
}

// --- Objective ---------------------------------------------------------------

enum class ObjectiveKind { abs_deviation, quadratic, logistic_multiclass, hinge_svm };

inline std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::abs_deviation: return "abs_deviation";
    case ObjectiveKind::quadratic: return "quadratic";
    case ObjectiveKind::logistic_multiclass: return "logistic_multiclass";
    case ObjectiveKind::hinge_svm: return "hinge_svm";
  }
  return "?";
}

inline ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "abs_deviation") return ObjectiveKind::abs_deviation;
  if (s == "quadratic") return ObjectiveKind::quadratic;
  if (s == "logistic_multiclass") return ObjectiveKind::logistic_multiclass;
  if (s == "hinge_svm") return ObjectiveKind::hinge_svm;
  throw config_error("objective: unknown kind '" + s + "'");
}

class Objective {
 public:
  // Center-based kinds.
  Objective(ObjectiveKind kind, Vec center) : kind_(kind), center_(std::move(center)) {
    if (kind != ObjectiveKind::abs_deviation && kind != ObjectiveKind::quadratic)
      throw std::invalid_argument("Objective: this constructor is for center-based kinds");
    if (center_.empty()) throw std::invalid_argument("Objective: empty center");
  }

  // Dataset-shard kinds.  `rows` indexes into `data`.
  Objective(ObjectiveKind kind, std::shared_ptr<const Dataset> data, std::vector<int> rows,
            double gamma)
      : kind_(kind), data_(std::move(data)), rows_(std::move(rows)), gamma_(gamma) {
    if (kind != ObjectiveKind::logistic_multiclass && kind != ObjectiveKind::hinge_svm)
      throw std::invalid_argument("Objective: this constructor is for dataset kinds");
    if (!data_) throw std::invalid_argument("Objective: null dataset");
    if (data_->n_classes < 2) throw std::invalid_argument("Objective: need at least 2 classes");
    if (gamma_ < 0) throw std::invalid_argument("Objective: gamma must be >= 0");
    for (int r : rows_)
      if (r < 0 || r >= data_->rows()) throw std::invalid_argument("Objective: shard row out of range");
  }

  ObjectiveKind kind() const { return kind_; }
  const Vec& center() const { return center_; }
  double gamma() const { return gamma_; }
  const std::vector<int>& shard_rows() const { return rows_; }
  std::shared_ptr<const Dataset> dataset() const { return data_; }

  int dim() const {
    if (data_) return data_->n_features * data_->n_classes;
    return static_cast<int>(center_.size());
  }

  double value(const Vec& x) const {
    check_dim(x);
    switch (kind_) {
      case ObjectiveKind::abs_deviation: {
        double f = 0;
        for (std::size_t d = 0; d < x.size(); ++d) f += std::fabs(x[d] - center_[d]);
        return f;
      }
      case ObjectiveKind::quadratic: {
        double f = 0;
        for (std::size_t d = 0; d < x.size(); ++d) {
          double t = x[d] - center_[d];
          f += t * t;
        }
        return 0.5 * f;
      }
      case ObjectiveKind::logistic_multiclass:
        return logistic_value(x);
      case ObjectiveKind::hinge_svm:
        return hinge_value(x);
    }
    return 0;
  }

  // Writes one element of the subdifferential at x into g.  At kinks the
  // zero-selecting element is used (sign(0) = 0; inactive hinge at the
  // boundary).
  void subgradient(const Vec& x, Vec& g) const {
    check_dim(x);
    g.assign(x.size(), 0.0);
    switch (kind_) {
      case ObjectiveKind::abs_deviation:
        for (std::size_t d = 0; d < x.size(); ++d) {
          double t = x[d] - center_[d];
          g[d] = (t > 0) - (t < 0);
        }
        return;
      case ObjectiveKind::quadratic:
        for (std::size_t d = 0; d < x.size(); ++d) g[d] = x[d] - center_[d];
        return;
      case ObjectiveKind::logistic_multiclass:
        logistic_subgradient(x, g);
        return;
      case ObjectiveKind::hinge_svm:
        hinge_subgradient(x, g);
        return;
    }
  }

  Vec subgradient(const Vec& x) const {
    Vec g;
    subgradient(x, g);
    return g;
  }

 private:
  void check_dim(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("Objective: argument has dimension " +
                                  std::to_string(x.size()) + ", expected " +
                                  std::to_string(dim()));
  }

  // scores_j = sum_r X[r][j] * s_r for one instance.
  void scores(const Vec& x, const double* s, Vec& sc) const {
    const int nf = data_->n_features, nc = data_->n_classes;
    sc.assign(nc, 0.0);
    for (int j = 0; j < nc; ++j) {
      const double* col = x.data() + static_cast<std::size_t>(j) * nf;
      double acc = 0;
      for (int r = 0; r < nf; ++r) acc += col[r] * s[r];
      sc[j] = acc;
    }
  }

  double logistic_value(const Vec& x) const {
    Vec sc;
    double f = 0;
    for (int r : rows_) {
      scores(x, data_->row(r), sc);
      double mx = *std::max_element(sc.begin(), sc.end());
      double lse = 0;
      for (double v : sc) lse += std::exp(v - mx);
      lse = mx + std::log(lse);
      f += lse - sc[data_->labels[r]];
    }
    return f + 0.5 * gamma_ * sqnorm(x);
  }

  void logistic_subgradient(const Vec& x, Vec& g) const {
    const int nf = data_->n_features, nc = data_->n_classes;
    Vec sc, p(nc);
    for (int r : rows_) {
      const double* s = data_->row(r);
      scores(x, s, sc);
      double mx = *std::max_element(sc.begin(), sc.end());
      double z = 0;
      for (int j = 0; j < nc; ++j) {
        p[j] = std::exp(sc[j] - mx);
        z += p[j];
      }
      for (int j = 0; j < nc; ++j) {
        double coef = p[j] / z - (j == data_->labels[r] ? 1.0 : 0.0);
        double* col = g.data() + static_cast<std::size_t>(j) * nf;
        for (int rr = 0; rr < nf; ++rr) col[rr] += coef * s[rr];
      }
    }
    for (std::size_t d = 0; d < x.size(); ++d) g[d] += gamma_ * x[d];
  }

  double hinge_value(const Vec& x) const {
    Vec sc;
    double f = 0;
    for (int r : rows_) {
      scores(x, data_->row(r), sc);
      int lab = data_->labels[r];
      for (int j = 0; j < data_->n_classes; ++j) {
        if (j == lab) continue;
        f += std::max(0.0, sc[j] - sc[lab] + 1.0);
      }
    }
    return f + 0.5 * gamma_ * sqnorm(x);
  }

  void hinge_subgradient(const Vec& x, Vec& g) const {
    const int nf = data_->n_features;
    Vec sc;
    for (int r : rows_) {
      const double* s = data_->row(r);
      scores(x, s, sc);
      int lab = data_->labels[r];
      for (int j = 0; j < data_->n_classes; ++j) {
        if (j == lab) continue;
        if (sc[j] - sc[lab] + 1.0 > 0.0) {
          double* cj = g.data() + static_cast<std::size_t>(j) * nf;
          double* cl = g.data() + static_cast<std::size_t>(lab) * nf;
          for (int rr = 0; rr < nf; ++rr) {
            cj[rr] += s[rr];
            cl[rr] -= s[rr];
          }
        }
      }
    }
    for (std::size_t d = 0; d < x.size(); ++d) g[d] += gamma_ * x[d];
  }

  static double sqnorm(const Vec& v) {
    double s = 0;
    for (double t : v) s += t * t;
    return s;
  }

  ObjectiveKind kind_;
  Vec center_;
  std::shared_ptr<const Dataset> data_;
  std::vector<int> rows_;
  double gamma_ = 0;
};

// Max relative deviation between the subgradient and central finite
// differences, max_d |fd_d - g_d| / (1 + |g_d|).  Only meaningful where f is
// differentiable (logistic everywhere; others away from kinks).
inline double check_subgradient_fd(const Objective& obj, const Vec& x, double h = 1e-6) {
  Vec g = obj.subgradient(x);
  Vec xp = x, xm = x;
  double worst = 0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    xp[d] = x[d] + h;
    xm[d] = x[d] - h;
    double fd = (obj.value(xp) - obj.value(xm)) / (2 * h);
    worst = std::max(worst, std::fabs(fd - g[d]) / (1.0 + std::fabs(g[d])));
    xp[d] = x[d];
    xm[d] = x[d];
  }
  return worst;
}

// Round-robin shard of {0..n_rows-1} for node `node` out of `n_nodes`.
inline std::vector<int> shard_rows(int n_rows, int n_nodes, int node) {
  std::vector<int> rows;
  for (int r = node; r < n_rows; r += n_nodes) rows.push_back(r);
  return rows;
}

// Synthetic linearly-separable-with-noise multiclass data.
inline Dataset generate_dataset(int n_rows, int n_features, int n_classes, std::uint64_t seed,
                                double noise = 0.3) {
  if (n_rows < 1) throw config_error("gen-data: need at least 1 row");
  if (n_features < 1) throw config_error("gen-data: need at least 1 feature");
  if (n_classes < 2) throw config_error("gen-data: need at least 2 classes");
  Dataset ds;
  ds.n_features = n_features;
  ds.n_classes = n_classes;
  SplitMix64 wrng(derive_stream(seed, 1, 0));
  // True class weight vectors.
  std::vector<double> w(static_cast<std::size_t>(n_classes) * n_features);
  for (auto& v : w) v = wrng.next_uniform(-1.0, 1.0);
  SplitMix64 xrng(derive_stream(seed, 2, 0));
  SplitMix64 nrng(derive_stream(seed, 3, 0));
  ds.features.resize(static_cast<std::size_t>(n_rows) * n_features);
  ds.labels.resize(n_rows);
  Vec sc(n_classes);
  for (int r = 0; r < n_rows; ++r) {
    double* row = ds.features.data() + static_cast<std::size_t>(r) * n_features;
    for (int c = 0; c < n_features; ++c) row[c] = xrng.next_uniform(-1.0, 1.0);
    for (int j = 0; j < n_classes; ++j) {
      const double* wj = w.data() + static_cast<std::size_t>(j) * n_features;
      double s = 0;
      for (int c = 0; c < n_features; ++c) s += wj[c] * row[c];
      sc[j] = s + noise * (nrng.next_unit() - 0.5);
    }
    ds.labels[r] =
        static_cast<int>(std::max_element(sc.begin(), sc.end()) - sc.begin());
  }
  return ds;
}

}  // namespace asyspa
