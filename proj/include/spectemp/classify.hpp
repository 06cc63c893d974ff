#pragma once

// From-scratch classifiers over mean-pooled token matrices, stratified k-fold
// cross-validation, macro metrics and the condensed stability indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spectemp/error.hpp"
#include "spectemp/fusion.hpp"
#include "spectemp/parallel.hpp"
#include "spectemp/rng.hpp"
#include "spectemp/stats.hpp"

namespace spectemp::classify {

inline constexpr int kClasses = 5;

using Vector = std::vector<double>;

/// s_i: column means over the token rows of one sample.
inline Vector mean_pool(const fusion::Matrix& x) {
  Vector s(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) s[c] += x(r, c);
  if (x.rows > 0)
    for (double& v : s) v /= static_cast<double>(x.rows);
  return s;
}

/// In-place numerically stable softmax.
inline void softmax_inplace(std::span<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

struct Prediction {
  int label = 0;
  Vector scores;  // per-class probabilities or normalized scores
};

// ---------------------------------------------------------------------------
// Softmax regression head: logits = W s + b, cross-entropy + lambda ||theta||^2.

struct SoftmaxParams {
  int epochs = 300;
  double eta = 0.05;
  double lambda = 1e-4;
  std::size_t batch_size = 32;
  int n_classes = kClasses;
};

struct SoftmaxModel {
  int n_classes = kClasses;
  std::size_t dim = 0;
  std::vector<double> W;  // n_classes x dim, row-major
  std::vector<double> b;
  double lambda = 0.0;
  double eta = 0.0;

  SoftmaxModel() = default;
  SoftmaxModel(int k, std::size_t d) : n_classes(k), dim(d), W(static_cast<std::size_t>(k) * d, 0.0), b(k, 0.0) {}

  Vector logits(std::span<const double> s) const {
    Vector z(b);
    for (int c = 0; c < n_classes; ++c) {
      const double* w = W.data() + static_cast<std::size_t>(c) * dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) acc += w[j] * s[j];
      z[static_cast<std::size_t>(c)] += acc;
    }
    return z;
  }

  Prediction predict(std::span<const double> s) const {
    Prediction p;
    p.scores = logits(s);
    softmax_inplace(p.scores);
    p.label = argmax(p.scores);
    return p;
  }
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> dW;
  std::vector<double> db;
};

/// Mean cross-entropy over `rows` plus lambda * (||W||^2 + ||b||^2), with gradient.
inline LossGrad loss_and_gradient(const SoftmaxModel& m, const std::vector<Vector>& X, std::span<const int> y,
                                  std::span<const std::size_t> rows) {
  LossGrad g;
  g.dW.assign(m.W.size(), 0.0);
  g.db.assign(m.b.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i : rows) {
    auto p = m.logits(X[i]);
    softmax_inplace(p);
    const auto yi = static_cast<std::size_t>(y[i]);
    g.loss -= std::log(std::max(p[yi], 1e-300)) * inv;
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double delta = (p[c] - (c == yi ? 1.0 : 0.0)) * inv;
      g.db[c] += delta;
      double* dw = g.dW.data() + c * m.dim;
      for (std::size_t j = 0; j < m.dim; ++j) dw[j] += delta * X[i][j];
    }
  }
  for (std::size_t k = 0; k < m.W.size(); ++k) {
    g.loss += m.lambda * m.W[k] * m.W[k];
    g.dW[k] += 2.0 * m.lambda * m.W[k];
  }
  for (std::size_t k = 0; k < m.b.size(); ++k) {
    g.loss += m.lambda * m.b[k] * m.b[k];
    g.db[k] += 2.0 * m.lambda * m.b[k];
  }
  return g;
}

inline void require_two_classes(std::span<const int> y, int n_classes) {
  std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
  for (int v : y) {
    require(v >= 0 && v < n_classes, ErrorKind::DegenerateLabels, "label out of range");
    seen[static_cast<std::size_t>(v)] = true;
  }
  require(std::count(seen.begin(), seen.end(), true) >= 2, ErrorKind::DegenerateLabels,
          "training needs at least 2 classes");
}

/// Minibatch gradient descent from zero initialization; batches are reshuffled
/// every epoch from the seeded generator.
inline SoftmaxModel softmax_train(const std::vector<Vector>& X, std::span<const int> y, const SoftmaxParams& p,
                                  std::uint64_t seed) {
  require(!X.empty() && X.size() == y.size(), ErrorKind::LengthMismatch, "features and labels differ in length");
  require_two_classes(y, p.n_classes);
  const std::size_t d = X.front().size();
  for (const auto& x : X) require(x.size() == d, ErrorKind::LengthMismatch, "inconsistent feature dimension");

  SoftmaxModel m(p.n_classes, d);
  m.lambda = p.lambda;
  m.eta = p.eta;
  Rng rng(seed);
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, p.batch_size);
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> batch(order.data() + start, std::min(bs, order.size() - start));
      const auto g = loss_and_gradient(m, X, y, batch);
      for (std::size_t k = 0; k < m.W.size(); ++k) m.W[k] -= p.eta * g.dW[k];
      for (std::size_t k = 0; k < m.b.size(); ++k) m.b[k] -= p.eta * g.db[k];
    }
  }
  return m;
}

inline Prediction softmax_predict(const SoftmaxModel& m, std::span<const double> s) { return m.predict(s); }

// ---------------------------------------------------------------------------
// k-nearest neighbours.

struct KnnModel {
  std::vector<Vector> X;
  std::vector<int> y;
  std::size_t k = 5;
  int n_classes = kClasses;
};

inline KnnModel knn_fit(std::vector<Vector> X, std::vector<int> y, std::size_t k, int n_classes = kClasses) {
  require(!X.empty(), ErrorKind::EmptyTrain, "kNN needs training points");
  require(X.size() == y.size(), ErrorKind::LengthMismatch, "features and labels differ in length");
  require(k >= 1, ErrorKind::InvalidArgument, "k must be >= 1");
  return {std::move(X), std::move(y), k, n_classes};
}

/// Majority vote over the k nearest (Euclidean); ties go to the larger
/// inverse-distance weight, then the lower class. Scores are normalized
/// inverse-distance weights.
inline Prediction knn_predict(const KnnModel& m, std::span<const double> s) {
  require(!m.X.empty(), ErrorKind::EmptyTrain, "kNN needs training points");
  const std::size_t k = std::min(m.k, m.X.size());
  std::vector<std::pair<double, std::size_t>> dist(m.X.size());
  for (std::size_t i = 0; i < m.X.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double d = m.X[i][j] - s[j];
      acc += d * d;
    }
    dist[i] = {acc, i};
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  const auto nc = static_cast<std::size_t>(m.n_classes);
  std::vector<std::size_t> votes(nc, 0);
  Prediction p;
  p.scores.assign(nc, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto c = static_cast<std::size_t>(m.y[dist[i].second]);
    ++votes[c];
    p.scores[c] += 1.0 / (std::sqrt(dist[i].first) + 1e-12);
  }
  const double total = std::accumulate(p.scores.begin(), p.scores.end(), 0.0);
  for (double& v : p.scores) v /= total;
  std::size_t best = 0;
  for (std::size_t c = 1; c < nc; ++c)
    if (votes[c] > votes[best] || (votes[c] == votes[best] && p.scores[c] > p.scores[best])) best = c;
  p.label = static_cast<int>(best);
  return p;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes.

struct GnbModel {
  int n_classes = kClasses;
  std::vector<Vector> mean;
  std::vector<Vector> var;
  std::vector<double> log_prior;  // -inf for classes absent from training
};

inline GnbModel gnb_fit(const std::vector<Vector>& X, std::span<const int> y, int n_classes = kClasses) {
  require(!X.empty(), ErrorKind::EmptyTrain, "naive Bayes needs training points");
  require(X.size() == y.size(), ErrorKind::LengthMismatch, "features and labels differ in length");
  const std::size_t d = X.front().size();
  const auto nc = static_cast<std::size_t>(n_classes);
  GnbModel m;
  m.n_classes = n_classes;
  m.mean.assign(nc, Vector(d, 0.0));
  m.var.assign(nc, Vector(d, 0.0));
  std::vector<std::size_t> count(nc, 0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    ++count[c];
    for (std::size_t j = 0; j < d; ++j) m.mean[c][j] += X[i][j];
  }
  for (std::size_t c = 0; c < nc; ++c)
    if (count[c] > 0)
      for (double& v : m.mean[c]) v /= static_cast<double>(count[c]);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    for (std::size_t j = 0; j < d; ++j) m.var[c][j] += (X[i][j] - m.mean[c][j]) * (X[i][j] - m.mean[c][j]);
  }
  m.log_prior.assign(nc, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < nc; ++c) {
    for (double& v : m.var[c]) v = std::max(count[c] > 0 ? v / static_cast<double>(count[c]) : 1.0, 1e-9);
    if (count[c] > 0) m.log_prior[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(X.size()));
  }
  return m;
}

inline Prediction gnb_predict(const GnbModel& m, std::span<const double> s) {
  constexpr double log_two_pi = 1.8378770664093454835606594728112;
  const auto nc = static_cast<std::size_t>(m.n_classes);
  Prediction p;
  p.scores.assign(nc, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < nc; ++c) {
    if (!std::isfinite(m.log_prior[c])) continue;
    double ll = m.log_prior[c];
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double z = s[j] - m.mean[c][j];
      ll -= 0.5 * (z * z / m.var[c][j] + std::log(m.var[c][j]) + log_two_pi);
    }
    p.scores[c] = ll;
  }
  softmax_inplace(p.scores);
  p.label = argmax(p.scores);
  return p;
}

// ---------------------------------------------------------------------------
// Cross-validation and metrics.

/// Test-index sets of a stratified split. Each class is shuffled and dealt
/// round-robin, continuing the deal where the previous class stopped so fold
/// sizes stay balanced as well.
inline std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t n_splits,
                                                              std::uint64_t seed) {
  require(n_splits >= 2, ErrorKind::InvalidArgument, "need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(n_splits);
  std::size_t cursor = 0;
  for (auto& [label, idx] : by_class) {
    require(idx.size() >= n_splits, ErrorKind::ClassTooSmall,
            "class " + std::to_string(label) + " has fewer samples than folds");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) folds[cursor++ % n_splits].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
};

/// One-vs-rest ROC AUC from the rank statistic with mid-ranks for ties.
/// Returns NaN when either side is empty.
inline double roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) {
      rank_sum += rank[i];
      ++n_pos;
    }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

/// Accuracy, macro-F1 over classes 0..n_classes-1 (a class with no true or
/// predicted samples contributes F1 = 0), macro one-vs-rest AUC over the
/// classes present in y_true.
inline Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                               const std::vector<Vector>& scores, int n_classes = kClasses) {
  require(y_true.size() == y_pred.size() && y_true.size() == scores.size(), ErrorKind::LengthMismatch,
          "metric inputs differ in length");
  require(!y_true.empty(), ErrorKind::LengthMismatch, "no predictions");
  const std::size_t n = y_true.size();
  Metrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += y_true[i] == y_pred[i];
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  double f1_sum = 0.0, auc_sum = 0.0;
  int auc_classes = 0;
  std::vector<double> col(n);
  std::vector<bool> pos(n);
  for (int c = 0; c < n_classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += y_true[i] == c && y_pred[i] == c;
      fp += y_true[i] != c && y_pred[i] == c;
      fn += y_true[i] == c && y_pred[i] != c;
    }
    const std::size_t den = 2 * tp + fp + fn;
    f1_sum += den > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(den) : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
      require(scores[i].size() == static_cast<std::size_t>(n_classes), ErrorKind::LengthMismatch,
              "score vector has the wrong number of classes");
      col[i] = scores[i][static_cast<std::size_t>(c)];
      pos[i] = y_true[i] == c;
    }
    const double auc = roc_auc(col, pos);
    if (!std::isnan(auc)) {
      auc_sum += auc;
      ++auc_classes;
    }
  }
  out.macro_f1 = f1_sum / n_classes;
  out.macro_auc = auc_classes > 0 ? auc_sum / auc_classes : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// ---------------------------------------------------------------------------
// Stability indices over a models x metrics table.

struct StabilityCell {
  double mean = 0.0;
  double std = 0.0;  // population
  double cv = 0.0;   // NaN when mean == 0
  double balanced = 0.0;
};

/// BS = mu * (1 - CV).
inline double balanced_score(double mean, double cv) { return mean * (1.0 - cv); }

inline StabilityCell stability_cell(std::span<const double> column) {
  require(!column.empty(), ErrorKind::InvalidArgument, "empty stability column");
  StabilityCell s;
  s.mean = stats::mean(column);
  s.std = stats::stddev(column);
  if (s.mean == 0.0) {
    s.cv = std::numeric_limits<double>::quiet_NaN();
    s.balanced = std::numeric_limits<double>::quiet_NaN();
  } else {
    s.cv = s.std / s.mean;
    s.balanced = balanced_score(s.mean, s.cv);
  }
  return s;
}

/// table[model][metric] -> one cell per metric column.
inline std::vector<StabilityCell> stability_report(const std::vector<std::vector<double>>& table) {
  require(!table.empty() && !table.front().empty(), ErrorKind::InvalidArgument, "empty stability table");
  const std::size_t cols = table.front().size();
  std::vector<StabilityCell> out;
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> column;
    for (const auto& row : table) {
      require(row.size() == cols, ErrorKind::LengthMismatch, "ragged stability table");
      column.push_back(row[c]);
    }
    out.push_back(stability_cell(column));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validated evaluation of a representation.

enum class ModelKind { Softmax, Knn, Gnb };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Softmax: return "softmax";
    case ModelKind::Knn: return "knn";
    case ModelKind::Gnb: return "gnb";
  }
  return "?";
}

struct FoldResult {
  std::string model;
  std::string method;
  std::size_t fold_index = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
};

struct CvParams {
  std::size_t n_splits = 5;
  SoftmaxParams softmax;
  std::size_t knn_k = 5;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  bool standardize_pooled = true;
};

/// Column-wise zero-mean, unit-variance scaling of pooled vectors.
struct Scaler {
  Vector mean;
  Vector scale;

  static Scaler fit(const std::vector<Vector>& X) {
    require(!X.empty(), ErrorKind::EmptyTrain, "no rows to fit a scaler on");
    Scaler s;
    const std::size_t d = X.front().size();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (const auto& x : X)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += x[j];
    for (double& m : s.mean) m /= static_cast<double>(X.size());
    for (const auto& x : X)
      for (std::size_t j = 0; j < d; ++j) s.scale[j] += (x[j] - s.mean[j]) * (x[j] - s.mean[j]);
    for (double& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(X.size()));
      if (!(v > 1e-12)) v = 1.0;
    }
    return s;
  }

  void apply(std::vector<Vector>& X) const {
    for (auto& x : X)
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / scale[j];
  }
};

/// Runs every model on every fold. HSTF feature columns are standardized per
/// fold on the training part before pooling; the pooled vectors are then
/// standardized again, also fitted on the training part. Result order: model-major, then fold.
inline std::vector<FoldResult> cross_validate(const fusion::Representation& rep, std::span<const ModelKind> models,
                                              const std::string& method, const CvParams& p) {
  require(!rep.samples.empty(), ErrorKind::EmptyTrain, "representation holds no samples");
  std::vector<int> labels;
  for (const auto& s : rep.samples) labels.push_back(s.label);
  const auto folds = stratified_kfold(labels, p.n_splits, p.seed);

  std::vector<FoldResult> results(models.size() * folds.size());
  parallel_for(folds.size(), p.threads, [&](std::size_t f) {
    std::vector<char> is_test(rep.samples.size(), 0);
    for (std::size_t i : folds[f]) is_test[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < rep.samples.size(); ++i)
      if (!is_test[i]) train.push_back(i);

    std::vector<Vector> pooled(rep.samples.size());
    if (rep.kind == fusion::Kind::HSTF) {
      const auto z = fusion::ZStandardizer::fit(rep, train);
      for (std::size_t i = 0; i < rep.samples.size(); ++i) pooled[i] = mean_pool(z.apply(rep.samples[i].x));
    } else {
      for (std::size_t i = 0; i < rep.samples.size(); ++i) pooled[i] = mean_pool(rep.samples[i].x);
    }
    std::vector<Vector> Xtr, Xte;
    std::vector<int> ytr, yte;
    for (std::size_t i : train) {
      Xtr.push_back(pooled[i]);
      ytr.push_back(labels[i]);
    }
    for (std::size_t i : folds[f]) {
      Xte.push_back(pooled[i]);
      yte.push_back(labels[i]);
    }
    if (p.standardize_pooled) {
      const auto scaler = Scaler::fit(Xtr);
      scaler.apply(Xtr);
      scaler.apply(Xte);
    }

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      std::vector<int> pred;
      std::vector<Vector> scores;
      auto collect = [&](const Prediction& pr) {
        pred.push_back(pr.label);
        scores.push_back(pr.scores);
      };
      switch (models[mi]) {
        case ModelKind::Softmax: {
          const auto m = softmax_train(Xtr, ytr, p.softmax, derive_seed(p.seed, 1000 + f));
          for (const auto& x : Xte) collect(m.predict(x));
          break;
        }
        case ModelKind::Knn: {
          const auto m = knn_fit(Xtr, ytr, p.knn_k);
          for (const auto& x : Xte) collect(knn_predict(m, x));
          break;
        }
        case ModelKind::Gnb: {
          const auto m = gnb_fit(Xtr, ytr);
          for (const auto& x : Xte) collect(gnb_predict(m, x));
          break;
        }
      }
      const auto met = compute_metrics(yte, pred, scores);
      results[mi * folds.size() + f] = {to_string(models[mi]), method, f, met.accuracy, met.macro_f1,
                                        met.macro_auc};
    }
  });
  return results;
}

}  // namespace spectemp::classify
