#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "features.hpp"
#include "random.hpp"
#include "types.hpp"

namespace discourse {

struct SvmConfig {
  double C = 1.0;
  double tol = 1e-3;   // KKT tolerance
  double eps = 1e-12;  // smallest alpha change that counts as progress
  std::size_t max_passes = 5;
  std::size_t max_iterations = 1'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(C > 0)) throw Error(ErrorKind::InvalidConfig, "C must be > 0");
    if (!(tol > 0)) throw Error(ErrorKind::InvalidConfig, "tol must be > 0");
    if (!(eps > 0)) throw Error(ErrorKind::InvalidConfig, "eps must be > 0");
    if (max_passes < 1) throw Error(ErrorKind::InvalidConfig, "max_passes must be >= 1");
  }

  bool operator==(const SvmConfig&) const = default;
};

// Linear soft-margin SVM, decision value f(x) = w.x + b.
struct SvmBinaryModel {
  std::vector<double> w;
  double b = 0;
  std::vector<double> alphas;  // empty for models loaded from disk
  std::vector<int> labels;     // training labels in {-1, +1}
  bool converged = false;
  std::size_t iterations = 0;  // successful pair updates

  double decision(const SparseVector& x) const { return dot(std::span<const double>(w), x) + b; }
};

// Dual objective sum(alpha) - 1/2 ||sum alpha_i y_i x_i||^2 for a linear kernel.
inline double dual_objective(std::span<const SparseVector> X, std::span<const int> y,
                             std::span<const double> alphas, std::size_t dims) {
  std::vector<double> w(dims, 0.0);
  double sum = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sum += alphas[i];
    for (std::size_t k = 0; k < X[i].index.size(); ++k) w[X[i].index[k]] += alphas[i] * y[i] * X[i].value[k];
  }
  double norm = 0;
  for (double v : w) norm += v * v;
  return sum - 0.5 * norm;
}

namespace smo_detail {

// Iterations stop once the maximal violating pair gap falls below tol times
// this factor, so the returned model sits well inside the KKT tolerance.
inline constexpr double kRefineFactor = 1e-3;

// Pairwise SMO on the dual
//   min 1/2 a'Qa - sum a,  Q_ij = y_i y_j <x_i, x_j>,  0 <= a <= C,  y'a = 0.
// Each step picks the maximal violating pair (i from I_up with the largest
// -y grad, j from I_low with the smallest), solves the two-variable problem
// analytically and clips it to the box. The gap m - M is independent of b.
class Solver {
 public:
  Solver(std::span<const SparseVector> X, std::span<const int> y, std::size_t dims, const SvmConfig& cfg)
      : X_(X), y_(y), cfg_(cfg), n_(X.size()), alpha_(n_, 0.0), w_(dims, 0.0), grad_(n_, -1.0), order_(n_) {
    self_dot_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) self_dot_[i] = dot(X_[i], X_[i]);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    Rng rng(cfg.seed);
    rng.shuffle(std::span<std::size_t>(order_));  // scan order decides ties
  }

  SvmBinaryModel run() {
    const double stop = cfg_.tol * kRefineFactor;
    std::size_t idle = 0;
    while (updates_ < cfg_.max_iterations) {
      auto [i, j, gap] = select();
      if (gap <= stop) break;
      const double moved = step(i, j);
      idle = moved > cfg_.eps ? 0 : idle + 1;
      if (idle >= cfg_.max_passes * n_) break;
    }
    return finish();
  }

 private:
  bool in_up(std::size_t i) const { return y_[i] > 0 ? alpha_[i] < cfg_.C : alpha_[i] > 0; }
  bool in_low(std::size_t i) const { return y_[i] > 0 ? alpha_[i] > 0 : alpha_[i] < cfg_.C; }

  std::tuple<std::size_t, std::size_t, double> select() const {
    double m = -std::numeric_limits<double>::infinity(), M = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (auto k : order_) {
      const double v = -y_[k] * grad_[k];
      if (in_up(k) && v > m) m = v, bi = k;
      if (in_low(k) && v < M) M = v, bj = k;
    }
    return {bi, bj, m - M};
  }

  // Returns the largest multiplier change.
  double step(std::size_t i, std::size_t j) {
    const double yi = y_[i], yj = y_[j], C = cfg_.C;
    const double kij = dot(X_[i], X_[j]);
    double eta = self_dot_[i] + self_dot_[j] - 2 * kij;
    if (eta <= 0) eta = 1e-12;  // collinear pair; the box decides the step
    // Moving a_i by yi t and a_j by -yj t keeps y'a fixed and lowers the
    // objective at rate -(yi grad_i - yj grad_j) per unit t.
    double t = (-yi * grad_[i] + yj * grad_[j]) / eta;
    const double ti = yi > 0 ? C - alpha_[i] : alpha_[i];
    const double tj = yj > 0 ? alpha_[j] : C - alpha_[j];
    t = std::clamp(t, 0.0, std::min(ti, tj));
    const double ai = std::clamp(alpha_[i] + yi * t, 0.0, C);
    const double aj = std::clamp(alpha_[j] - yj * t, 0.0, C);
    const double di = (ai - alpha_[i]) * yi, dj = (aj - alpha_[j]) * yj;
    alpha_[i] = ai;
    alpha_[j] = aj;
    for (std::size_t k = 0; k < X_[i].index.size(); ++k) w_[X_[i].index[k]] += di * X_[i].value[k];
    for (std::size_t k = 0; k < X_[j].index.size(); ++k) w_[X_[j].index[k]] += dj * X_[j].value[k];
    for (std::size_t k = 0; k < n_; ++k) grad_[k] += y_[k] * (di * dot(X_[i], X_[k]) + dj * dot(X_[j], X_[k]));
    ++updates_;
    return std::max(std::abs(di), std::abs(dj));
  }

  SvmBinaryModel finish() {
    // Rebuild w and the gradient from the multipliers to drop drift.
    std::fill(w_.begin(), w_.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < X_[i].index.size(); ++k) w_[X_[i].index[k]] += alpha_[i] * y_[i] * X_[i].value[k];
    for (std::size_t i = 0; i < n_; ++i) grad_[i] = y_[i] * dot(std::span<const double>(w_), X_[i]) - 1.0;

    // Any b in [m, M] satisfies KKT up to the remaining gap. Free vectors pin
    // it; their mean is used, kept inside the interval.
    auto [i, j, gap] = select();
    const double m = -y_[i] * grad_[i], M = -y_[j] * grad_[j];
    double free_sum = 0;
    std::size_t free_count = 0;
    for (std::size_t k = 0; k < n_; ++k)
      if (alpha_[k] > 0 && alpha_[k] < cfg_.C) {
        free_sum += -y_[k] * grad_[k];
        ++free_count;
      }
    const double lo = std::min(m, M), hi = std::max(m, M);
    const double b = free_count ? std::clamp(free_sum / static_cast<double>(free_count), lo, hi) : 0.5 * (m + M);

    SvmBinaryModel out;
    out.w = w_;
    out.b = b;
    out.alphas = alpha_;
    out.labels.assign(y_.begin(), y_.end());
    out.converged = gap <= cfg_.tol;
    out.iterations = updates_;
    return out;
  }

  std::span<const SparseVector> X_;
  std::span<const int> y_;
  SvmConfig cfg_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> w_;
  std::vector<double> grad_;  // (Qa)_i - 1 = y_i w.x_i - 1
  std::vector<double> self_dot_;
  std::vector<std::size_t> order_;
  std::size_t updates_ = 0;
};

}  // namespace smo_detail

// Trains a linear soft-margin SVM with sequential minimal optimization.
// Labels must be -1 or +1 with both present; indices must be < dims.
inline SvmBinaryModel smo_train(std::span<const SparseVector> X, std::span<const int> y, std::size_t dims,
                                const SvmConfig& cfg) {
  cfg.validate();
  if (X.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "X and y differ in length");
  if (X.size() < 2) throw Error(ErrorKind::DimensionMismatch, "need at least two examples");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1)
      pos = true;
    else if (y[i] == -1)
      neg = true;
    else
      throw Error(ErrorKind::DimensionMismatch, "labels must be -1 or +1");
    if (X[i].index.size() != X[i].value.size())
      throw Error(ErrorKind::DimensionMismatch, "sparse vector index/value length mismatch");
    for (auto idx : X[i].index)
      if (idx >= dims) throw Error(ErrorKind::DimensionMismatch, "feature index out of range");
  }
  if (!pos || !neg) throw Error(ErrorKind::SingleClassInput, "both labels are required");
  return smo_detail::Solver(X, y, dims, cfg).run();
}

inline SvmBinaryModel smo_train(std::span<const BinaryVector> X, std::span<const int> y, std::size_t dims,
                                const SvmConfig& cfg) {
  std::vector<SparseVector> sparse(X.begin(), X.end());
  return smo_train(std::span<const SparseVector>(sparse), y, dims, cfg);
}

// --- one-vs-one ------------------------------------------------------------------

struct PairModel {
  DiscourseClass positive;  // earlier in class order; label +1
  DiscourseClass negative;
  SvmBinaryModel model;
};

struct SvmMulticlassModel {
  std::vector<DiscourseClass> classes;  // training class order
  std::vector<PairModel> pairs;
  FeatureSpace features;
  SvmConfig config;
};

struct SvmPrediction {
  DiscourseClass label = DiscourseClass::Phatic;
  std::array<std::size_t, kNumClasses> votes{};
};

// Trains one binary model per unordered pair of the classes present, on that
// pair's examples only. Pairwise trainings are independent; jobs > 1 runs them
// on separate threads without changing the result.
inline SvmMulticlassModel train_multiclass(std::span<const BinaryVector> X,
                                           std::span<const DiscourseClass> labels, FeatureSpace features,
                                           const SvmConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  if (X.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "X and labels differ in length");
  SvmMulticlassModel m;
  m.features = std::move(features);
  m.config = cfg;
  for (auto c : kAllClasses)
    if (std::find(labels.begin(), labels.end(), c) != labels.end()) m.classes.push_back(c);
  if (m.classes.size() < 2) throw Error(ErrorKind::SingleClassInput, "need at least two classes");

  std::vector<std::pair<DiscourseClass, DiscourseClass>> pairs;
  for (std::size_t a = 0; a < m.classes.size(); ++a)
    for (std::size_t b = a + 1; b < m.classes.size(); ++b) pairs.emplace_back(m.classes[a], m.classes[b]);

  m.pairs.resize(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  auto train_pair = [&](std::size_t p) {
    try {
      std::vector<SparseVector> px;
      std::vector<int> py;
      for (std::size_t i = 0; i < X.size(); ++i) {
        if (labels[i] == pairs[p].first) {
          px.emplace_back(X[i]);
          py.push_back(1);
        } else if (labels[i] == pairs[p].second) {
          px.emplace_back(X[i]);
          py.push_back(-1);
        }
      }
      SvmConfig pc = cfg;
      pc.seed = splitmix64(cfg.seed + p);
      m.pairs[p] = {pairs[p].first, pairs[p].second,
                    smo_train(std::span<const SparseVector>(px), std::span<const int>(py), m.features.size(), pc)};
    } catch (...) {
      errors[p] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    for (std::size_t p = 0; p < pairs.size(); ++p) train_pair(p);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t p = 0; p < pairs.size(); ++p) pool.emplace_back(train_pair, p);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return m;
}

// Each pair votes for its positive class when the decision value is >= 0.
// Most votes wins; ties go to the class earlier in training order.
inline SvmPrediction predict_svm(const SvmMulticlassModel& m, const BinaryVector& v) {
  SvmPrediction out;
  const SparseVector x(v);
  for (const auto& p : m.pairs) {
    auto winner = p.model.decision(x) >= 0 ? p.positive : p.negative;
    ++out.votes[index_of(winner)];
  }
  std::size_t best_votes = 0;
  bool first = true;
  for (auto c : m.classes) {
    if (first || out.votes[index_of(c)] > best_votes) {
      best_votes = out.votes[index_of(c)];
      out.label = c;
      first = false;
    }
  }
  return out;
}

inline SvmPrediction predict_svm(const SvmMulticlassModel& m, const TokenStream& tokens) {
  return predict_svm(m, vectorize(tokens, m.features));
}

// --- serialization -----------------------------------------------------------------

inline constexpr int kSvmModelFormatVersion = 1;

inline nlohmann::ordered_json to_json(const SvmConfig& c) {
  nlohmann::ordered_json j;
  j["C"] = c.C;
  j["tol"] = c.tol;
  j["eps"] = c.eps;
  j["max_passes"] = c.max_passes;
  j["max_iterations"] = c.max_iterations;
  j["seed"] = c.seed;
  return j;
}

inline nlohmann::ordered_json to_json(const SvmMulticlassModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "discourse.svm_model";
  j["version"] = kSvmModelFormatVersion;
  j["config"] = to_json(m.config);
  auto classes = nlohmann::ordered_json::array();
  for (auto c : m.classes) classes.push_back(std::string(to_string(c)));
  j["classes"] = classes;
  j["features"] = m.features.names();
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& p : m.pairs) {
    nlohmann::ordered_json pj;
    pj["positive"] = std::string(to_string(p.positive));
    pj["negative"] = std::string(to_string(p.negative));
    pj["b"] = p.model.b;
    auto w = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < p.model.w.size(); ++i)
      if (p.model.w[i] != 0.0) w.push_back(nlohmann::ordered_json::array({i, p.model.w[i]}));
    pj["w"] = std::move(w);
    pj["converged"] = p.model.converged;
    pairs.push_back(std::move(pj));
  }
  j["pairs"] = std::move(pairs);
  return j;
}

inline SvmMulticlassModel svm_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "discourse.svm_model") throw Error(ErrorKind::MalformedRecord, "not an SVM model file");
    if (j.at("version").get<int>() != kSvmModelFormatVersion)
      throw Error(ErrorKind::MalformedRecord, "unsupported SVM model version");
    SvmMulticlassModel m;
    const auto& cj = j.at("config");
    m.config.C = cj.at("C").get<double>();
    m.config.tol = cj.at("tol").get<double>();
    m.config.eps = cj.at("eps").get<double>();
    m.config.max_passes = cj.at("max_passes").get<std::size_t>();
    m.config.max_iterations = cj.at("max_iterations").get<std::size_t>();
    m.config.seed = cj.at("seed").get<std::uint64_t>();
    auto parse = [](const nlohmann::json& s) {
      auto c = parse_class(s.get<std::string>());
      if (!c) throw Error(ErrorKind::MalformedRecord, "unknown class " + s.dump());
      return *c;
    };
    for (const auto& c : j.at("classes")) m.classes.push_back(parse(c));
    m.features = FeatureSpace::from_names(j.at("features").get<std::vector<std::string>>());
    for (const auto& pj : j.at("pairs")) {
      PairModel p{parse(pj.at("positive")), parse(pj.at("negative")), {}};
      p.model.b = pj.at("b").get<double>();
      p.model.w.assign(m.features.size(), 0.0);
      for (const auto& e : pj.at("w")) {
        auto idx = e.at(0).get<std::size_t>();
        if (idx >= m.features.size()) throw Error(ErrorKind::MalformedRecord, "weight index out of range");
        p.model.w[idx] = e.at(1).get<double>();
      }
      p.model.converged = pj.at("converged").get<bool>();
      m.pairs.push_back(std::move(p));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, e.what());
  }
}

}  // namespace discourse
