#pragma once

// One-step-ahead state predictor: ridge linear autoregression over the last k
// observed states plus an exogenous load factor.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "elastic/errors.hpp"
#include "json.hpp"

namespace elastic {

using State3 = std::array<double, 3>;

struct PredictorSample {
  std::vector<State3> window;  // oldest first, length k
  double exogenous = 0.0;
  State3 next{};
};

struct PredictorModel {
  int k = 1;
  double lambda = 0.0;
  // weights[c] has 3k + 1 entries: the window flattened oldest-first
  // (s_{t-k}[0..2], ..., s_{t-1}[0..2]) then the exogenous factor.
  std::array<std::vector<double>, 3> weights{};
  State3 bias{};

  std::size_t feature_count() const noexcept { return 3 * static_cast<std::size_t>(k) + 1; }

  // Index of (lag, component) in a weight vector; lag 1 is the most recent state.
  std::size_t slot(int lag, int component) const noexcept {
    return 3 * static_cast<std::size_t>(k - lag) + static_cast<std::size_t>(component);
  }

  bool operator==(const PredictorModel&) const = default;
};

class HistoryWindow {
 public:
  explicit HistoryWindow(int k = 1) : k_(k) {
    if (k < 1) throw InputError("history window length must be >= 1");
  }

  void push(const State3& s) {
    states_.push_back(s);
    if (states_.size() > static_cast<std::size_t>(k_)) states_.pop_front();
  }
  void set_exogenous(double x) noexcept { exogenous_ = std::clamp(x, 0.0, 1.0); }
  void clear() noexcept {
    states_.clear();
    exogenous_ = 0.0;
  }

  int k() const noexcept { return k_; }
  bool warmed_up() const noexcept { return states_.size() == static_cast<std::size_t>(k_); }
  bool empty() const noexcept { return states_.empty(); }
  double exogenous() const noexcept { return exogenous_; }
  const std::deque<State3>& states() const noexcept { return states_; }

 private:
  int k_;
  std::deque<State3> states_;
  double exogenous_ = 0.0;
};

namespace detail {

inline void append_features(std::vector<double>& row, std::span<const State3> window, double exogenous) {
  for (const auto& s : window) row.insert(row.end(), s.begin(), s.end());
  row.push_back(exogenous);
}

// In-place Cholesky factorization of a symmetric matrix (row-major, n x n).
// Returns false when a pivot is not safely positive.
inline bool cholesky(std::vector<double>& a, std::size_t n) {
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * n + p] * a[j * n + p];
    if (!(d > tol)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t p = 0; p < j; ++p) s -= a[i * n + p] * a[j * n + p];
      a[i * n + j] = s / l;
    }
  }
  return true;
}

inline std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= l[i * n + p] * b[p];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t p = i + 1; p < n; ++p) s -= l[p * n + i] * b[p];
    b[i] = s / l[i * n + i];
  }
  return b;
}

}  // namespace detail

// Solves (Xc'Xc + lambda I) w = Xc'yc per output component on mean-centred data;
// the bias is recovered as mean(y) - w . mean(x) and is not penalized.
inline PredictorModel fit(std::span<const PredictorSample> samples, int k, double lambda) {
  if (k < 1) throw InputError("fit: k must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("fit: lambda must be finite and >= 0");
  const std::size_t d = 3 * static_cast<std::size_t>(k) + 1;
  if (samples.size() < d + 1)
    throw InputError("fit: need at least " + std::to_string(d + 1) + " samples, got " + std::to_string(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].window.size() != static_cast<std::size_t>(k))
      throw InputError("fit: sample " + std::to_string(i) + " has window length " +
                       std::to_string(samples[i].window.size()) + ", expected " + std::to_string(k));

  const double n = static_cast<double>(samples.size());
  std::vector<double> mean_x(d, 0.0);
  State3 mean_y{};
  std::vector<double> row;
  row.reserve(d);
  for (const auto& s : samples) {
    row.clear();
    detail::append_features(row, s.window, s.exogenous);
    for (std::size_t j = 0; j < d; ++j) mean_x[j] += row[j];
    for (int c = 0; c < 3; ++c) mean_y[c] += s.next[c];
  }
  for (auto& m : mean_x) m /= n;
  for (auto& m : mean_y) m /= n;

  std::vector<double> gram(d * d, 0.0);
  std::array<std::vector<double>, 3> rhs;
  for (auto& r : rhs) r.assign(d, 0.0);
  for (const auto& s : samples) {
    row.clear();
    detail::append_features(row, s.window, s.exogenous);
    for (std::size_t j = 0; j < d; ++j) row[j] -= mean_x[j];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j <= i; ++j) gram[i * d + j] += row[i] * row[j];
      for (int c = 0; c < 3; ++c) rhs[c][i] += row[i] * (s.next[c] - mean_y[c]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) gram[j * d + i] = gram[i * d + j];
    gram[i * d + i] += lambda;
  }

  if (!detail::cholesky(gram, d)) {
    if (lambda == 0.0) throw FitError("fit: singular normal equations; use lambda > 0");
    throw FitError("fit: normal equations are numerically singular; increase lambda");
  }

  PredictorModel model;
  model.k = k;
  model.lambda = lambda;
  for (int c = 0; c < 3; ++c) {
    model.weights[c] = detail::cholesky_solve(gram, d, rhs[c]);
    double b = mean_y[c];
    for (std::size_t j = 0; j < d; ++j) b -= model.weights[c][j] * mean_x[j];
    model.bias[c] = b;
    for (double w : model.weights[c])
      if (!std::isfinite(w)) throw FitError("fit: non-finite weight");
  }
  return model;
}

// Linear readout clamped to [0,1] per component.
inline State3 predict_raw(const PredictorModel& model, std::span<const State3> window, double exogenous) {
  if (window.size() != static_cast<std::size_t>(model.k)) throw InputError("predict: window length does not match k");
  std::vector<double> row;
  row.reserve(model.feature_count());
  detail::append_features(row, window, exogenous);
  State3 out{};
  for (int c = 0; c < 3; ++c) {
    double s = model.bias[c];
    for (std::size_t j = 0; j < row.size(); ++j) s += model.weights[c][j] * row[j];
    out[c] = std::clamp(s, 0.0, 1.0);
  }
  return out;
}

inline State3 predict(const PredictorModel& model, const HistoryWindow& window) {
  if (window.k() != model.k) throw InputError("predict: window k differs from model k");
  if (!window.warmed_up()) throw ProtocolError("predict: history window not warmed up; use persistence_baseline");
  const std::vector<State3> states(window.states().begin(), window.states().end());
  return predict_raw(model, states, window.exogenous());
}

inline State3 persistence_baseline(const HistoryWindow& window) {
  if (window.empty()) throw ProtocolError("persistence_baseline: empty history window");
  return window.states().back();
}

inline nlohmann::json to_json(const PredictorModel& m) {
  nlohmann::json j;
  j["k"] = m.k;
  j["lambda"] = m.lambda;
  j["weights"] = nlohmann::json::array({m.weights[0], m.weights[1], m.weights[2]});
  j["bias"] = std::vector<double>(m.bias.begin(), m.bias.end());
  return j;
}

inline PredictorModel predictor_from_json(const nlohmann::json& j) {
  try {
    PredictorModel m;
    m.k = j.at("k").get<int>();
    m.lambda = j.at("lambda").get<double>();
    const auto& w = j.at("weights");
    const auto b = j.at("bias").get<std::vector<double>>();
    if (m.k < 1 || w.size() != 3 || b.size() != 3) throw InputError("predictor JSON: malformed");
    for (int c = 0; c < 3; ++c) {
      m.weights[c] = w[static_cast<std::size_t>(c)].get<std::vector<double>>();
      if (m.weights[c].size() != m.feature_count()) throw InputError("predictor JSON: weight length does not match k");
      m.bias[c] = b[static_cast<std::size_t>(c)];
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("predictor JSON: ") + e.what());
  }
}

}  // namespace elastic
