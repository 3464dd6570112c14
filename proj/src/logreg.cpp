#include "zombiekit/logreg.hpp"

#include <cmath>
#include <stdexcept>

namespace zk {

namespace {

// ln(1 + e^z) without overflow.
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

struct Objective {
  const std::vector<SparseVec>& X;
  const std::vector<int>& y;
  double l2;

  double value(const std::vector<double>& w, double b) const {
    double nll = 0.0;
    for (size_t i = 0; i < X.size(); ++i) {
      double z = b;
      for (const auto& [col, v] : X[i]) z += w[col] * v;
      // -ln p(y|z) = softplus(z) - y·z
      nll += softplus(z) - double(y[i]) * z;
    }
    nll /= double(X.size());
    double pen = 0.0;
    for (double wi : w) pen += wi * wi;
    return nll + 0.5 * l2 * pen;
  }

  // Gradient into (gw, gb); returns its squared 2-norm.
  double gradient(const std::vector<double>& w, double b,
                  std::vector<double>& gw, double& gb) const {
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    for (size_t i = 0; i < X.size(); ++i) {
      double z = b;
      for (const auto& [col, v] : X[i]) z += w[col] * v;
      double r = sigmoid(z) - double(y[i]);
      for (const auto& [col, v] : X[i]) gw[col] += r * v;
      gb += r;
    }
    double inv = 1.0 / double(X.size());
    double norm2 = 0.0;
    for (size_t c = 0; c < gw.size(); ++c) {
      gw[c] = gw[c] * inv + l2 * w[c];
      norm2 += gw[c] * gw[c];
    }
    gb *= inv;
    norm2 += gb * gb;
    return norm2;
  }
};

}  // namespace

LogregModel logreg_fit(const std::vector<SparseVec>& X,
                       const std::vector<int>& y, std::uint32_t dim,
                       const LogregOptions& opts) {
  if (X.size() != y.size())
    throw std::invalid_argument("logreg_fit: X/y size mismatch");
  if (X.empty()) throw std::invalid_argument("logreg_fit: empty dataset");
  for (size_t i = 0; i < X.size(); ++i) {
    if (y[i] != 0 && y[i] != 1)
      throw std::invalid_argument("logreg_fit: labels must be 0/1");
    for (const auto& [col, v] : X[i]) {
      (void)v;
      if (col >= dim)
        throw std::invalid_argument("logreg_fit: column index out of range");
    }
  }

  Objective obj{X, y, opts.l2};
  LogregModel m;
  m.weights.assign(dim, 0.0);
  std::vector<double> gw(dim), w_try(dim);
  double gb = 0.0;

  double step = 1.0;
  double j_cur = obj.value(m.weights, m.intercept);
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    double g2 = obj.gradient(m.weights, m.intercept, gw, gb);
    m.final_grad_norm = std::sqrt(g2);
    if (m.final_grad_norm <= opts.tol) {
      m.converged = true;
      break;
    }
    // Armijo backtracking from a step that grows again after success, so
    // the search adapts to local curvature in both directions.
    step *= 2.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      for (std::uint32_t c = 0; c < dim; ++c)
        w_try[c] = m.weights[c] - step * gw[c];
      double b_try = m.intercept - step * gb;
      double j_try = obj.value(w_try, b_try);
      if (j_try <= j_cur - 1e-4 * step * g2) {
        m.weights.swap(w_try);
        m.intercept = b_try;
        j_cur = j_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Step underflow: no descent direction representable; treat current
      // point as the solution.
      m.converged = m.final_grad_norm <= opts.tol;
      break;
    }
  }
  m.iterations = it;
  return m;
}

double logreg_decision(const LogregModel& m, const SparseVec& x) {
  double z = m.intercept;
  for (const auto& [col, v] : x) {
    if (col >= m.weights.size())
      throw std::invalid_argument("logreg_decision: column out of range");
    z += m.weights[col] * v;
  }
  return z;
}

double logreg_predict_proba(const LogregModel& m, const SparseVec& x) {
  return sigmoid(logreg_decision(m, x));
}

}  // namespace zk
