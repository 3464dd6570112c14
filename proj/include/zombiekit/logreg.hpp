#pragma once

// Binary L2-regularized logistic regression shared by the profile bigram
// odds-ratio analysis and the TF-IDF baseline classifier. Full-batch gradient
// descent with backtracking (Armijo) line search on the objective
//   J(w, b) = mean_i softplus-NLL(w·x_i + b, y_i) + (l2/2)·||w||²,
// intercept unpenalized. The mean formulation makes the optimum invariant
// under dataset duplication for a fixed l2.

#include <cstdint>
#include <vector>

#include "zombiekit/textenc.hpp"  // SparseVec

namespace zk {

struct LogregOptions {
  double l2 = 1e-4;
  // Stop when the gradient 2-norm (weights + intercept) drops to tol.
  double tol = 1e-6;
  int max_iters = 5000;
};

struct LogregModel {
  std::vector<double> weights;
  double intercept = 0.0;
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = 0.0;
};

// X: sparse rows over columns [0, dim); y: 0/1 labels. Throws on size
// mismatch, out-of-range column, or non-binary label.
LogregModel logreg_fit(const std::vector<SparseVec>& X,
                       const std::vector<int>& y, std::uint32_t dim,
                       const LogregOptions& opts = {});

// w·x + b.
double logreg_decision(const LogregModel& m, const SparseVec& x);

// sigmoid(w·x + b).
double logreg_predict_proba(const LogregModel& m, const SparseVec& x);

}  // namespace zk
