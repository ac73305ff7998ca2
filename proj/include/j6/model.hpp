#pragma once

// Bilinear logit model: logits = (H + h)(W + w)^T, with the Heat
// (cross-entropy) and Confidence (negative entropy) objectives and their
// analytic gradients. All functions are pure.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace j6 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// How the embedding perturbation w is laid over the V x d embedding table.
enum class WMode {
  FullMatrix,  ///< w is V x d, added row by row
  SingleRow,   ///< w is 1 x d, added to row v_star only
  Broadcast,   ///< w is 1 x d, added to every row
};

std::string_view to_string(WMode mode);
WMode parse_wmode(std::string_view text);

enum class Objective { Heat, Confidence };
enum class Group { H, W };

struct ProblemInstance {
  Matrix H;            // T x d hidden states
  Matrix W;            // V x d vocabulary embeddings
  std::vector<int> y;  // target token per position
  WMode w_mode = WMode::FullMatrix;
  int v_star = 0;

  int vocab() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
  int positions() const { return static_cast<int>(H.rows()); }

  /// Throws ShapeError / IndexError / NumericError when the invariants fail.
  void validate() const;
};

/// Number of rows of the w-shaped parameter (V for FullMatrix, 1 otherwise).
int w_rows(WMode mode, int vocab);

struct Perturbations {
  Vector h;  // length d
  Matrix w;  // w_rows x d

  static Perturbations zeros(const ProblemInstance& instance);
};

/// Throws ShapeError when the perturbation shapes do not fit the instance.
void check_shapes(const ProblemInstance& instance, const Perturbations& pert);

struct ObjectivePair {
  double ob1 = 0.0;  // Heat, nats
  double ob2 = 0.0;  // Confidence, nats
};

/// H + h broadcast over rows (T x d).
Matrix effective_hidden(const ProblemInstance& instance, const Perturbations& pert);
/// W with w's contribution applied per w_mode (V x d).
Matrix effective_embeddings(const ProblemInstance& instance, const Perturbations& pert);

Matrix compute_logits(const ProblemInstance& instance, const Perturbations& pert);

/// Max-subtracted softmax of one logit row.
Vector softmax(const Vector& z);
/// Row-wise softmax of a T x V logit matrix.
Matrix softmax_rows(const Matrix& logits);

/// Shannon entropy in nats with the 0 log 0 = 0 convention.
double entropy(const Vector& p);

double heat_loss(const Matrix& logits, const std::vector<int>& y);
double confidence_loss(const Matrix& logits);
/// Mean per-position entropy; equals -confidence_loss.
double mean_entropy(const Matrix& logits);

ObjectivePair evaluate(const ProblemInstance& instance, const Perturbations& pert);
double objective_value(Objective objective, const ProblemInstance& instance,
                       const Perturbations& pert);

/// p - onehot(y_t).
Vector grad_logits_heat(const Vector& p, int y_t);
/// p_k (log p_k + E) where E is the entropy of p.
Vector grad_logits_conf(const Vector& p);

/// Per-position logit-space gradients (T x V) of the *per-position* loss.
/// The 1/T of the mean is applied by grad_h / grad_w.
Matrix logit_gradients(Objective objective, const Matrix& logits,
                       const std::vector<int>& y);

Vector grad_h(const ProblemInstance& instance, const Perturbations& pert,
              const Matrix& g_logits);
Matrix grad_w(const ProblemInstance& instance, const Perturbations& pert,
              const Matrix& g_logits);

/// Central differences of an arbitrary scalar function.
Vector central_difference(const std::function<double(const Vector&)>& f,
                          const Vector& x, double eps = 1e-5);

/// Central-difference gradient of an objective with respect to h (returned
/// as a d x 1 matrix) or w (returned in w's shape).
Matrix fd_gradient(Objective objective, Group which, const ProblemInstance& instance,
                   const Perturbations& pert, double eps = 1e-5);

}  // namespace j6
