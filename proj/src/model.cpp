#include "j6/model.hpp"

#include <cmath>
#include <string>

#include "j6/errors.hpp"

namespace j6 {

std::string_view to_string(WMode mode) {
  switch (mode) {
    case WMode::FullMatrix: return "full-matrix";
    case WMode::SingleRow: return "single-row";
    case WMode::Broadcast: return "broadcast";
  }
  return "full-matrix";
}

WMode parse_wmode(std::string_view text) {
  if (text == "full-matrix" || text == "full") return WMode::FullMatrix;
  if (text == "single-row" || text == "single") return WMode::SingleRow;
  if (text == "broadcast") return WMode::Broadcast;
  throw ConfigError("unknown w_mode '" + std::string(text) + "'");
}

int w_rows(WMode mode, int vocab) { return mode == WMode::FullMatrix ? vocab : 1; }

void ProblemInstance::validate() const {
  if (W.rows() < 1 || W.cols() < 1) throw ShapeError("W must be non-empty");
  if (H.rows() < 1) throw ShapeError("H must have at least one position");
  if (H.cols() != W.cols()) {
    throw ShapeError("H has " + std::to_string(H.cols()) + " columns but W has " +
                     std::to_string(W.cols()));
  }
  if (static_cast<Eigen::Index>(y.size()) != H.rows()) {
    throw ShapeError("y has " + std::to_string(y.size()) + " entries for " +
                     std::to_string(H.rows()) + " positions");
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] < 0 || y[t] >= vocab()) {
      throw IndexError("y[" + std::to_string(t) + "] = " + std::to_string(y[t]) +
                       " outside [0, " + std::to_string(vocab()) + ")");
    }
  }
  if (v_star < 0 || v_star >= vocab()) {
    throw IndexError("v_star = " + std::to_string(v_star) + " outside [0, " +
                     std::to_string(vocab()) + ")");
  }
  if (!H.allFinite() || !W.allFinite()) throw NumericError("H and W must be finite");
}

Perturbations Perturbations::zeros(const ProblemInstance& instance) {
  return {Vector::Zero(instance.dim()),
          Matrix::Zero(w_rows(instance.w_mode, instance.vocab()), instance.dim())};
}

void check_shapes(const ProblemInstance& instance, const Perturbations& pert) {
  if (pert.h.size() != instance.dim()) {
    throw ShapeError("h has length " + std::to_string(pert.h.size()) + ", expected " +
                     std::to_string(instance.dim()));
  }
  const int rows = w_rows(instance.w_mode, instance.vocab());
  if (pert.w.rows() != rows || pert.w.cols() != instance.dim()) {
    throw ShapeError("w is " + std::to_string(pert.w.rows()) + "x" +
                     std::to_string(pert.w.cols()) + ", expected " + std::to_string(rows) +
                     "x" + std::to_string(instance.dim()) + " for " +
                     std::string(to_string(instance.w_mode)));
  }
}

Matrix effective_hidden(const ProblemInstance& instance, const Perturbations& pert) {
  check_shapes(instance, pert);
  return instance.H.rowwise() + pert.h.transpose();
}

Matrix effective_embeddings(const ProblemInstance& instance, const Perturbations& pert) {
  check_shapes(instance, pert);
  Matrix out = instance.W;
  switch (instance.w_mode) {
    case WMode::FullMatrix: out += pert.w; break;
    case WMode::SingleRow: out.row(instance.v_star) += pert.w.row(0); break;
    case WMode::Broadcast: out.rowwise() += pert.w.row(0); break;
  }
  return out;
}

Matrix compute_logits(const ProblemInstance& instance, const Perturbations& pert) {
  return effective_hidden(instance, pert) * effective_embeddings(instance, pert).transpose();
}

Vector softmax(const Vector& z) {
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).unaryExpr([](double x) { return std::exp(x); }).matrix();
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    p.row(t) = softmax(logits.row(t).transpose()).transpose();
  }
  return p;
}

double entropy(const Vector& p) {
  double e = 0.0;
  for (double pk : p) {
    if (pk > 0.0) e -= pk * std::log(pk);
  }
  return e;
}

namespace {

double log_sum_exp(const Vector& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).unaryExpr([](double x) { return std::exp(x); }).sum());
}

void check_targets(const Matrix& logits, const std::vector<int>& y) {
  if (static_cast<Eigen::Index>(y.size()) != logits.rows()) {
    throw ShapeError("target count does not match logit rows");
  }
  for (int yt : y) {
    if (yt < 0 || yt >= logits.cols()) {
      throw IndexError("target " + std::to_string(yt) + " outside [0, " +
                       std::to_string(logits.cols()) + ")");
    }
  }
}

}  // namespace

double heat_loss(const Matrix& logits, const std::vector<int>& y) {
  check_targets(logits, y);
  double total = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector z = logits.row(t).transpose();
    total += log_sum_exp(z) - z[y[t]];
  }
  return total / static_cast<double>(logits.rows());
}

double mean_entropy(const Matrix& logits) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    total += entropy(softmax(logits.row(t).transpose()));
  }
  return total / static_cast<double>(logits.rows());
}

double confidence_loss(const Matrix& logits) { return -mean_entropy(logits); }

ObjectivePair evaluate(const ProblemInstance& instance, const Perturbations& pert) {
  const Matrix logits = compute_logits(instance, pert);
  return {heat_loss(logits, instance.y), confidence_loss(logits)};
}

double objective_value(Objective objective, const ProblemInstance& instance,
                       const Perturbations& pert) {
  const Matrix logits = compute_logits(instance, pert);
  return objective == Objective::Heat ? heat_loss(logits, instance.y)
                                      : confidence_loss(logits);
}

Vector grad_logits_heat(const Vector& p, int y_t) {
  if (y_t < 0 || y_t >= p.size()) throw IndexError("target index out of range");
  Vector g = p;
  g[y_t] -= 1.0;
  return g;
}

Vector grad_logits_conf(const Vector& p) {
  const double e = entropy(p);
  Vector g(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    g[k] = p[k] > 0.0 ? p[k] * (std::log(p[k]) + e) : 0.0;
  }
  return g;
}

Matrix logit_gradients(Objective objective, const Matrix& logits,
                       const std::vector<int>& y) {
  if (objective == Objective::Heat) check_targets(logits, y);
  Matrix g(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector p = softmax(logits.row(t).transpose());
    g.row(t) = (objective == Objective::Heat ? grad_logits_heat(p, y[t])
                                             : grad_logits_conf(p))
                   .transpose();
  }
  return g;
}

Vector grad_h(const ProblemInstance& instance, const Perturbations& pert,
              const Matrix& g_logits) {
  if (g_logits.rows() != instance.positions() || g_logits.cols() != instance.vocab()) {
    throw ShapeError("logit gradient must be T x V");
  }
  const Matrix w_eff = effective_embeddings(instance, pert);
  const Vector col_sums = g_logits.colwise().sum().transpose();  // length V
  return w_eff.transpose() * col_sums / static_cast<double>(instance.positions());
}

Matrix grad_w(const ProblemInstance& instance, const Perturbations& pert,
              const Matrix& g_logits) {
  if (g_logits.rows() != instance.positions() || g_logits.cols() != instance.vocab()) {
    throw ShapeError("logit gradient must be T x V");
  }
  const Matrix h_eff = effective_hidden(instance, pert);
  const double inv_t = 1.0 / static_cast<double>(instance.positions());
  switch (instance.w_mode) {
    case WMode::FullMatrix:
      return g_logits.transpose() * h_eff * inv_t;
    case WMode::SingleRow:
      return (g_logits.col(instance.v_star).transpose() * h_eff) * inv_t;
    case WMode::Broadcast:
      return (g_logits.rowwise().sum().transpose() * h_eff) * inv_t;
  }
  return {};
}

Vector central_difference(const std::function<double(const Vector&)>& f,
                          const Vector& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite-difference eps must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

Matrix fd_gradient(Objective objective, Group which, const ProblemInstance& instance,
                   const Perturbations& pert, double eps) {
  check_shapes(instance, pert);
  if (which == Group::H) {
    auto f = [&](const Vector& h) {
      Perturbations p = pert;
      p.h = h;
      return objective_value(objective, instance, p);
    };
    return central_difference(f, pert.h, eps);
  }
  const Eigen::Index rows = pert.w.rows();
  const Eigen::Index cols = pert.w.cols();
  auto f = [&](const Vector& flat) {
    Perturbations p = pert;
    p.w = Eigen::Map<const Matrix>(flat.data(), rows, cols);
    return objective_value(objective, instance, p);
  };
  const Vector flat = Eigen::Map<const Vector>(pert.w.data(), pert.w.size());
  const Vector grad = central_difference(f, flat, eps);
  return Eigen::Map<const Matrix>(grad.data(), rows, cols);
}

}  // namespace j6
