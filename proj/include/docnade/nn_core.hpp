#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docnade/corpus.hpp"

namespace docnade {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Activations

enum class Activation { sigmoid, tanh };

std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

/// 1 / (1 + exp(-x)) without overflow for large |x|.
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) = -softplus(-x), accurate in both tails.
inline double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Elementwise activation. Throws on non-finite input.
Vector activation(Activation kind, const Vector& x);
/// In-place variant used by the model kernels (no finiteness check).
void apply_activation(Activation kind, Eigen::Ref<Vector> x);
/// g'(a) expressed through the activation output y = g(a).
void scale_by_derivative(Activation kind, const Vector& y, Eigen::Ref<Vector> delta);

/// log(sum(exp(x))) with max subtraction.
double log_sum_exp(std::span<const double> x);

// ---------------------------------------------------------------------------
// Parameters

/// Named dense tensor with its gradient accumulator. Vectors are stored as a
/// single column and report a one-element shape.
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string name, std::size_t rows, std::size_t cols);
  ParamTensor(std::string name, std::size_t length);

  bool is_vector() const { return shape.size() == 1; }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
  void zero_grad() { grad.setZero(); }
  /// Throws if any value is NaN or infinite.
  void check_finite() const;
};

using ParamList = std::vector<ParamTensor*>;

enum class InitScheme { uniform_fan, zeros };

/// uniform_fan draws U(-a, a) with a = sqrt(6 / (fan_in + fan_out)), where a
/// (rows, cols) matrix has fan_out = rows and fan_in = cols.
void init_params(ParamTensor& tensor, InitScheme scheme, Rng& rng);
ParamTensor init_params(std::string name, std::vector<std::size_t> shape, InitScheme scheme, Rng& rng);

/// Mixes a string identifier into a seed (FNV-1a + splitmix finalizer).
std::uint64_t derive_seed(std::string_view key, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// theta <- theta - lr * grad for every tensor.
void sgd_step(std::span<ParamTensor* const> params, double lr);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update using the gradients currently stored in `params`.
  /// The tensor list must be the same (count and shapes) on every call.
  void step(std::span<ParamTensor* const> params);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Coordinates checked per tensor; 0 means all of them.
  std::size_t max_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Compares the gradients stored in `params` (computed beforehand at the
/// current values) against central differences of `loss`. `loss` must read
/// the same tensors; values are perturbed in place and restored.
GradCheckReport gradcheck(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                          const GradCheckOptions& options = {});

}  // namespace docnade
