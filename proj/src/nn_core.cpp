#include "docnade/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace docnade {

std::string to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Vector activation(Activation kind, const Vector& x) {
  if (!x.allFinite()) throw std::invalid_argument("activation: non-finite input");
  Vector y = x;
  apply_activation(kind, y);
  return y;
}

void apply_activation(Activation kind, Eigen::Ref<Vector> x) {
  if (kind == Activation::sigmoid) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = sigmoid(x[i]);
  } else {
    x = x.array().tanh();
  }
}

void scale_by_derivative(Activation kind, const Vector& y, Eigen::Ref<Vector> delta) {
  if (kind == Activation::sigmoid)
    delta.array() *= y.array() * (1.0 - y.array());
  else
    delta.array() *= 1.0 - y.array().square();
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

ParamTensor::ParamTensor(std::string n, std::size_t rows, std::size_t cols)
    : name(std::move(n)), shape{rows, cols}, value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

ParamTensor::ParamTensor(std::string n, std::size_t length)
    : name(std::move(n)), shape{length}, value(Matrix::Zero(length, 1)), grad(Matrix::Zero(length, 1)) {}

void ParamTensor::check_finite() const {
  if (!value.allFinite()) throw std::runtime_error("non-finite value in tensor " + name);
}

void init_params(ParamTensor& tensor, InitScheme scheme, Rng& rng) {
  if (scheme == InitScheme::zeros || tensor.is_vector()) {
    tensor.value.setZero();
    return;
  }
  double fan = static_cast<double>(tensor.value.rows() + tensor.value.cols());
  double a = std::sqrt(6.0 / fan);
  std::uniform_real_distribution<double> dist(-a, a);
  // Row-major fill so the draw order matches the serialized layout.
  for (Eigen::Index r = 0; r < tensor.value.rows(); ++r)
    for (Eigen::Index c = 0; c < tensor.value.cols(); ++c) tensor.value(r, c) = dist(rng);
}

ParamTensor init_params(std::string name, std::vector<std::size_t> shape, InitScheme scheme, Rng& rng) {
  if (shape.empty() || shape.size() > 2 ||
      std::any_of(shape.begin(), shape.end(), [](std::size_t d) { return d == 0; }))
    throw std::invalid_argument("init_params: dimensions must be positive");
  ParamTensor t = shape.size() == 1 ? ParamTensor(std::move(name), shape[0])
                                    : ParamTensor(std::move(name), shape[0], shape[1]);
  init_params(t, scheme, rng);
  return t;
}

std::uint64_t derive_seed(std::string_view key, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void sgd_step(std::span<ParamTensor* const> params, double lr) {
  if (!(lr >= 0)) throw std::invalid_argument("sgd: learning rate must be >= 0");
  for (ParamTensor* p : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols())
      throw std::invalid_argument("sgd: gradient shape mismatch for " + p->name);
    p->value -= lr * p->grad;
    p->check_finite();
  }
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr >= 0)) throw std::invalid_argument("optimizer: learning rate must be >= 0");
  if (config_.kind == OptimizerKind::adam) {
    if (!(config_.beta1 >= 0 && config_.beta1 < 1 && config_.beta2 >= 0 && config_.beta2 < 1))
      throw std::invalid_argument("adam: betas must lie in [0, 1)");
    if (!(config_.epsilon > 0)) throw std::invalid_argument("adam: epsilon must be > 0");
  }
}

void Optimizer::step(std::span<ParamTensor* const> params) {
  if (config_.kind == OptimizerKind::sgd) {
    sgd_step(params, config_.lr);
    ++t_;
    return;
  }
  if (m_.empty()) {
    for (ParamTensor* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter list changed between steps");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor& p = *params[k];
    if (p.grad.rows() != m_[k].rows() || p.grad.cols() != m_[k].cols() || p.value.rows() != m_[k].rows() ||
        p.value.cols() != m_[k].cols())
      throw std::invalid_argument("adam: shape mismatch for " + p.name);
    double* theta = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      double m_hat = m[i] / c1;
      double v_hat = v[i] / c2;
      theta[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    p.check_finite();
  }
}

GradCheckReport gradcheck(const std::function<double()>& loss, std::span<ParamTensor* const> params,
                          const GradCheckOptions& options) {
  if (!(options.epsilon >= 1e-7 && options.epsilon <= 1e-3))
    throw std::invalid_argument("gradcheck: epsilon must lie in [1e-7, 1e-3]");
  double base = loss();
  if (loss() != base) throw std::runtime_error("gradcheck: loss function is not deterministic");

  GradCheckReport report;
  Rng rng(options.seed);
  for (ParamTensor* p : params) {
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p->value.size()));
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_per_tensor > 0 && coords.size() > options.max_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (Eigen::Index i : coords) {
      double& x = p->value.data()[i];
      const double orig = x;
      x = orig + options.epsilon;
      double plus = loss();
      x = orig - options.epsilon;
      double minus = loss();
      x = orig;
      double numeric = (plus - minus) / (2.0 * options.epsilon);
      double analytic = p->grad.data()[i];
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (report.checked == 1 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = p->name;
        report.worst_index = static_cast<std::size_t>(i);
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace docnade
