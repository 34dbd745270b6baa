#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wgsa/errors.hpp"

namespace wgsa {

// A finitely supported probability measure on the real line: n atoms of equal
// weight 1/n, kept sorted.  This is the universal representation of code
// outputs throughout the library.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
      throw std::invalid_argument("EmpiricalDistribution: needs at least one atom");
    }
    for (double a : atoms_) {
      if (!std::isfinite(a)) {
        throw std::invalid_argument("EmpiricalDistribution: atoms must be finite");
      }
    }
    std::sort(atoms_.begin(), atoms_.end());
  }

  static EmpiricalDistribution point_mass(double x) {
    return EmpiricalDistribution(std::vector<double>{x});
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<double>& atoms() const noexcept { return atoms_; }

  // Generalized inverse c.d.f., left-continuous convention:
  //   F^-(v) = inf{x : F(x) >= v} = x_(ceil(v*n))   for v in (0,1).
  double quantile(double v) const {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::domain_error("quantile: v must lie strictly inside (0,1)");
    }
    const double n = static_cast<double>(atoms_.size());
    auto idx = static_cast<std::size_t>(std::ceil(v * n));
    if (idx < 1) idx = 1;
    if (idx > atoms_.size()) idx = atoms_.size();
    return atoms_[idx - 1];
  }

 private:
  std::vector<double> atoms_;
};

// Cost c(x,y) satisfying the "negative measure" property P.  power(q) and
// pinball(alpha) are the built-ins with known Frechet minimizers; custom costs
// carry a caller assertion that P holds (not machine-checkable).
class ContrastFunction {
 public:
  enum class Kind { Power, Pinball, Custom };

  static ContrastFunction power(double q) {
    if (!(q >= 1.0)) throw std::domain_error("ContrastFunction::power: q must be >= 1");
    ContrastFunction c;
    c.kind_ = Kind::Power;
    c.parameter_ = q;
    return c;
  }

  static ContrastFunction pinball(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::domain_error("ContrastFunction::pinball: alpha must lie in (0,1)");
    }
    ContrastFunction c;
    c.kind_ = Kind::Pinball;
    c.parameter_ = alpha;
    return c;
  }

  static ContrastFunction custom(std::function<double(double, double)> evaluator) {
    if (!evaluator) throw std::invalid_argument("ContrastFunction::custom: empty evaluator");
    ContrastFunction c;
    c.kind_ = Kind::Custom;
    c.custom_ = std::move(evaluator);
    return c;
  }

  double operator()(double x, double y) const {
    switch (kind_) {
      case Kind::Power: {
        const double d = std::abs(x - y);
        if (parameter_ == 2.0) return d * d;
        if (parameter_ == 1.0) return d;
        return std::pow(d, parameter_);
      }
      case Kind::Pinball:
        // (1-a)(y-x) on {x<y},  a(x-y) on {x>=y}
        return x < y ? (1.0 - parameter_) * (y - x) : parameter_ * (x - y);
      case Kind::Custom:
        return custom_(x, y);
    }
    return 0.0;  // unreachable
  }

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }

 private:
  ContrastFunction() = default;
  Kind kind_ = Kind::Custom;
  double parameter_ = 0.0;
  std::function<double(double, double)> custom_;
};

// Quadrature rule for integrals over v in (0,1): strictly increasing nodes,
// positive weights summing to 1.
struct QuantileGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  QuantileGrid(std::vector<double> nodes_in, std::vector<double> weights_in)
      : nodes(std::move(nodes_in)), weights(std::move(weights_in)) {
    if (nodes.empty() || nodes.size() != weights.size()) {
      throw std::invalid_argument("QuantileGrid: nodes/weights size mismatch or empty");
    }
    double prev = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!(nodes[k] > prev && nodes[k] < 1.0)) {
        throw std::invalid_argument("QuantileGrid: nodes must be strictly increasing in (0,1)");
      }
      if (!(weights[k] > 0.0)) {
        throw std::invalid_argument("QuantileGrid: weights must be positive");
      }
      prev = nodes[k];
      total += weights[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("QuantileGrid: weights must sum to 1 within 1e-12");
    }
  }

  // Midpoint rule v_k = (k - 1/2)/count with uniform weights; exact for
  // piecewise-constant quantile functions aligned with the grid.
  static QuantileGrid midpoint(std::size_t count = 512) {
    if (count == 0) throw std::invalid_argument("QuantileGrid::midpoint: count must be >= 1");
    std::vector<double> nodes(count);
    std::vector<double> weights(count, 1.0 / static_cast<double>(count));
    for (std::size_t k = 0; k < count; ++k) {
      nodes[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
    }
    // make the weights sum to exactly 1 against accumulated rounding
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    return QuantileGrid(std::move(nodes), std::move(weights));
  }

  std::size_t size() const noexcept { return nodes.size(); }
};

// Exact integral of c(F^-, G^-) over (0,1) for two empirical measures: both
// quantile functions are piecewise constant with jumps at i/n1 and j/n2, so the
// integral is a finite sum over the merged grid.  Interval boundaries are
// compared as integer cross-products, no floating-point grid is built.
inline double wasserstein_cost(const EmpiricalDistribution& d1, const EmpiricalDistribution& d2,
                               const ContrastFunction& c) {
  const auto& x = d1.atoms();
  const auto& y = d2.atoms();
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  if (n1 == n2) {
    double total = 0.0;
    for (std::size_t k = 0; k < n1; ++k) total += c(x[k], y[k]);
    return total / static_cast<double>(n1);
  }
  double total = 0.0;
  double prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n1 && j < n2) {
    const unsigned long long a = static_cast<unsigned long long>(i + 1) * n2;
    const unsigned long long b = static_cast<unsigned long long>(j + 1) * n1;
    const double next = (a <= b) ? static_cast<double>(i + 1) / static_cast<double>(n1)
                                 : static_cast<double>(j + 1) / static_cast<double>(n2);
    total += (next - prev) * c(x[i], y[j]);
    prev = next;
    if (a <= b) ++i;
    if (b <= a) ++j;
  }
  return total;
}

// q-Wasserstein distance between two empirical measures.  Equal atom counts
// reduce to the matched order-statistics formula; otherwise the quantile
// representation is integrated exactly on the merged jump grid.
inline double wasserstein(const EmpiricalDistribution& d1, const EmpiricalDistribution& d2,
                          double q) {
  if (!(q >= 1.0)) throw std::domain_error("wasserstein: q must be >= 1");
  const double cost = wasserstein_cost(d1, d2, ContrastFunction::power(q));
  if (q == 1.0) return cost;
  if (q == 2.0) return std::sqrt(cost);
  return std::pow(cost, 1.0 / q);
}

}  // namespace wgsa
