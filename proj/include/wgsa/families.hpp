#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>

#include "wgsa/empirical_distribution.hpp"
#include "wgsa/errors.hpp"
#include "wgsa/rng.hpp"

namespace wgsa {

// A code output is either a real scalar or a distribution on the real line.
// Scalars double as point masses wherever a distribution is expected.
using OutputPoint = std::variant<double, EmpiricalDistribution>;

inline double as_scalar(const OutputPoint& p) {
  if (const double* v = std::get_if<double>(&p)) return *v;
  throw std::invalid_argument("OutputPoint: expected a scalar output");
}

inline bool is_distribution(const OutputPoint& p) noexcept {
  return std::holds_alternative<EmpiricalDistribution>(p);
}

// Generalized inverse of an output point; a scalar is the point mass delta_c.
inline double quantile_of(const OutputPoint& p, double v) {
  if (const double* c = std::get_if<double>(&p)) {
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error("quantile_of: v outside (0,1)");
    return *c;
  }
  return std::get<EmpiricalDistribution>(p).quantile(v);
}

// W_q between output points, treating scalars as point masses.
inline double wasserstein_between(const OutputPoint& a, const OutputPoint& b, double q) {
  const double* sa = std::get_if<double>(&a);
  const double* sb = std::get_if<double>(&b);
  if (sa && sb) return std::abs(*sa - *sb);
  if (sa) return wasserstein(EmpiricalDistribution::point_mass(*sa),
                             std::get<EmpiricalDistribution>(b), q);
  if (sb) return wasserstein(std::get<EmpiricalDistribution>(a),
                             EmpiricalDistribution::point_mass(*sb), q);
  return wasserstein(std::get<EmpiricalDistribution>(a), std::get<EmpiricalDistribution>(b), q);
}

// Where the test-function parameters a_1..a_m are sampled from: the output law
// itself (pick-freeze reuse), the uniform law on (0,1), or a custom sampler.
enum class ParamSource { OutputLaw, UniformUnit, Custom };

enum class Method { PickFreeze, UStat, Rank };

inline const char* method_name(Method m) noexcept {
  switch (m) {
    case Method::PickFreeze: return "pf";
    case Method::UStat: return "ustat";
    case Method::Rank: return "rank";
  }
  return "?";
}

// An estimated universal sensitivity index with its raw ratio parts.
struct IndexEstimate {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  Method method = Method::PickFreeze;
  std::size_t sample_size = 0;
  int arity = 0;
  // set when input ranks had ties broken by a seeded permutation
  std::optional<std::uint64_t> tie_break_seed;
};

// A family of square-integrable test functions T_a(z) with a in Omega^m.
// Every sensitivity index in the library is an instance of the universal index
// for some family; the estimators consume families through this interface.
// `kind` tags the built-ins so estimators can swap in algebraically identical
// cached evaluations; any custom family runs through `evaluate` directly.
struct TestFunctionFamily {
  enum class Kind { Sobol, CramerVonMises, WassersteinBall, QuantileEval, Custom };

  Kind kind = Kind::Custom;
  int arity = 0;
  ParamSource param_source = ParamSource::OutputLaw;
  double ball_order = 2.0;  // q of the Wasserstein ball, when applicable
  std::function<double(std::span<const OutputPoint>, const OutputPoint&)> evaluate;
  // parameter sampler for ParamSource::Custom
  std::function<OutputPoint(Rng&)> sample_param;
};

// T(z) = z: the classical Sobol index (m = 0, scalar outputs).
inline TestFunctionFamily family_sobol() {
  TestFunctionFamily f;
  f.kind = TestFunctionFamily::Kind::Sobol;
  f.arity = 0;
  f.param_source = ParamSource::OutputLaw;
  f.evaluate = [](std::span<const OutputPoint>, const OutputPoint& z) { return as_scalar(z); };
  return f;
}

// T_a(z) = 1{z <= a} with a from the output law: the Cramer-von-Mises index.
inline TestFunctionFamily family_cvm() {
  TestFunctionFamily f;
  f.kind = TestFunctionFamily::Kind::CramerVonMises;
  f.arity = 1;
  f.param_source = ParamSource::OutputLaw;
  f.evaluate = [](std::span<const OutputPoint> a, const OutputPoint& z) {
    return as_scalar(z) <= as_scalar(a[0]) ? 1.0 : 0.0;
  };
  return f;
}

// T_(F1,F2)(F) = 1{W_q(F1,F) <= W_q(F1,F2)} with (F1,F2) from the output law:
// the Wasserstein-ball index on distribution-valued outputs.
inline TestFunctionFamily family_wasserstein_ball(double q = 2.0) {
  if (!(q >= 1.0)) throw std::domain_error("family_wasserstein_ball: q must be >= 1");
  TestFunctionFamily f;
  f.kind = TestFunctionFamily::Kind::WassersteinBall;
  f.arity = 2;
  f.param_source = ParamSource::OutputLaw;
  f.ball_order = q;
  f.evaluate = [q](std::span<const OutputPoint> a, const OutputPoint& z) {
    return wasserstein_between(a[0], z, q) <= wasserstein_between(a[0], a[1], q) ? 1.0 : 0.0;
  };
  return f;
}

// T_v(F) = F^-(v) with v uniform on (0,1): the Frechet-mean (quantile) index,
// whose universal index equals S^u(F) built from the Wasserstein variance.
inline TestFunctionFamily family_quantile_eval() {
  TestFunctionFamily f;
  f.kind = TestFunctionFamily::Kind::QuantileEval;
  f.arity = 1;
  f.param_source = ParamSource::UniformUnit;
  f.evaluate = [](std::span<const OutputPoint> a, const OutputPoint& z) {
    return quantile_of(z, as_scalar(a[0]));
  };
  return f;
}

}  // namespace wgsa
