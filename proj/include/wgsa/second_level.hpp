#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wgsa/errors.hpp"
#include "wgsa/stochastic.hpp"

namespace wgsa {

// An identifiable parametric set of input distributions {mu_theta} with a
// prior over theta.  `realize` draws from mu_theta; `sort_key` is the scalar
// that orders parameter draws for the rank method.  Identifiability of
// theta -> mu_theta is a caller contract.
struct ParametricFamily {
  int theta_dim = 1;
  std::function<std::vector<double>(Rng&)> prior;
  std::function<double(std::span<const double>, Rng&)> realize;
  std::function<double(std::span<const double>)> sort_key;
};

// X ~ U[A,B] with A ~ U[a_low, a_high] and B ~ U[b_low, b_high].
// Degenerate endpoints are allowed (point-mass priors) except the fully
// degenerate case A = B = const, which would violate A < B.
inline ParametricFamily uniform_interval_family(double a_low, double a_high, double b_low,
                                                double b_high) {
  if (!(a_low <= a_high && a_high <= b_low && b_low <= b_high)) {
    throw std::invalid_argument(
        "uniform_interval_family: bounds must satisfy a_low <= a_high <= b_low <= b_high");
  }
  if (a_low == a_high && b_low == b_high && a_high == b_low) {
    throw std::invalid_argument("uniform_interval_family: interval would collapse to A == B");
  }
  ParametricFamily f;
  f.theta_dim = 2;
  f.prior = [a_low, a_high, b_low, b_high](Rng& rng) {
    return std::vector<double>{rng.uniform(a_low, a_high), rng.uniform(b_low, b_high)};
  };
  f.realize = [](std::span<const double> theta, Rng& rng) {
    return rng.uniform(theta[0], theta[1]);
  };
  f.sort_key = [](std::span<const double> theta) { return theta[0] + theta[1]; };
  return f;
}

// Second-level problem: sensitivity of the law of f(X_1..X_p) to the choice of
// the input distributions, reduced to a stochastic code over the concatenated
// parameter vector (the inner input draws are the hidden variable).
struct SecondLevelProblem {
  std::vector<ParametricFamily> families;
  std::function<double(std::span<const double>)> inner_code;
  std::size_t sample_size_N = 2;
  std::size_t approx_size_n = 1;
};

// The induced stochastic code: input is the concatenated theta vector; each
// call draws one inner input tuple from the parameterized distributions and
// evaluates the (deterministic) inner code.
inline StochasticCode make_induced_code(const SecondLevelProblem& prob) {
  int dim = 0;
  for (const auto& fam : prob.families) dim += fam.theta_dim;
  StochasticCode code;
  code.input_dim = dim;
  code.evaluate = [families = prob.families, inner = prob.inner_code](
                      std::span<const double> theta, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(families.size());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < families.size(); ++i) {
      const auto d = static_cast<std::size_t>(families[i].theta_dim);
      x[i] = families[i].realize(theta.subspan(offset, d), rng);
      offset += d;
    }
    return inner(x);
  };
  return code;
}

// Prior sampler over the concatenated theta vector; one block per family, rank
// ordering by the family sort_key.
inline PfInputSampler make_prior_sampler(const SecondLevelProblem& prob) {
  PfInputSampler sampler;
  int dim = 0;
  int offset = 0;
  for (const auto& fam : prob.families) {
    std::vector<int> block(static_cast<std::size_t>(fam.theta_dim));
    for (int c = 0; c < fam.theta_dim; ++c) block[static_cast<std::size_t>(c)] = offset + c;
    sampler.blocks.push_back(std::move(block));
    offset += fam.theta_dim;
    dim += fam.theta_dim;
  }
  sampler.dim = dim;
  sampler.draw = [families = prob.families, dim](Rng& rng) {
    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(dim));
    for (const auto& fam : families) {
      const auto t = fam.prior(rng);
      theta.insert(theta.end(), t.begin(), t.end());
    }
    return theta;
  };
  sampler.rank_key = [families = prob.families,
                      blocks = sampler.blocks](std::span<const double> theta, int b) {
    const auto& fam = families[static_cast<std::size_t>(b)];
    const auto& block = blocks[static_cast<std::size_t>(b)];
    if (!fam.sort_key) {
      throw UnsupportedFeatureError("rank method needs a sort_key on the parametric family");
    }
    return fam.sort_key(theta.subspan(static_cast<std::size_t>(block.front()), block.size()));
  };
  return sampler;
}

// The five-step second-level driver: draw N parameter tuples, approximate each
// induced output law by n inner evaluations, pair the pick-freeze branches
// (frozen families reuse theta, free families redraw, inner draws always
// fresh), and delegate to the requested estimator.  u indexes families.
inline IndexEstimate second_level_gsa(const SecondLevelProblem& prob, const std::vector<int>& u,
                                      const TestFunctionFamily& fam, Method method,
                                      std::uint64_t seed, const EstimatorOptions& opts = {}) {
  if (prob.families.empty()) throw std::invalid_argument("second_level_gsa: no families");
  if (!prob.inner_code) throw std::invalid_argument("second_level_gsa: no inner code");
  const StochasticCode code = make_induced_code(prob);
  const PfInputSampler sampler = make_prior_sampler(prob);
  return stochastic_gsa(code, sampler, u, fam, prob.sample_size_N, prob.approx_size_n, method,
                        seed, opts);
}

}  // namespace wgsa
