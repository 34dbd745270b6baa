#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "wgsa/empirical_distribution.hpp"
#include "wgsa/errors.hpp"

namespace wgsa {

// N realizations of a random c.d.f. together with the v-grid on which Frechet
// features and the Wasserstein variance are evaluated.
struct DistributionEnsemble {
  std::vector<EmpiricalDistribution> members;
  QuantileGrid grid;

  DistributionEnsemble(std::vector<EmpiricalDistribution> members_in, QuantileGrid grid_in)
      : members(std::move(members_in)), grid(std::move(grid_in)) {
    if (members.empty()) {
      throw std::invalid_argument("DistributionEnsemble: needs at least one member");
    }
  }
};

// Frechet feature of the ensemble under contrast c, computed node-wise on the
// grid: the quantile function of the result at node v is
//   argmin_s (1/N) sum_j c(F_j^-(v), s),
// i.e. the pointwise mean for power(2) and the pointwise empirical
// alpha-quantile for pinball(alpha).  One output atom per grid node.
// For even-sized ensembles the pinball minimizer is not unique; the lower
// empirical quantile (generalized-inverse convention) is returned.
inline EmpiricalDistribution frechet_feature(const DistributionEnsemble& e,
                                             const ContrastFunction& c) {
  const bool is_mean = c.kind() == ContrastFunction::Kind::Power && c.parameter() == 2.0;
  const bool is_quantile = c.kind() == ContrastFunction::Kind::Pinball;
  if (!is_mean && !is_quantile) {
    throw UnsupportedFeatureError(
        "frechet_feature: only power(2) and pinball(alpha) contrasts have a known pointwise "
        "minimizer");
  }
  const std::size_t count = e.members.size();
  std::vector<double> values(count);
  std::vector<double> out;
  out.reserve(e.grid.size());
  for (double v : e.grid.nodes) {
    for (std::size_t j = 0; j < count; ++j) values[j] = e.members[j].quantile(v);
    if (is_mean) {
      double s = 0.0;
      for (double val : values) s += val;
      out.push_back(s / static_cast<double>(count));
    } else {
      const double alpha = c.parameter();
      auto idx = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(count)));
      if (idx < 1) idx = 1;
      if (idx > count) idx = count;
      std::nth_element(values.begin(), values.begin() + (idx - 1), values.end());
      out.push_back(values[idx - 1]);
    }
  }
  return EmpiricalDistribution(std::move(out));
}

// Var(F) = integral over v of Var(F^-(v)), with the biased 1/N normalization,
// evaluated by the grid quadrature.
inline double wasserstein_variance(const DistributionEnsemble& e) {
  const std::size_t count = e.members.size();
  if (count < 2) {
    throw InsufficientSampleError("wasserstein_variance: needs at least two members");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < e.grid.size(); ++k) {
    const double v = e.grid.nodes[k];
    double mean = 0.0;
    for (const auto& m : e.members) mean += m.quantile(v);
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (const auto& m : e.members) {
      const double d = m.quantile(v) - mean;
      var += d * d;
    }
    total += e.grid.weights[k] * var / static_cast<double>(count);
  }
  return total;
}

}  // namespace wgsa
