#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "wgsa/errors.hpp"
#include "wgsa/families.hpp"
#include "wgsa/rng.hpp"

namespace wgsa {

// Paired evaluations (Z_j, Z_j^u) plus the m auxiliary parameter rows W_{l,k}.
// When aux is left empty the estimators resolve it from the family's parameter
// source: OutputLaw reuses the z sample itself (the W == Z plug-in convention),
// UniformUnit draws seeded uniforms, Custom draws through the family sampler.
struct PickFreezeDesign {
  std::vector<OutputPoint> z;
  std::vector<OutputPoint> z_pf;
  std::vector<std::vector<OutputPoint>> aux;
};

// Single-sample design for the rank-based estimator: one scalar input column
// x_i, the outputs, and optional pre-drawn parameter rows.
struct RankDesign {
  std::vector<double> x;
  std::vector<OutputPoint> z;
  std::vector<std::vector<OutputPoint>> aux;
};

struct EstimatorOptions {
  // replaces the full N^m outer sum (or the full subset enumeration for
  // U-statistics) by this many uniformly drawn tuples/subsets
  std::optional<std::uint64_t> tuple_budget;
  std::uint64_t seed = 0;
  // cached evaluations for tagged families; algebraically identical to the
  // generic path and bit-identical in the full-enumeration case
  bool allow_fast_paths = true;
};

namespace detail {

inline constexpr std::uint64_t kAuxStream = 0xA117;
inline constexpr std::uint64_t kTieStream = 0x71E5;
inline constexpr std::uint64_t kTupleStream = 0x7091;
inline constexpr std::uint64_t kSubsetStream = 0x5065;

// N^m clamped to avoid overflow
inline double tuple_space_size(std::size_t n, int m) {
  double total = 1.0;
  for (int l = 0; l < m; ++l) total *= static_cast<double>(n);
  return total;
}

struct AuxRows {
  std::vector<const std::vector<OutputPoint>*> rows;
  std::vector<std::vector<OutputPoint>> storage;
};

inline AuxRows resolve_aux(const TestFunctionFamily& fam, const std::vector<OutputPoint>& z,
                           const std::vector<std::vector<OutputPoint>>& explicit_aux,
                           std::uint64_t seed) {
  const std::size_t n = z.size();
  AuxRows out;
  if (!explicit_aux.empty()) {
    if (static_cast<int>(explicit_aux.size()) != fam.arity) {
      throw std::invalid_argument("design aux rows do not match the family arity");
    }
    for (const auto& row : explicit_aux) {
      if (row.size() != n) throw std::invalid_argument("aux row length differs from sample size");
      out.rows.push_back(&row);
    }
    return out;
  }
  if (fam.arity == 0) return out;
  switch (fam.param_source) {
    case ParamSource::OutputLaw:
      for (int l = 0; l < fam.arity; ++l) out.rows.push_back(&z);
      break;
    case ParamSource::UniformUnit: {
      out.storage.reserve(fam.arity);
      for (int l = 0; l < fam.arity; ++l) {
        Rng rng(derive_seed(seed, kAuxStream, static_cast<std::uint64_t>(l)));
        std::vector<OutputPoint> row;
        row.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
          // strictly inside (0,1) so quantile evaluation stays in-domain
          row.emplace_back((static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53);
        }
        out.storage.push_back(std::move(row));
      }
      for (const auto& row : out.storage) out.rows.push_back(&row);
      break;
    }
    case ParamSource::Custom: {
      if (!fam.sample_param) {
        throw std::invalid_argument("custom parameter source without a sampler");
      }
      out.storage.reserve(fam.arity);
      for (int l = 0; l < fam.arity; ++l) {
        Rng rng(derive_seed(seed, kAuxStream, static_cast<std::uint64_t>(l)));
        std::vector<OutputPoint> row;
        row.reserve(n);
        for (std::size_t k = 0; k < n; ++k) row.push_back(fam.sample_param(rng));
        out.storage.push_back(std::move(row));
      }
      for (const auto& row : out.storage) out.rows.push_back(&row);
      break;
    }
  }
  return out;
}

// Visits parameter tuples (i_1..i_m) in lexicographic order: the full N^m
// product, or `budget` uniformly drawn tuples (sorted, so cached and generic
// paths accumulate in the same order).  Returns the number of tuples visited.
template <class F>
std::uint64_t for_each_tuple(std::size_t n, int m, const std::optional<std::uint64_t>& budget,
                             std::uint64_t seed, F&& fn) {
  if (m == 0) {
    fn(std::span<const std::size_t>{});
    return 1;
  }
  const double space = tuple_space_size(n, m);
  const bool full = !budget ? true : static_cast<double>(*budget) >= space;
  if (full) {
    if (space > 1e8) {
      throw std::invalid_argument(
          "pick-freeze/rank outer tuple space exceeds 1e8; set a tuple budget");
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    std::uint64_t count = 0;
    while (true) {
      fn(std::span<const std::size_t>(idx));
      ++count;
      int pos = m - 1;
      while (pos >= 0) {
        if (++idx[static_cast<std::size_t>(pos)] < n) break;
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    return count;
  }
  Rng rng(derive_seed(seed, kTupleStream));
  std::vector<std::vector<std::size_t>> tuples(*budget, std::vector<std::size_t>(m));
  for (auto& t : tuples) {
    for (auto& v : t) v = rng.index(n);
  }
  std::sort(tuples.begin(), tuples.end());
  for (const auto& t : tuples) fn(std::span<const std::size_t>(t));
  return *budget;
}

// Per-tuple evaluator of T over the z row; the Wasserstein-ball variant swaps
// the generic evaluate() for cached quantile-distance rows keyed by i_1.
class TupleEvaluator {
 public:
  TupleEvaluator(const TestFunctionFamily& fam, const AuxRows& aux, bool fast)
      : fam_(fam), aux_(aux), params_(static_cast<std::size_t>(fam.arity), OutputPoint{0.0}) {
    have_param_.assign(static_cast<std::size_t>(fam.arity), std::numeric_limits<std::size_t>::max());
    fast_ = fast && fam.kind == TestFunctionFamily::Kind::WassersteinBall && fam.arity == 2;
  }

  // prepare for a tuple; `targets` are the points T will be evaluated at
  void set_tuple(std::span<const std::size_t> idx, std::span<const OutputPoint* const> targets) {
    if (fast_) {
      const std::size_t i0 = idx[0];
      if (i0 != fast_row_index_) {
        fast_row_index_ = i0;
        const OutputPoint& center = (*aux_.rows[0])[i0];
        dist_.resize(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t) {
          dist_[t] = wasserstein_between(center, *targets[t], fam_.ball_order);
        }
        const auto& thr_row = *aux_.rows[1];
        thr_cache_.resize(thr_row.size());
        for (std::size_t k = 0; k < thr_row.size(); ++k) {
          thr_cache_[k] = wasserstein_between(center, thr_row[k], fam_.ball_order);
        }
      }
      threshold_ = thr_cache_[idx[1]];
      return;
    }
    for (std::size_t l = 0; l < params_.size(); ++l) {
      if (have_param_[l] != idx[l]) {
        params_[l] = (*aux_.rows[l])[idx[l]];
        have_param_[l] = idx[l];
      }
    }
  }

  // T at target t (index into the `targets` span passed to set_tuple)
  double operator()(std::size_t t, const OutputPoint& point) const {
    if (fast_) return dist_[t] <= threshold_ ? 1.0 : 0.0;
    return fam_.evaluate(std::span<const OutputPoint>(params_), point);
  }

  bool fast() const noexcept { return fast_; }

 private:
  const TestFunctionFamily& fam_;
  const AuxRows& aux_;
  std::vector<OutputPoint> params_;
  std::vector<std::size_t> have_param_;
  bool fast_ = false;
  std::size_t fast_row_index_ = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist_;
  std::vector<double> thr_cache_;
  double threshold_ = 0.0;
};

inline void check_denominator(double num, double den, double scale) {
  const double eps = 1e-12 * std::max(1.0, std::abs(scale));
  if (!(den > eps)) throw DegenerateOutputError(num, den);
}

}  // namespace detail

// Pick-Freeze estimator of the universal index: outer average over parameter
// tuples of the per-tuple empirical covariance of T(Z_j), T(Z_j^u) against the
// symmetrized variance (the (T(Z)^2 + T(Z^u)^2)/2 form).
inline IndexEstimate pick_freeze_estimate(const PickFreezeDesign& design,
                                          const TestFunctionFamily& fam,
                                          const EstimatorOptions& opts = {}) {
  const std::size_t n = design.z.size();
  if (n < 2 || design.z_pf.size() != n) {
    throw InsufficientSampleError("pick_freeze_estimate: needs paired samples with N >= 2");
  }
  const auto aux = detail::resolve_aux(fam, design.z, design.aux, opts.seed);
  detail::TupleEvaluator eval(fam, aux, opts.allow_fast_paths);

  std::vector<const OutputPoint*> targets;
  targets.reserve(2 * n);
  for (const auto& p : design.z) targets.push_back(&p);
  for (const auto& p : design.z_pf) targets.push_back(&p);

  const double dn = static_cast<double>(n);
  double mean_cross = 0.0, mean_sq = 0.0, mean_halves_sq = 0.0;
  const std::uint64_t tuples = detail::for_each_tuple(
      n, fam.arity, opts.tuple_budget, opts.seed, [&](std::span<const std::size_t> idx) {
        eval.set_tuple(idx, std::span<const OutputPoint* const>(targets));
        double s_cross = 0.0, s_sum = 0.0, s_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double t1 = eval(j, design.z[j]);
          const double t2 = eval(n + j, design.z_pf[j]);
          s_cross += t1 * t2;
          s_sum += t1 + t2;
          s_sq += t1 * t1 + t2 * t2;
        }
        const double half_mean = s_sum / (2.0 * dn);
        mean_cross += s_cross / dn;
        mean_halves_sq += half_mean * half_mean;
        mean_sq += s_sq / (2.0 * dn);
      });
  const double k = static_cast<double>(tuples);
  const double num = mean_cross / k - mean_halves_sq / k;
  const double den = mean_sq / k - mean_halves_sq / k;
  detail::check_denominator(num, den, mean_sq / k + mean_halves_sq / k);
  return IndexEstimate{num / den, num, den, Method::PickFreeze, n, fam.arity, std::nullopt};
}

namespace detail {

inline double binomial_count(std::size_t n, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) {
    c *= static_cast<double>(n - static_cast<std::size_t>(i)) / static_cast<double>(i + 1);
  }
  return c;
}

// One U-statistic component U_l: the average of the symmetrized kernel over
// subsets of size m(l), enumerated fully below the cap and sampled otherwise.
template <class Kernel>
double ustat_component(std::size_t n, int k, const std::optional<std::uint64_t>& budget,
                       std::uint64_t seed, std::uint64_t stream, Kernel&& phi) {
  constexpr double kFullEnumerationCap = 2e6;
  constexpr std::uint64_t kDefaultBudget = 100000;
  const double total = binomial_count(n, k);

  std::vector<std::size_t> idx(static_cast<std::size_t>(k));
  std::vector<std::size_t> perm(static_cast<std::size_t>(k));
  auto symmetrized = [&](const std::vector<std::size_t>& subset) {
    perm = subset;
    std::sort(perm.begin(), perm.end());
    double sum = 0.0;
    std::uint64_t count = 0;
    do {
      sum += phi(std::span<const std::size_t>(perm));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return sum / static_cast<double>(count);
  };

  const std::uint64_t requested = budget.value_or(
      total <= kFullEnumerationCap ? static_cast<std::uint64_t>(total) : kDefaultBudget);
  if (static_cast<double>(requested) >= total) {
    // full enumeration in lexicographic order
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    double sum = 0.0;
    std::uint64_t count = 0;
    while (true) {
      sum += symmetrized(idx);
      ++count;
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                             n - static_cast<std::size_t>(k - pos)) {
        --pos;
      }
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < k; ++q) {
        idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
      }
    }
    return sum / static_cast<double>(count);
  }
  // incomplete U-statistic over `requested` random subsets
  Rng rng(derive_seed(seed, stream));
  double sum = 0.0;
  for (std::uint64_t b = 0; b < requested; ++b) {
    for (int q = 0; q < k; ++q) {
      std::size_t candidate;
      bool dup;
      do {
        candidate = rng.index(n);
        dup = false;
        for (int r = 0; r < q; ++r) {
          if (idx[static_cast<std::size_t>(r)] == candidate) {
            dup = true;
            break;
          }
        }
      } while (dup);
      idx[static_cast<std::size_t>(q)] = candidate;
    }
    std::sort(idx.begin(), idx.begin() + k);
    sum += symmetrized(idx);
  }
  return sum / static_cast<double>(requested);
}

}  // namespace detail

// U-statistic estimator (U1-U2)/(U3-U4) with the four kernels
//   Phi1 = T_{z_1..z_m}(z_{m+1}) T_{z_1..z_m}(z_{m+1}^u)
//   Phi2 = T_{z_1..z_m}(z_{m+1}) T_{z_1..z_m}(z_{m+2}^u)
//   Phi3 = T_{z_1..z_m}(z_{m+1})^2
//   Phi4 = T_{z_1..z_m}(z_{m+1}) T_{z_1..z_m}(z_{m+2})
// symmetrized over permutations of the pairs.  Requires parameters drawn from
// the output law.  At m=0 the integration part vanishes and the estimator
// collapses to the same symmetrized plug-in ratio as pick_freeze_estimate.
inline IndexEstimate ustat_estimate(std::span<const OutputPoint> z,
                                    std::span<const OutputPoint> z_pf,
                                    const TestFunctionFamily& fam,
                                    const EstimatorOptions& opts = {}) {
  if (fam.param_source != ParamSource::OutputLaw) {
    throw UnsupportedFeatureError(
        "ustat_estimate: requires test-function parameters drawn from the output law");
  }
  const std::size_t n = z.size();
  if (z_pf.size() != n) throw std::invalid_argument("ustat_estimate: unpaired samples");
  const int m = fam.arity;
  if (n < static_cast<std::size_t>(m) + 2) {
    throw InsufficientSampleError("ustat_estimate: needs N >= m + 2");
  }
  if (m == 0) {
    PickFreezeDesign d;
    d.z.assign(z.begin(), z.end());
    d.z_pf.assign(z_pf.begin(), z_pf.end());
    EstimatorOptions sub = opts;
    sub.tuple_budget.reset();
    IndexEstimate est = pick_freeze_estimate(d, fam, sub);
    est.method = Method::UStat;
    return est;
  }

  const bool fast = opts.allow_fast_paths &&
                    fam.kind == TestFunctionFamily::Kind::WassersteinBall && m == 2 && n <= 1024;
  // distance matrices for the cached path: P[a][c] = W(z_a, z_c), PU[a][c] = W(z_a, z_pf_c)
  std::vector<double> pz, pu;
  if (fast) {
    pz.resize(n * n);
    pu.resize(n * n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t c = 0; c < n; ++c) {
        pz[a * n + c] = wasserstein_between(z[a], z[c], fam.ball_order);
        pu[a * n + c] = wasserstein_between(z[a], z_pf[c], fam.ball_order);
      }
    }
  }
  std::vector<OutputPoint> params(static_cast<std::size_t>(m), OutputPoint{0.0});
  auto t_eval = [&](std::span<const std::size_t> perm, const OutputPoint& point,
                    bool pf_branch, std::size_t point_index) {
    if (fast) {
      const std::size_t a = perm[0];
      const double thr = pz[a * n + perm[1]];
      const double d = pf_branch ? pu[a * n + point_index] : pz[a * n + point_index];
      return d <= thr ? 1.0 : 0.0;
    }
    for (int l = 0; l < m; ++l) params[static_cast<std::size_t>(l)] = z[perm[static_cast<std::size_t>(l)]];
    return fam.evaluate(std::span<const OutputPoint>(params), point);
  };

  const auto mu = static_cast<std::size_t>(m);
  auto phi1 = [&](std::span<const std::size_t> p) {
    return t_eval(p, z[p[mu]], false, p[mu]) * t_eval(p, z_pf[p[mu]], true, p[mu]);
  };
  auto phi2 = [&](std::span<const std::size_t> p) {
    return t_eval(p, z[p[mu]], false, p[mu]) * t_eval(p, z_pf[p[mu + 1]], true, p[mu + 1]);
  };
  auto phi3 = [&](std::span<const std::size_t> p) {
    const double t = t_eval(p, z[p[mu]], false, p[mu]);
    return t * t;
  };
  auto phi4 = [&](std::span<const std::size_t> p) {
    return t_eval(p, z[p[mu]], false, p[mu]) * t_eval(p, z[p[mu + 1]], false, p[mu + 1]);
  };

  const double u1 = detail::ustat_component(n, m + 1, opts.tuple_budget, opts.seed,
                                            detail::kSubsetStream + 1, phi1);
  const double u2 = detail::ustat_component(n, m + 2, opts.tuple_budget, opts.seed,
                                            detail::kSubsetStream + 2, phi2);
  const double u3 = detail::ustat_component(n, m + 1, opts.tuple_budget, opts.seed,
                                            detail::kSubsetStream + 3, phi3);
  const double u4 = detail::ustat_component(n, m + 2, opts.tuple_budget, opts.seed,
                                            detail::kSubsetStream + 4, phi4);
  const double num = u1 - u2;
  const double den = u3 - u4;
  if (!(den > 0.0)) throw DegenerateOutputError(num, den);
  return IndexEstimate{num / den, num, den, Method::UStat, n, m, std::nullopt};
}

namespace detail {

struct RankOrdering {
  std::vector<std::size_t> successor;
  bool had_ties = false;
};

// pi_i ranks of the input column with the cyclic successor map; ties are
// broken by a seeded random permutation so runs stay reproducible.
inline RankOrdering rank_successors(std::span<const double> x, std::uint64_t seed) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> tie_break(n);
  Rng rng(derive_seed(seed, kTieStream));
  for (auto& t : tie_break) t = rng.next_u64();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    if (tie_break[a] != tie_break[b]) return tie_break[a] < tie_break[b];
    return a < b;
  });
  RankOrdering out;
  out.successor.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    out.successor[order[pos]] = order[(pos + 1) % n];
    if (pos + 1 < n && x[order[pos]] == x[order[pos + 1]]) out.had_ties = true;
  }
  return out;
}

}  // namespace detail

// Rank-based estimator (first-order indices only): pairs Z_j with Z_{N_i(j)}
// where N_i is the cyclic rank-successor map of the input column, and uses the
// single-sample (non-symmetrized) numerator/denominator forms.
inline IndexEstimate rank_estimate(const RankDesign& design, const TestFunctionFamily& fam,
                                   const EstimatorOptions& opts = {}) {
  const std::size_t n = design.x.size();
  if (n < 2 || design.z.size() != n) {
    throw InsufficientSampleError("rank_estimate: needs matching x/z columns with N >= 2");
  }
  const auto ordering = detail::rank_successors(design.x, opts.seed);
  const auto aux = detail::resolve_aux(fam, design.z, design.aux, opts.seed);
  detail::TupleEvaluator eval(fam, aux, opts.allow_fast_paths);

  std::vector<const OutputPoint*> targets;
  targets.reserve(n);
  for (const auto& p : design.z) targets.push_back(&p);

  const double dn = static_cast<double>(n);
  std::vector<double> t_row(n);
  double mean_cross = 0.0, mean_mean_sq = 0.0, mean_sq = 0.0;
  const std::uint64_t tuples = detail::for_each_tuple(
      n, fam.arity, opts.tuple_budget, opts.seed, [&](std::span<const std::size_t> idx) {
        eval.set_tuple(idx, std::span<const OutputPoint* const>(targets));
        double s_sum = 0.0, s_sq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          t_row[j] = eval(j, design.z[j]);
          s_sum += t_row[j];
          s_sq += t_row[j] * t_row[j];
        }
        double s_cross = 0.0;
        for (std::size_t j = 0; j < n; ++j) s_cross += t_row[j] * t_row[ordering.successor[j]];
        const double mean = s_sum / dn;
        mean_cross += s_cross / dn;
        mean_mean_sq += mean * mean;
        mean_sq += s_sq / dn;
      });
  const double k = static_cast<double>(tuples);
  const double num = mean_cross / k - mean_mean_sq / k;
  const double den = mean_sq / k - mean_mean_sq / k;
  detail::check_denominator(num, den, mean_sq / k + mean_mean_sq / k);
  IndexEstimate est{num / den, num, den, Method::Rank, n, fam.arity, std::nullopt};
  if (ordering.had_ties) est.tie_break_seed = derive_seed(opts.seed, detail::kTieStream);
  return est;
}

// Chatterjee's rank correlation:
//   xi_N = 1 - 3 sum |r_{j+1} - r_j| / (N^2 - 1)
// with pairs sorted by x and r_j the number of y's <= the j-th y in that
// order.  Ties in x are broken by a seeded permutation.
inline double chatterjee_xi(std::span<const double> x, std::span<const double> y,
                            std::uint64_t seed = 0) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    throw InsufficientSampleError("chatterjee_xi: needs paired samples with N >= 2");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> tie_break(n);
  Rng rng(derive_seed(seed, detail::kTieStream));
  for (auto& t : tie_break) t = rng.next_u64();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    if (tie_break[a] != tie_break[b]) return tie_break[a] < tie_break[b];
    return a < b;
  });
  std::vector<double> sorted_y(y.begin(), y.end());
  std::sort(sorted_y.begin(), sorted_y.end());
  auto rank_of = [&](double value) {
    return static_cast<double>(std::upper_bound(sorted_y.begin(), sorted_y.end(), value) -
                               sorted_y.begin());
  };
  double jump_sum = 0.0;
  double prev = rank_of(y[order[0]]);
  for (std::size_t j = 1; j < n; ++j) {
    const double r = rank_of(y[order[j]]);
    jump_sum += std::abs(r - prev);
    prev = r;
  }
  const double dn = static_cast<double>(n);
  return 1.0 - 3.0 * jump_sum / (dn * dn - 1.0);
}

}  // namespace wgsa
