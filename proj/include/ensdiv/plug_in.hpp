#ifndef ENSDIV_PLUG_IN_HPP
#define ENSDIV_PLUG_IN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ensdiv/error.hpp"
#include "ensdiv/functional.hpp"
#include "ensdiv/knn.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/random.hpp"

namespace ensdiv {

/// Likelihood ratios are clamped into this band before g is applied.
inline constexpr double kRatioFloor = 1e-12;
inline constexpr double kRatioCeiling = 1e12;

/// Partition of the f2 sample into evaluation points and density-reference points.
struct SplitLayout {
  std::size_t n_eval = 0;
  std::size_t m2 = 0;
  std::size_t m1 = 0;
  std::vector<std::size_t> eval_indices;
  std::vector<std::size_t> ref2_indices;

  void validate(std::size_t total) const {
    if (n_eval != eval_indices.size() || m2 != ref2_indices.size())
      throw Error(ErrorKind::configuration, "split layout counts disagree with its index lists");
    if (n_eval == 0) throw Error(ErrorKind::configuration, "evaluation split is empty");
    if (m2 == 0) throw Error(ErrorKind::configuration, "f2 reference split is empty");
    if (m1 == 0) throw Error(ErrorKind::configuration, "f1 sample is empty");
    if (n_eval + m2 != total)
      throw Error(ErrorKind::configuration, "split sizes " + std::to_string(n_eval) + "+" + std::to_string(m2) +
                                                " do not add up to the f2 sample size " + std::to_string(total));
    std::vector<bool> seen(total, false);
    for (const auto* list : {&eval_indices, &ref2_indices}) {
      for (auto i : *list) {
        if (i >= total || seen[i]) throw Error(ErrorKind::configuration, "split index sets overlap or are out of range");
        seen[i] = true;
      }
    }
  }
};

/// Size of the f2 reference split for a split fraction in (0, 1); at least one point on each side.
inline std::size_t reference_split_size(std::size_t total, double split_fraction) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw Error(ErrorKind::parameter, "split fraction must lie in (0, 1)");
  if (total < 2) throw Error(ErrorKind::configuration, "the f2 sample needs at least two points to split");
  const auto m2 = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(total)));
  return std::clamp<std::size_t>(m2, 1, total - 1);
}

/// Seeded uniform random split of an f2 sample of size `total`.
inline SplitLayout make_split(std::size_t total, std::size_t m1, double split_fraction, std::uint64_t seed) {
  const std::size_t m2 = reference_split_size(total, split_fraction);
  std::vector<std::size_t> perm(total);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  SplitLayout layout;
  layout.n_eval = total - m2;
  layout.m2 = m2;
  layout.m1 = m1;
  layout.eval_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(layout.n_eval));
  layout.ref2_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(layout.n_eval), perm.end());
  return layout;
}

struct RatioDiagnostics {
  std::size_t ratio_clamps = 0;     ///< ratios pulled into [kRatioFloor, kRatioCeiling]
  std::size_t distance_clamps = 0;  ///< neighbor distances raised to kRhoFloor

  RatioDiagnostics& operator+=(const RatioDiagnostics& o) {
    ratio_clamps += o.ratio_clamps;
    distance_clamps += o.distance_clamps;
    return *this;
  }
};

/// f1-hat / f2-hat at one point from its two neighbor distances, clamped.
inline double likelihood_ratio(std::size_t k1, std::size_t m1, double rho1, std::size_t k2, std::size_t m2, double rho2,
                               std::size_t d, RatioDiagnostics& diag) {
  const auto f1 = density_from_distance(k1, m1, d, rho1);
  const auto f2 = density_from_distance(k2, m2, d, rho2);
  diag.distance_clamps += static_cast<std::size_t>(f1.clamped) + static_cast<std::size_t>(f2.clamped);
  double ratio = f1.value / f2.value;
  if (std::isnan(ratio)) return ratio;
  if (ratio < kRatioFloor) {
    ratio = kRatioFloor;
    ++diag.ratio_clamps;
  } else if (ratio > kRatioCeiling) {
    ratio = kRatioCeiling;
    ++diag.ratio_clamps;
  }
  return ratio;
}

struct PlugInEstimate {
  double value = 0.0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::vector<double> per_point_ratios;  ///< filled only when requested
  RatioDiagnostics diagnostics;
};

/// Mean of g over already-computed ratios, summed in index order.
inline double mean_of_g(const Functional& f, std::span<const double> ratios) {
  double sum = 0.0;
  for (double r : ratios) sum += f(r);
  return sum / static_cast<double>(ratios.size());
}

/// Single-scale estimate: average of g(f1-hat / f2-hat) over the evaluation split.
/// f1-hat uses the whole f1 sample; f2-hat uses the reference split of the f2 sample.
inline PlugInEstimate plug_in_estimate(const PointSet& f1_sample, const PointSet& f2_sample, const SplitLayout& layout,
                                       std::size_t k1, std::size_t k2, const Functional& f, bool retain_ratios = false,
                                       std::size_t threads = 1) {
  if (f1_sample.dim() != f2_sample.dim())
    throw Error(ErrorKind::shape, "f1 and f2 samples have different dimensions");
  if (layout.m1 != f1_sample.size())
    throw Error(ErrorKind::configuration, "layout m1 does not match the f1 sample size");
  layout.validate(f2_sample.size());
  if (k1 == 0 || k1 > layout.m1)
    throw Error(ErrorKind::insufficient_neighbors, "k1=" + std::to_string(k1) + " outside [1, " + std::to_string(layout.m1) + "]");
  if (k2 == 0 || k2 > layout.m2)
    throw Error(ErrorKind::insufficient_neighbors, "k2=" + std::to_string(k2) + " outside [1, " + std::to_string(layout.m2) + "]");

  const PointSet eval = f2_sample.subset(layout.eval_indices);
  const NeighborIndex index1(f1_sample);
  const NeighborIndex index2(f2_sample.subset(layout.ref2_indices));
  const auto rho1 = knn_distance_table(eval, index1, k1, threads);
  const auto rho2 = knn_distance_table(eval, index2, k2, threads);

  PlugInEstimate out;
  out.k1 = k1;
  out.k2 = k2;
  std::vector<double> ratios(layout.n_eval);
  for (std::size_t i = 0; i < layout.n_eval; ++i) {
    ratios[i] = likelihood_ratio(k1, layout.m1, rho1.rho(i, k1), k2, layout.m2, rho2.rho(i, k2), f2_sample.dim(),
                                 out.diagnostics);
    if (!std::isfinite(ratios[i]))
      throw Error(ErrorKind::numeric, "non-finite likelihood ratio at evaluation point " + std::to_string(i) +
                                          " (f2 index " + std::to_string(layout.eval_indices[i]) + ")");
  }
  out.value = mean_of_g(f, ratios);
  if (retain_ratios) out.per_point_ratios = std::move(ratios);
  return out;
}

}  // namespace ensdiv

#endif  // ENSDIV_PLUG_IN_HPP
