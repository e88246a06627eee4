// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/numerics/random.hpp"
#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::evaluation {

using numerics::Rng;
using numerics::Tensor;

inline constexpr std::size_t kRetrievalPool = 32;

/// Row i of `motion` is matched with row i of `text`. Each motion ranks its own
/// text against 31 distractors drawn from rows whose `groups` label differs
/// (rows sharing a label describe the same prompt). Returns hit rates for
/// k = 1..max_k.
std::vector<double> r_precision(const Tensor& text, const Tensor& motion, const std::vector<std::string>& groups,
                                std::size_t max_k, Rng& rng);

/// Frechet distance between the Gaussian fits of two feature sets.
double fid(const Tensor& a, const Tensor& b);
/// Same distance from moments.
double frechet_distance(const std::vector<double>& mu1, const Tensor& sigma1, const std::vector<double>& mu2,
                        const Tensor& sigma2);
/// Sample mean and unbiased covariance of the rows.
std::pair<std::vector<double>, Tensor> moments(const Tensor& x);

/// Mean Euclidean distance between matched rows.
double mm_dist(const Tensor& text, const Tensor& motion);

/// Mean distance between the rows of two disjoint random groups of `group` rows.
double diversity(const Tensor& x, std::size_t group, Rng& rng);

/// Per text, mean distance between `pairs` random pairs of its generations;
/// averaged over texts.
double multimodality(const std::vector<Tensor>& per_text, std::size_t pairs, Rng& rng);

/// Mean and 95% normal-approximation half-width over repeats.
struct Interval {
  double mean = 0.0;
  double ci95 = 0.0;
};
Interval summarize(const std::vector<double>& values);

/// Metric name -> interval, serialized as {"name": {"mean": .., "ci95": ..}}.
struct MetricReport {
  std::map<std::string, Interval> metrics;
  nlohmann::json meta = nlohmann::json::object();

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

double euclidean(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j);

}  // namespace fgt2m::evaluation
