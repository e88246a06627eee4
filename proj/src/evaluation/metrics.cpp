// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/evaluation/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgt2m/common/error.hpp"

namespace fgt2m::evaluation {

double euclidean(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> r_precision(const Tensor& text, const Tensor& motion, const std::vector<std::string>& groups,
                                std::size_t max_k, Rng& rng) {
  const std::size_t n = text.rows();
  if (motion.rows() != n || groups.size() != n || text.cols() != motion.cols())
    throw Error("evaluation", "shape", "retrieval inputs disagree in size");
  if (max_k == 0 || max_k > kRetrievalPool) throw Error("evaluation", "bad_k", "k must be in [1, 32]");
  std::vector<double> hits(max_k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (groups[j] != groups[i]) others.push_back(j);
    if (others.size() < kRetrievalPool - 1)
      throw Error("evaluation", "pool_too_small",
                  "retrieval needs 31 distractors per query, found " + std::to_string(others.size()));
    for (std::size_t d = 0; d < kRetrievalPool - 1; ++d) std::swap(others[d], others[d + rng.index(others.size() - d)]);
    const double own = euclidean(motion, i, text, i);
    // Rank = number of distractors strictly closer; ties count against the query.
    std::size_t closer = 0;
    for (std::size_t d = 0; d < kRetrievalPool - 1; ++d)
      if (euclidean(motion, i, text, others[d]) <= own) ++closer;
    for (std::size_t k = 1; k <= max_k; ++k)
      if (closer < k) hits[k - 1] += 1.0;
  }
  for (double& h : hits) h /= double(n);
  return hits;
}

std::pair<std::vector<double>, Tensor> moments(const Tensor& x) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw Error("evaluation", "too_few_samples", "moments need at least two rows");
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mu[c] += x(i, c) / double(n);
  Tensor cov({d, d}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += (x(i, a) - mu[a]) * (x(i, b) - mu[b]) / double(n - 1);
  return {mu, cov};
}

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

}  // namespace

double frechet_distance(const std::vector<double>& mu1, const Tensor& sigma1, const std::vector<double>& mu2,
                        const Tensor& sigma2) {
  const std::size_t d = mu1.size();
  if (mu2.size() != d || sigma1.rows() != d || sigma2.rows() != d)
    throw Error("evaluation", "shape", "Frechet distance inputs disagree in dimension");
  double mean_term = 0.0;
  for (std::size_t c = 0; c < d; ++c) mean_term += (mu1[c] - mu2[c]) * (mu1[c] - mu2[c]);
  Eigen::MatrixXd s1 = to_eigen(sigma1), s2 = to_eigen(sigma2);
  s1 = 0.5 * (s1 + s1.transpose());
  s2 = 0.5 * (s2 + s2.transpose());
  // Tr((S1 S2)^1/2) = Tr((S1^1/2 S2 S1^1/2)^1/2), the latter symmetric PSD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(s1);
  Eigen::VectorXd l1 = e1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root1 = e1.eigenvectors() * l1.asDiagonal() * e1.eigenvectors().transpose();
  Eigen::MatrixXd inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(inner, Eigen::EigenvaluesOnly);
  const double tr_root = e2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = mean_term + s1.trace() + s2.trace() - 2.0 * tr_root;
  return std::max(value, 0.0);
}

double fid(const Tensor& a, const Tensor& b) {
  const std::size_t d = a.cols();
  if (b.cols() != d) throw Error("evaluation", "shape", "FID feature widths differ");
  if (a.rows() < d + 1 || b.rows() < d + 1)
    throw Error("evaluation", "too_few_samples",
                "FID needs at least " + std::to_string(d + 1) + " samples per side for a full-rank covariance, got " +
                    std::to_string(std::min(a.rows(), b.rows())));
  auto [m1, s1] = moments(a);
  auto [m2, s2] = moments(b);
  return frechet_distance(m1, s1, m2, s2);
}

double mm_dist(const Tensor& text, const Tensor& motion) {
  if (text.rows() != motion.rows() || text.rows() == 0 || text.cols() != motion.cols())
    throw Error("evaluation", "shape", "mm_dist needs matched non-empty rows");
  double s = 0.0;
  for (std::size_t i = 0; i < text.rows(); ++i) s += euclidean(text, i, motion, i);
  return s / double(text.rows());
}

double diversity(const Tensor& x, std::size_t group, Rng& rng) {
  if (group == 0 || x.rows() < 2 * group)
    throw Error("evaluation", "too_few_samples",
                "diversity needs " + std::to_string(2 * group) + " samples, got " + std::to_string(x.rows()));
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < 2 * group; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  double s = 0.0;
  for (std::size_t i = 0; i < group; ++i) s += euclidean(x, idx[i], x, idx[group + i]);
  return s / double(group);
}

double multimodality(const std::vector<Tensor>& per_text, std::size_t pairs, Rng& rng) {
  if (per_text.empty() || pairs == 0) throw Error("evaluation", "too_few_samples", "multimodality needs samples");
  double total = 0.0;
  for (const auto& g : per_text) {
    if (g.rows() < 2) throw Error("evaluation", "too_few_samples", "multimodality needs two generations per text");
    double s = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t a = rng.index(g.rows());
      std::size_t b = rng.index(g.rows() - 1);
      if (b >= a) ++b;
      s += euclidean(g, a, g, b);
    }
    total += s / double(pairs);
  }
  return total / double(per_text.size());
}

Interval summarize(const std::vector<double>& values) {
  if (values.empty()) throw Error("evaluation", "empty", "no values to summarize");
  Interval out;
  for (double v : values) out.mean += v / double(values.size());
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean) / double(values.size() - 1);
    out.ci95 = 1.96 * std::sqrt(var / double(values.size()));
  }
  return out;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "fgt2m.metric_report.v1";
  j["meta"] = meta;
  for (const auto& [name, iv] : metrics) j["metrics"][name] = {{"mean", iv.mean}, {"ci95", iv.ci95}};
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != "fgt2m.metric_report.v1" || !j.contains("metrics"))
    throw Error("evaluation", "bad_report", "not a metric report");
  MetricReport r;
  r.meta = j.value("meta", nlohmann::json::object());
  for (const auto& [name, v] : j["metrics"].items()) r.metrics[name] = {v.at("mean").get<double>(), v.at("ci95").get<double>()};
  return r;
}

}  // namespace fgt2m::evaluation
