#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "ibsher/common.hpp"

namespace ibsher::goals {

/// Axis-aligned box in goal space.
struct Box {
  Vec lo;
  Vec hi;

  static Box rect(double x0, double x1, double y0, double y1) { return Box{{x0, y0}, {x1, y1}}; }

  [[nodiscard]] std::size_t dim() const { return lo.size(); }
  [[nodiscard]] double volume() const;
  [[nodiscard]] bool contains(std::span<const double> x) const;
  /// Throws ConfigError unless every side has positive length.
  void validate() const;
};

struct GaussianComponent {
  double weight = 1.0;
  Vec mean;
  Eigen::MatrixXd cov;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;

  [[nodiscard]] std::size_t dim() const;
  /// Weights sum to one (1e-9), lie in [0, 1], covariances are symmetric positive definite.
  void validate() const;
  [[nodiscard]] double density(std::span<const double> x) const;
};

/// Goal density given only through samples (scored by the empirical kernel mean).
struct SampleSet {
  std::vector<Vec> points;
};

/// Declarative goal density g(x).
struct GoalDistributionSpec {
  std::variant<Box, GaussianMixture, SampleSet> variant;

  [[nodiscard]] std::size_t dim() const;
  void validate() const;
  /// Pointwise density; throws ConfigError for sample sets, which have none.
  [[nodiscard]] double density(std::span<const double> x) const;
};

/// Multivariate normal density N(x | mean, cov). Throws ConfigError when cov is not SPD.
double gaussian_density(std::span<const double> x, std::span<const double> mean,
                        const Eigen::MatrixXd& cov);

/// Gaussian RBF kernel exp(-|a - b|^2 / (2 sigma^2)).
double kernel(std::span<const double> a, std::span<const double> b, double sigma);

/// Kernel-smoothed score of a uniform density over `box` (density 1/volume inside):
/// product over axes of the Gaussian integral, evaluated with erf.
double score_uniform(std::span<const double> g, const Box& box, double sigma);

/// Closed-form kernel convolution of a Gaussian mixture:
/// (2 pi)^{n/2} sigma^n sum_i p_i N(mu_i | g, Sigma_i + sigma^2 I).
double score_gmm(std::span<const double> g, const GaussianMixture& gmm, double sigma);

/// Empirical kernel mean over a sample set.
double score_samples(std::span<const double> g, const SampleSet& samples, double sigma);

/// Dispatches to the closed form for the spec's variant.
double score(const GoalDistributionSpec& spec, std::span<const double> g, double sigma);

using DensityFn = std::function<double(std::span<const double>)>;

struct UniformProposal {
  Box domain;
};
/// Normalized kernel N(g, sigma^2 I) centred on the scored goal.
struct GaussianProposal {};
using Proposal = std::variant<UniformProposal, GaussianProposal>;

/// Monte-Carlo estimate of the kernel score. Uniform proposal: V/N sum k(g, X_i) g(X_i).
/// Gaussian proposal: 1/N sum k(g, X_i) g(X_i) / h(X_i), with h = N(g, sigma^2 I).
double score_monte_carlo(std::span<const double> g, const DensityFn& density, double sigma,
                         std::size_t n_samples, const Proposal& proposal, Rng& rng);

}  // namespace ibsher::goals
