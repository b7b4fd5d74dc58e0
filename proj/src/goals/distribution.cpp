#include "ibsher/goals/distribution.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ibsher::goals {

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) throw ShapeError("point dimension does not match box");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

void Box::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("box bounds have mismatched dimension");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) throw ConfigError("degenerate box along axis " + std::to_string(i));
  }
}

std::size_t GaussianMixture::dim() const {
  return components.empty() ? 0 : components.front().mean.size();
}

void GaussianMixture::validate() const {
  if (components.empty()) throw ConfigError("gaussian mixture has no components");
  const std::size_t n = dim();
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0 || c.weight > 1.0) throw ConfigError("mixture weight outside [0, 1]");
    if (c.mean.size() != n || c.cov.rows() != static_cast<Eigen::Index>(n) ||
        c.cov.cols() != static_cast<Eigen::Index>(n)) {
      throw ConfigError("mixture component has inconsistent dimensions");
    }
    if (!c.cov.isApprox(c.cov.transpose(), 1e-12)) throw ConfigError("covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
}

double GaussianMixture::density(std::span<const double> x) const {
  double d = 0.0;
  for (const auto& c : components) d += c.weight * gaussian_density(x, c.mean, c.cov);
  return d;
}

std::size_t GoalDistributionSpec::dim() const {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SampleSet>) {
          return v.points.empty() ? 0 : v.points.front().size();
        } else {
          return v.dim();
        }
      },
      variant);
}

void GoalDistributionSpec::validate() const {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SampleSet>) {
          if (v.points.empty()) throw ConfigError("sample-set goal distribution is empty");
        } else {
          v.validate();
        }
      },
      variant);
}

double GoalDistributionSpec::density(std::span<const double> x) const {
  if (const auto* box = std::get_if<Box>(&variant)) {
    return box->contains(x) ? 1.0 / box->volume() : 0.0;
  }
  if (const auto* gmm = std::get_if<GaussianMixture>(&variant)) return gmm->density(x);
  throw ConfigError("a sample-set goal distribution has no pointwise density");
}

double gaussian_density(std::span<const double> x, std::span<const double> mean,
                        const Eigen::MatrixXd& cov) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (mean.size() != x.size() || cov.rows() != n || cov.cols() != n) {
    throw ShapeError("gaussian density arguments have mismatched dimension");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = x[i] - mean[i];
  const Eigen::VectorXd z = llt.matrixL().solve(d);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double log_norm = 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det);
  return std::exp(-0.5 * z.squaredNorm() - log_norm);
}

double kernel(std::span<const double> a, std::span<const double> b, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  return std::exp(-squared_distance(a, b) / (2.0 * sigma * sigma));
}

double score_uniform(std::span<const double> g, const Box& box, double sigma) {
  box.validate();
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  if (g.size() != box.dim()) throw ShapeError("goal dimension does not match box");
  const double scale = sigma * std::numbers::sqrt2;
  double integral = 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    // int_lo^hi exp(-(x - g)^2 / 2 sigma^2) dx
    const double axis = sigma * std::sqrt(std::numbers::pi / 2.0) *
                        (std::erf((box.hi[i] - g[i]) / scale) - std::erf((box.lo[i] - g[i]) / scale));
    integral *= axis;
  }
  return integral / box.volume();
}

double score_gmm(std::span<const double> g, const GaussianMixture& gmm, double sigma) {
  gmm.validate();
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  const std::size_t n = gmm.dim();
  if (g.size() != n) throw ShapeError("goal dimension does not match mixture");
  const double kernel_mass =
      std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(n)) * std::pow(sigma, static_cast<double>(n));
  const Eigen::MatrixXd smoothing =
      sigma * sigma * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double s = 0.0;
  for (const auto& c : gmm.components) {
    s += c.weight * gaussian_density(c.mean, g, c.cov + smoothing);
  }
  return kernel_mass * s;
}

double score_samples(std::span<const double> g, const SampleSet& samples, double sigma) {
  if (samples.points.empty()) throw ConfigError("sample-set goal distribution is empty");
  double s = 0.0;
  for (const auto& p : samples.points) s += kernel(g, p, sigma);
  return s / static_cast<double>(samples.points.size());
}

double score(const GoalDistributionSpec& spec, std::span<const double> g, double sigma) {
  if (const auto* box = std::get_if<Box>(&spec.variant)) return score_uniform(g, *box, sigma);
  if (const auto* gmm = std::get_if<GaussianMixture>(&spec.variant)) return score_gmm(g, *gmm, sigma);
  return score_samples(g, std::get<SampleSet>(spec.variant), sigma);
}

double score_monte_carlo(std::span<const double> g, const DensityFn& density, double sigma,
                         std::size_t n_samples, const Proposal& proposal, Rng& rng) {
  if (n_samples == 0) throw PreconditionError("Monte-Carlo estimate needs at least one sample");
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  const std::size_t n = g.size();
  Vec x(n);
  double acc = 0.0;

  if (const auto* uni = std::get_if<UniformProposal>(&proposal)) {
    uni->domain.validate();
    if (uni->domain.dim() != n) throw ShapeError("proposal domain dimension mismatch");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = uni->domain.lo[i] + u(rng) * (uni->domain.hi[i] - uni->domain.lo[i]);
      }
      acc += kernel(g, x, sigma) * density(x);
    }
    return uni->domain.volume() * acc / static_cast<double>(n_samples);
  }

  // k(g, x) / N(x | g, sigma^2 I) is the constant (2 pi sigma^2)^{n/2}.
  std::normal_distribution<double> normal(0.0, sigma);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) x[i] = g[i] + normal(rng);
    acc += density(x);
  }
  const double ratio = std::pow(2.0 * std::numbers::pi * sigma * sigma, 0.5 * static_cast<double>(n));
  return ratio * acc / static_cast<double>(n_samples);
}

}  // namespace ibsher::goals
