#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fphist/sde.hpp"

namespace fphist {

/// Density at time t of the Ornstein-Uhlenbeck problem
///   dX = (beta - X) dt + sqrt(2) eps dW,  X_0 ~ N(0, alpha Id),
/// i.e. N(m_t, C_t) with m_t = (1 - e^{-t}) beta and
/// C_t = (alpha e^{-2t} + eps^2 (1 - e^{-2t})) Id. beta is the all-`beta` vector.
double ou_solution(double alpha, double epsilon, std::size_t dim, double t,
                   std::span<const double> x, double beta = 1.0);

/// Density at time t of pure diffusion with sigma = (sqrt(2)/8) Id from
/// X_0 ~ N(0, alpha Id):
///   (2 pi alpha + pi t / 16)^{-d/2} exp(-16 |x|^2 / (32 alpha + t)).
double heat_solution(double alpha, std::size_t dim, double t, std::span<const double> x);

struct OuGaussian {
  double alpha = 0.5;
  double epsilon = 1.0;
  double beta = 1.0;
};

struct HeatGaussian {
  double alpha = 1.0;
};

/// Closed-form Fokker-Planck solution; every kind is an isotropic Gaussian.
class AnalyticSolution {
 public:
  using Kind = std::variant<OuGaussian, HeatGaussian>;

  AnalyticSolution(Kind kind, std::size_t dim);

  const Kind& kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }

  double density(double t, std::span<const double> x) const;
  std::vector<double> mean(double t) const;
  /// Common diagonal entry of the (isotropic) covariance C_t.
  double variance(double t) const;
  std::string name() const;

 private:
  Kind kind_;
  std::size_t dim_;
};

/// Optional overrides for catalog problems. Unset fields take the example's
/// published values.
struct ProblemParams {
  std::optional<std::size_t> dim;
  std::optional<double> alpha;
  std::optional<double> epsilon;
  std::optional<double> horizon;
};

struct BenchmarkProblem {
  std::string id;
  std::string description;
  SdeProblem sde;
  std::optional<AnalyticSolution> solution;
  /// Step size used by the published experiment.
  double default_tau = 0.01;
};

/// Stable identifiers accepted by `make_problem`.
std::vector<std::string> catalog_ids();

/// Every catalog problem with its default parameters.
std::vector<BenchmarkProblem> catalog();

/// Throws UnknownProblemError for an unknown id and ConfigError for an
/// override the problem does not accept or an invalid value.
BenchmarkProblem make_problem(std::string_view id, const ProblemParams& params = {});

}  // namespace fphist
