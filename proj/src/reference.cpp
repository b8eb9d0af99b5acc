#include "fphist/reference.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fphist/error.hpp"

namespace fphist {

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double isotropic_gaussian_pdf(std::span<const double> x, double mean, double variance) {
  double q = 0.0;
  for (double v : x) q += (v - mean) * (v - mean);
  const auto d = static_cast<double>(x.size());
  return std::exp(-0.5 * q / variance - 0.5 * d * std::log(2.0 * std::numbers::pi * variance));
}

double ou_variance(double alpha, double epsilon, double t) {
  const double decay = std::exp(-2.0 * t);
  return alpha * decay + epsilon * epsilon * (1.0 - decay);
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string(name) + " must be positive and finite");
}

}  // namespace

double ou_solution(double alpha, double epsilon, std::size_t dim, double t,
                   std::span<const double> x, double beta) {
  if (x.size() != dim) throw ConfigError("ou_solution: point dimension mismatch");
  return isotropic_gaussian_pdf(x, (1.0 - std::exp(-t)) * beta, ou_variance(alpha, epsilon, t));
}

double heat_solution(double alpha, std::size_t dim, double t, std::span<const double> x) {
  if (x.size() != dim) throw ConfigError("heat_solution: point dimension mismatch");
  const auto d = static_cast<double>(dim);
  return std::pow(2.0 * std::numbers::pi * alpha + std::numbers::pi / 16.0 * t, -0.5 * d) *
         std::exp(-16.0 / (32.0 * alpha + t) * squared_norm(x));
}

// ---------------------------------------------------------------------------

AnalyticSolution::AnalyticSolution(Kind kind, std::size_t dim) : kind_(kind), dim_(dim) {
  if (dim == 0) throw ConfigError("analytic solution needs dimension >= 1");
  if (const auto* ou = std::get_if<OuGaussian>(&kind_)) {
    require_positive(ou->alpha, "alpha");
    require_positive(ou->epsilon, "epsilon");
  } else {
    require_positive(std::get<HeatGaussian>(kind_).alpha, "alpha");
  }
}

double AnalyticSolution::density(double t, std::span<const double> x) const {
  if (const auto* ou = std::get_if<OuGaussian>(&kind_))
    return ou_solution(ou->alpha, ou->epsilon, dim_, t, x, ou->beta);
  return heat_solution(std::get<HeatGaussian>(kind_).alpha, dim_, t, x);
}

std::vector<double> AnalyticSolution::mean(double t) const {
  if (const auto* ou = std::get_if<OuGaussian>(&kind_))
    return std::vector<double>(dim_, (1.0 - std::exp(-t)) * ou->beta);
  return std::vector<double>(dim_, 0.0);
}

double AnalyticSolution::variance(double t) const {
  if (const auto* ou = std::get_if<OuGaussian>(&kind_))
    return ou_variance(ou->alpha, ou->epsilon, t);
  // sigma sigma^T / 2 = Id / 64, so the variance grows by t / 32.
  return std::get<HeatGaussian>(kind_).alpha + t / 32.0;
}

std::string AnalyticSolution::name() const {
  return std::holds_alternative<OuGaussian>(kind_) ? "ou_gaussian" : "heat_gaussian";
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

struct OuSetup {
  const char* id;
  const char* description;
  std::size_t dim;
  double horizon;
  double alpha;
  double epsilon;
};

constexpr double kInvFourPi = 1.0 / (4.0 * std::numbers::pi);
constexpr double kInvTwoPi = 1.0 / (2.0 * std::numbers::pi);

const OuSetup kOuSetups[] = {
    {"example1", "Ornstein-Uhlenbeck b(x) = beta - x, sigma = sqrt(2) eps Id, Gaussian p_0", 2,
     0.5, 0.5, 1.0},
    {"example1a", "Ornstein-Uhlenbeck, d=2, T=0.5, alpha=0.5, eps=1 (error table setup)", 2, 0.5,
     0.5, 1.0},
    {"example1b", "Ornstein-Uhlenbeck, d=2, T=1, alpha=1/(4 pi), eps=1/5 (mesh migration)", 2,
     1.0, kInvFourPi, 0.2},
    {"example1-setup-a", "Ornstein-Uhlenbeck, d=2, T=1, alpha=16, eps=4", 2, 1.0, 16.0, 4.0},
    {"example1-setup-b", "Ornstein-Uhlenbeck, d=2, T=1, alpha=16, eps=1/100", 2, 1.0, 16.0, 0.01},
    {"example1-setup-c", "Ornstein-Uhlenbeck, d=2, T=1, alpha=1/20, eps=1", 2, 1.0, 0.05, 1.0},
    {"example1-setup-d", "Ornstein-Uhlenbeck, d=2, T=1, alpha=1/20, eps=1/100", 2, 1.0, 0.05,
     0.01},
};

void reject(const std::optional<double>& v, std::string_view id, const char* name) {
  if (v) throw ConfigError("problem '" + std::string(id) + "' does not accept '" + name + "'");
}

double pick_horizon(const ProblemParams& params, double fallback) {
  const double t = params.horizon.value_or(fallback);
  require_positive(t, "horizon T");
  return t;
}

BenchmarkProblem make_ou(const OuSetup& setup, const ProblemParams& params) {
  const std::size_t d = params.dim.value_or(setup.dim);
  if (d == 0) throw ConfigError("dimension must be >= 1");
  const double alpha = params.alpha.value_or(setup.alpha);
  const double epsilon = params.epsilon.value_or(setup.epsilon);
  require_positive(alpha, "alpha");
  require_positive(epsilon, "epsilon");
  const double noise = std::sqrt(2.0) * epsilon;

  BenchmarkProblem p;
  p.id = setup.id;
  p.description = setup.description;
  p.sde.id = setup.id;
  p.sde.dim = d;
  p.sde.horizon = pick_horizon(params, setup.horizon);
  p.sde.drift = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 - x[i];
  };
  p.sde.diffusion = [d, noise](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = noise;
  };
  p.sde.initial = InitialDensity::isotropic_gaussian(d, alpha);
  p.solution = AnalyticSolution(OuGaussian{alpha, epsilon, 1.0}, d);
  p.default_tau = 0.01;
  return p;
}

BenchmarkProblem make_example2(const ProblemParams& params) {
  reject(params.epsilon, "example2", "epsilon");
  const std::size_t d = params.dim.value_or(5);
  if (d == 0) throw ConfigError("dimension must be >= 1");
  const double alpha = params.alpha.value_or(kInvTwoPi);
  require_positive(alpha, "alpha");
  const double noise = std::sqrt(2.0) / 8.0;

  BenchmarkProblem p;
  p.id = "example2";
  p.description = "pure diffusion b = 0, sigma = (sqrt(2)/8) Id, Gaussian p_0 (d=5, T=0.3)";
  p.sde.id = p.id;
  p.sde.dim = d;
  p.sde.horizon = pick_horizon(params, 0.3);
  p.sde.drift = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  p.sde.diffusion = [d, noise](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = noise;
  };
  p.sde.initial = InitialDensity::isotropic_gaussian(d, alpha);
  p.solution = AnalyticSolution(HeatGaussian{alpha}, d);
  return p;
}

BenchmarkProblem make_example3(const ProblemParams& params) {
  reject(params.epsilon, "example3", "epsilon");
  if (params.dim && *params.dim != 8) throw ConfigError("example3 is defined for d = 8 only");
  const double alpha = params.alpha.value_or(kInvTwoPi);
  require_positive(alpha, "alpha");
  constexpr std::size_t d = 8;

  BenchmarkProblem p;
  p.id = "example3";
  p.description =
      "d=8, b(x) = [0,0,2,2,2,x6,x7,x8], sigma = (1 + |x|)/10 Id, Gaussian p_0 (T=0.2)";
  p.sde.id = p.id;
  p.sde.dim = d;
  p.sde.horizon = pick_horizon(params, 0.2);
  p.sde.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
    out[2] = 2.0;
    out[3] = 2.0;
    out[4] = 2.0;
    out[5] = x[5];
    out[6] = x[6];
    out[7] = x[7];
  };
  p.sde.diffusion = [](std::span<const double> x, std::span<double> out) {
    const double s = (1.0 + std::sqrt(squared_norm(x))) / 10.0;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = s;
  };
  p.sde.initial = InitialDensity::isotropic_gaussian(d, alpha);
  return p;
}

BenchmarkProblem make_example4(const ProblemParams& params) {
  reject(params.epsilon, "example4", "epsilon");
  reject(params.alpha, "example4", "alpha");
  if (params.dim && *params.dim != 8) throw ConfigError("example4 is defined for d = 8 only");
  constexpr std::size_t d = 8;

  BenchmarkProblem p;
  p.id = "example4";
  p.description =
      "d=8, b(x) = [0,0,2,2,sin x5,x6,x8,-x7], arctan-coupled sigma, uniform p_0 on "
      "[-0.5,0.5]^8 (T=1)";
  p.sde.id = p.id;
  p.sde.dim = d;
  p.sde.horizon = pick_horizon(params, 1.0);
  p.sde.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
    out[2] = 2.0;
    out[3] = 2.0;
    out[4] = std::sin(x[4]);
    out[5] = x[5];
    out[6] = x[7];
    out[7] = -x[6];
  };
  p.sde.diffusion = [](std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < 7; ++i) out[i * d + i] = 0.1;
    const double a = std::atan(x[0]);
    out[7 * d + 0] = 0.1 * a * a;
    out[7 * d + 7] = 0.1 * (2.0 + a * a);
  };
  p.sde.initial =
      InitialDensity::uniform_hypercube(std::vector<double>(d, -0.5), std::vector<double>(d, 0.5));
  return p;
}

}  // namespace

std::vector<std::string> catalog_ids() {
  std::vector<std::string> ids;
  for (const auto& s : kOuSetups) ids.emplace_back(s.id);
  ids.emplace_back("example2");
  ids.emplace_back("example3");
  ids.emplace_back("example4");
  return ids;
}

std::vector<BenchmarkProblem> catalog() {
  std::vector<BenchmarkProblem> out;
  for (const auto& id : catalog_ids()) out.push_back(make_problem(id));
  return out;
}

BenchmarkProblem make_problem(std::string_view id, const ProblemParams& params) {
  for (const auto& s : kOuSetups)
    if (id == s.id) return make_ou(s, params);
  if (id == "example2") return make_example2(params);
  if (id == "example3") return make_example3(params);
  if (id == "example4") return make_example4(params);
  std::ostringstream known;
  for (const auto& k : catalog_ids()) known << ' ' << k;
  throw UnknownProblemError("unknown problem '" + std::string(id) + "'; known:" + known.str());
}

}  // namespace fphist
