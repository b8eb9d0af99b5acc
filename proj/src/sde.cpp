#include "fphist/sde.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fphist/detail/parallel.hpp"
#include "fphist/error.hpp"

namespace fphist {

namespace {

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ']';
  return os.str();
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

// ---------------------------------------------------------------------------
// InitialDensity

InitialDensity InitialDensity::gaussian(std::vector<double> mean, std::vector<double> covariance) {
  const std::size_t d = mean.size();
  if (d == 0) throw ConfigError("gaussian initial density needs dimension >= 1");
  if (covariance.size() != d * d)
    throw ConfigError("gaussian covariance must be " + std::to_string(d) + "x" +
                      std::to_string(d));
  if (!all_finite(mean) || !all_finite(covariance))
    throw ConfigError("gaussian parameters must be finite");

  const Eigen::Map<const RowMatrix> cov(covariance.data(), d, d);
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError("gaussian covariance must be symmetric");

  // Pivoted LDL^T copes with singular (semi-definite) covariances.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::VectorXd diag = ldlt.vectorD();
  const double tol = 1e-12 * scale;
  if ((diag.array() < -tol).any())
    throw ConfigError("gaussian covariance is not positive semi-definite");

  Eigen::MatrixXd lower = ldlt.matrixL();
  Eigen::VectorXd root = diag.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * (lower * root.asDiagonal());

  InitialDensity density;
  density.dim_ = d;
  density.factor_.resize(d * d);
  Eigen::Map<RowMatrix>(density.factor_.data(), d, d) = factor;

  const bool regular = (diag.array() > tol).all();
  if (regular) {
    const Eigen::MatrixXd precision = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    density.precision_.resize(d * d);
    Eigen::Map<RowMatrix>(density.precision_.data(), d, d) = precision;
    const double log_det = diag.array().log().sum();
    density.log_normalizer_ =
        -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
    density.has_pdf_ = true;
  }
  density.kind_ = GaussianInitial{std::move(mean), std::move(covariance)};
  return density;
}

InitialDensity InitialDensity::isotropic_gaussian(std::size_t dim, double variance) {
  if (!(variance >= 0.0)) throw ConfigError("gaussian variance must be >= 0");
  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] = variance;
  return gaussian(std::vector<double>(dim, 0.0), std::move(cov));
}

InitialDensity InitialDensity::point_mass(std::vector<double> location) {
  const std::size_t d = location.size();
  return gaussian(std::move(location), std::vector<double>(d * d, 0.0));
}

InitialDensity InitialDensity::uniform_hypercube(std::vector<double> lower,
                                                 std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("uniform hypercube bounds must be non-empty and of equal length");
  double log_volume = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw ConfigError("uniform hypercube needs finite lower < upper on every axis");
    log_volume += std::log(upper[i] - lower[i]);
  }
  InitialDensity density;
  density.dim_ = lower.size();
  density.log_normalizer_ = -log_volume;
  density.has_pdf_ = true;
  density.kind_ = UniformHypercubeInitial{std::move(lower), std::move(upper)};
  return density;
}

double InitialDensity::pdf(std::span<const double> x) const {
  if (x.size() != dim_) throw ConfigError("pdf: point dimension mismatch");
  if (const auto* box = std::get_if<UniformHypercubeInitial>(&kind_)) {
    for (std::size_t i = 0; i < dim_; ++i)
      if (x[i] < box->lower[i] || x[i] > box->upper[i]) return 0.0;
    return std::exp(log_normalizer_);
  }
  if (!has_pdf_) throw ConfigError("singular gaussian initial density has no pdf");
  const auto& g = std::get<GaussianInitial>(kind_);
  double quad = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) row += precision_[i * dim_ + j] * (x[j] - g.mean[j]);
    quad += (x[i] - g.mean[i]) * row;
  }
  return std::exp(log_normalizer_ - 0.5 * quad);
}

void InitialDensity::sample(StreamRng& rng, std::span<double> out) const {
  if (const auto* box = std::get_if<UniformHypercubeInitial>(&kind_)) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = rng.uniform(box->lower[i], box->upper[i]);
    return;
  }
  const auto& g = std::get<GaussianInitial>(kind_);
  double z[64];
  std::vector<double> heap;
  double* normals = z;
  if (dim_ > 64) {
    heap.resize(dim_);
    normals = heap.data();
  }
  for (std::size_t j = 0; j < dim_; ++j) normals[j] = rng.normal();
  for (std::size_t i = 0; i < dim_; ++i) {
    double v = g.mean[i];
    for (std::size_t j = 0; j < dim_; ++j) v += factor_[i * dim_ + j] * normals[j];
    out[i] = v;
  }
}

// ---------------------------------------------------------------------------
// Problem / config validation

void SdeProblem::validate(std::uint64_t probe_seed) const {
  if (dim == 0) throw ConfigError("problem '" + id + "': dimension must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ConfigError("problem '" + id + "': horizon must be positive and finite");
  if (!drift || !diffusion) throw ConfigError("problem '" + id + "': drift/diffusion missing");
  if (initial.dim() != dim)
    throw ConfigError("problem '" + id + "': initial density dimension does not match");

  std::vector<double> x(dim), b(dim), s(dim * dim);
  for (std::uint64_t probe = 0; probe < 8; ++probe) {
    StreamRng rng(probe_seed, probe);
    initial.sample(rng, x);
    drift(x, b);
    diffusion(x, s);
    if (!all_finite(b) || !all_finite(s))
      throw NumericalBlowup("problem '" + id + "': non-finite drift/diffusion at " +
                            format_point(x));
  }
}

void EulerConfig::validate() const {
  if (steps == 0) throw ConfigError("Euler steps J must be >= 1");
  if (samples == 0) throw ConfigError("sample count M must be >= 1");
}

// ---------------------------------------------------------------------------
// SampleSet

SampleSet::SampleSet(std::size_t dim, std::vector<double> coords, Provenance provenance)
    : dim_(dim), coords_(std::move(coords)), provenance_(std::move(provenance)) {
  if (dim_ == 0) throw ConfigError("sample set dimension must be >= 1");
  if (coords_.size() % dim_ != 0)
    throw ConfigError("sample coordinates are not a whole number of rows");
  if (!all_finite(coords_)) throw ConfigError("sample set contains non-finite coordinates");
}

std::vector<double> SampleSet::mean() const {
  std::vector<double> m(dim_, 0.0);
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim_; ++a) m[a] += coord(i, a);
  for (double& v : m) v /= static_cast<double>(n);
  return m;
}

std::vector<double> SampleSet::covariance() const {
  const std::size_t n = size();
  const auto m = mean();
  std::vector<double> c(dim_ * dim_, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim_; ++a) {
      const double da = coord(i, a) - m[a];
      for (std::size_t b = 0; b <= a; ++b) c[a * dim_ + b] += da * (coord(i, b) - m[b]);
    }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      c[a * dim_ + b] /= denom;
      c[b * dim_ + a] = c[a * dim_ + b];
    }
  return c;
}

// ---------------------------------------------------------------------------
// Euler scheme

void euler_step(std::span<const double> y, double tau, const SdeProblem& problem,
                std::span<const double> dw, StepWorkspace& work, std::span<double> out) {
  const std::size_t d = problem.dim;
  problem.drift(y, work.drift);
  problem.diffusion(y, work.diffusion);
  if (!all_finite(work.drift) || !all_finite(work.diffusion))
    throw NumericalBlowup("non-finite drift/diffusion at " + format_point(y));
  // Compute into the drift buffer first so `out` may alias `y`.
  for (std::size_t i = 0; i < d; ++i) {
    double v = y[i] + tau * work.drift[i];
    const double* row = work.diffusion.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) v += row[j] * dw[j];
    work.drift[i] = v;
  }
  std::copy(work.drift.begin(), work.drift.end(), out.begin());
}

std::vector<double> euler_step(std::span<const double> y, double tau, const SdeProblem& problem,
                               std::span<const double> dw) {
  if (y.size() != problem.dim || dw.size() != problem.dim)
    throw ConfigError("euler_step: dimension mismatch");
  StepWorkspace work(problem.dim);
  std::vector<double> out(problem.dim);
  euler_step(y, tau, problem, dw, work, out);
  return out;
}

void TrajectoryNoise::increment(double tau, std::span<double> dw) {
  const double scale = std::sqrt(tau);
  for (double& v : dw) v = scale * rng_.normal();
}

SampleSet sample_initial(const InitialDensity& density, std::size_t m, std::uint64_t seed) {
  const std::size_t d = density.dim();
  std::vector<double> coords(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    TrajectoryNoise noise(seed, i);
    noise.initial(density, std::span<double>(coords.data() + i * d, d));
  }
  return SampleSet(d, std::move(coords), Provenance{seed, 0, "initial"});
}

Simulation simulate(const SdeProblem& problem, const EulerConfig& config,
                    const SimulationOptions& options) {
  config.validate();
  problem.validate(config.seed);
  const std::size_t d = problem.dim;
  const std::size_t M = config.samples;
  const std::size_t J = config.steps;
  const double tau = config.tau(problem.horizon);

  std::vector<std::size_t> snaps = options.snapshot_steps;
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  if (!snaps.empty() && snaps.back() > J)
    throw ConfigError("snapshot step " + std::to_string(snaps.back()) + " exceeds J = " +
                      std::to_string(J));

  std::vector<double> terminal(M * d);
  std::vector<std::vector<double>> snapshot_coords(snaps.size(), std::vector<double>(M * d));

  detail::parallel_for(M, options.workers, [&](std::size_t m) {
    TrajectoryNoise noise(config.seed, m);
    StepWorkspace work(d);
    std::span<double> y(terminal.data() + m * d, d);
    std::vector<double> dw(d);
    noise.initial(problem.initial, y);
    std::size_t next_snap = 0;
    auto record = [&](std::size_t j) {
      while (next_snap < snaps.size() && snaps[next_snap] == j) {
        std::copy(y.begin(), y.end(), snapshot_coords[next_snap].begin() + m * d);
        ++next_snap;
      }
    };
    record(0);
    for (std::size_t j = 0; j < J; ++j) {
      noise.increment(tau, dw);
      try {
        euler_step(y, tau, problem, dw, work, y);
      } catch (const NumericalBlowup& e) {
        throw NumericalBlowup("trajectory " + std::to_string(m) + ", step " +
                              std::to_string(j) + ": " + e.what());
      }
      record(j + 1);
    }
    if (!all_finite(y))
      throw NumericalBlowup("trajectory " + std::to_string(m) + " left the finite range");
  });

  Simulation result{SampleSet(d, std::move(terminal), Provenance{config.seed, J, problem.id}),
                    {}};
  for (std::size_t s = 0; s < snaps.size(); ++s)
    result.snapshots.emplace(
        snaps[s], SampleSet(d, std::move(snapshot_coords[s]),
                            Provenance{config.seed, snaps[s], problem.id}));
  return result;
}

SampleSet simulate_terminal(const SdeProblem& problem, const EulerConfig& config,
                            unsigned workers) {
  return simulate(problem, config, SimulationOptions{workers, {}}).terminal;
}

}  // namespace fphist
