#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shapereg/inference.hpp"
#include "shapereg/observation.hpp"
#include "shapereg/optimizer.hpp"
#include "shapereg/prior.hpp"

namespace shapereg {

enum class ScenarioKind { consistency, multimodality, partial };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::consistency;
  // consistency
  std::vector<std::size_t> n_ladder{10, 25, 50, 100};
  double sigma = 1e-2;
  // multimodality
  std::vector<double> r_values{1.0, 0.75, 0.5, 0.25};
  std::size_t n_obs_multimodality = 1000;
  double sigma_multimodality = 1e-2;
  // partial
  std::size_t n_obs_partial = 1000;
  double sigma_d = 1e-4;
  double sigma_l = 1e-1;
  double noisy_fraction = 0.25;
  // synthesis
  std::size_t data_resolution = 1000;
  std::size_t model_resolution = 100;
  int data_steps = 100;
  std::size_t truth_modes = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Unit circle centred at (pi, pi), q(s) = (cos s + pi, sin s + pi).
ClosedCurve2D template_circle(std::size_t n_p);

/// Square of side 2 centred at (pi, pi) with corners rounded by quarter
/// circles of radius r, sampled at n points equally spaced in arc length,
/// counterclockwise from the midpoint of the right edge.
std::vector<Vec2> rounded_square_target(double r, std::size_t n);
double rounded_square_perimeter(double r);

/// Ground truth behind a synthetic data set.
struct Truth {
  std::vector<double> p0;  // coefficients on SpectralBasis(resolution, modes)
  std::vector<double> nu;
  std::size_t resolution = 0;
  std::size_t modes = 0;
  std::vector<double> sigma2;  // per-point noise variances used
};

struct SyntheticData {
  ObservationSet obs;
  Truth truth;
};

/// Observes the truth at its own resolution and step count, then adds
/// independent N(0, sigma2_i I) noise to every point.
SyntheticData synthesize_observations(const Truth& truth, const ModelConfig& data_model, std::size_t n_obs,
                                      const std::vector<double>& noise_variances, Rng& rng);

/// Draws truth coefficients from the priors, truncated at `modes`.
Truth draw_truth(const PriorPair& priors, std::size_t resolution, std::size_t modes, Rng& rng);

/// Per-point variances of the partial scenario: sigma_d^2 on the leading
/// points, sigma_l^2 on the final noisy_fraction of them.
std::vector<double> partial_noise_variances(const ScenarioSpec& spec);

/// Sub-stream seed for a named part of a run.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& label);

struct InferenceSetup {
  ModelConfig model{};
  PriorPair priors{};
  SamplerConfig sampler{};
  OptimizerConfig optimizer{};
};

struct SubcaseResult {
  std::string name;
  bool ok = false;
  std::string error;
  double parameter = 0.0;  // N, r, or noisy fraction
  SyntheticData data;
  std::optional<MapEstimate> map;
  ChainResult chain;
  std::optional<ChainSummary> summary;
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<SubcaseResult> cases;
};

/// Bundle of everything needed to evaluate the model at model resolution.
struct ModelContext {
  ObservationModel model;
  SpectralBasis p0_basis;
  SpectralBasis nu_basis;
  CoefficientPrior prior;

  ModelContext(std::size_t n_p, const ModelConfig& cfg, const PriorPair& priors);
};

/// MAP burn-in then a pCN chain on one data set.
void infer_subcase(SubcaseResult& sc, const ModelContext& ctx, const InferenceSetup& setup, bool infer_sigma2,
                   std::uint64_t seed);

/// Runs every sub-case of the scenario. Sub-cases run on up to `threads`
/// workers; results do not depend on the thread count.
ScenarioResult run_scenario(const ScenarioSpec& spec, const InferenceSetup& setup, unsigned threads = 1,
                            const std::function<void(const SubcaseResult&)>& on_case = {});

/// Per-point standard deviation sqrt(var x + var y) of the curve points
/// G(p0, nu) at parameters s, over up to `max_states` evenly spaced records.
std::vector<double> posterior_point_spread(const ModelContext& ctx, std::span<const ChainRecord> records,
                                           std::span<const double> s, std::size_t max_states);

}  // namespace shapereg
