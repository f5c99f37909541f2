#include "shapereg/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <thread>

namespace shapereg {

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::consistency: return "consistency";
    case ScenarioKind::multimodality: return "multimodality";
    case ScenarioKind::partial: return "partial";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "consistency") return ScenarioKind::consistency;
  if (s == "multimodality") return ScenarioKind::multimodality;
  if (s == "partial") return ScenarioKind::partial;
  throw ValidationError("scenario.kind: unknown scenario '" + s + "' (expected consistency, multimodality or partial)");
}

void ScenarioSpec::validate() const {
  if (data_resolution <= model_resolution)
    throw ValidationError("scenario.data_resolution must exceed scenario.model_resolution");
  if (model_resolution < 4) throw ValidationError("scenario.model_resolution must be >= 4");
  if (data_steps < 1) throw ValidationError("scenario.data_steps must be >= 1");
  if (truth_modes < 1 || 2 * truth_modes > model_resolution)
    throw ValidationError("scenario.truth_modes must lie in [1, model_resolution / 2]");
  if (n_ladder.empty()) throw ValidationError("scenario.n_ladder must not be empty");
  for (auto n : n_ladder)
    if (n < 1) throw ValidationError("scenario.n_ladder entries must be >= 1");
  for (double r : r_values)
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("scenario.r_values entries must lie in [0, 1]");
  if (!(sigma > 0.0) || !(sigma_multimodality > 0.0) || !(sigma_d > 0.0) || !(sigma_l > 0.0))
    throw ValidationError("scenario noise levels must be > 0");
  if (!(noisy_fraction >= 0.0 && noisy_fraction <= 1.0))
    throw ValidationError("scenario.noisy_fraction must lie in [0, 1]");
  if (n_obs_multimodality < 1 || n_obs_partial < 1) throw ValidationError("scenario observation counts must be >= 1");
}

ClosedCurve2D template_circle(std::size_t n_p) {
  if (n_p < 4) throw InvalidInput("template_circle: need at least 4 points");
  std::vector<Vec2> q(n_p);
  for (std::size_t j = 0; j < n_p; ++j) {
    const double s = kTwoPi * static_cast<double>(j) / static_cast<double>(n_p);
    q[j] = {std::cos(s) + std::numbers::pi, std::sin(s) + std::numbers::pi};
  }
  return ClosedCurve2D(std::move(q));
}

double rounded_square_perimeter(double r) { return 8.0 * (1.0 - r) + kTwoPi * r; }

std::vector<Vec2> rounded_square_target(double r, std::size_t n) {
  if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("rounded_square_target: r must lie in [0, 1]");
  if (n < 4) throw InvalidInput("rounded_square_target: need at least 4 points");
  constexpr double pi = std::numbers::pi;
  const double e = 1.0 - r;        // half the straight part of an edge
  const double arc = 0.5 * pi * r;  // quarter-circle length
  // Walk: half right edge, then (arc, full edge) x 3, arc, half right edge.
  // Corner centres and edge directions counterclockwise from the right edge.
  const Vec2 centres[4] = {{pi + e, pi + e}, {pi - e, pi + e}, {pi - e, pi - e}, {pi + e, pi - e}};
  const double perim = rounded_square_perimeter(r);
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = perim * static_cast<double>(i) / static_cast<double>(n);
    Vec2 p;
    if (t <= e) {
      p = {pi + 1.0, pi + t};
    } else {
      t -= e;
      bool placed = false;
      for (int c = 0; c < 4 && !placed; ++c) {
        const double theta0 = 0.5 * pi * c;
        if (t <= arc) {
          const double th = theta0 + (r > 0.0 ? t / r : 0.0);
          p = centres[c] + r * Vec2{std::cos(th), std::sin(th)};
          placed = true;
          break;
        }
        t -= arc;
        const double len = c < 3 ? 2.0 * e : e;
        if (t <= len || c == 3) {
          // Edge after corner c, starting at angle theta0 + pi/2 on the circle.
          const double th = theta0 + 0.5 * pi;
          const Vec2 start = centres[c] + r * Vec2{std::cos(th), std::sin(th)};
          const Vec2 dir{-std::sin(th), std::cos(th)};
          p = start + t * dir;
          placed = true;
          break;
        }
        t -= len;
      }
    }
    out[i] = p;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  // splitmix64 finaliser
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Truth draw_truth(const PriorPair& priors, std::size_t resolution, std::size_t modes, Rng& rng) {
  const SpectralBasis basis(resolution, modes);
  Truth t;
  t.resolution = resolution;
  t.modes = modes;
  t.p0 = sample_coefficients(basis.variances(priors.momentum), rng);
  t.nu = sample_coefficients(basis.variances(priors.reparam), rng);
  return t;
}

SyntheticData synthesize_observations(const Truth& truth, const ModelConfig& data_model, std::size_t n_obs,
                                      const std::vector<double>& noise_variances, Rng& rng) {
  if (noise_variances.size() != n_obs) throw ContractViolation("synthesize_observations: one variance per point needed");
  const SpectralBasis basis(truth.resolution, truth.modes);
  const ObservationModel model(template_circle(truth.resolution), data_model);
  SyntheticData d;
  d.truth = truth;
  d.truth.sigma2 = noise_variances;
  d.obs.s = ObservationSet::equispaced(n_obs);
  d.obs.y = model.observe(ScalarLoopField(basis.synthesize(truth.p0)), ScalarLoopField(basis.synthesize(truth.nu)), d.obs.s);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n_obs; ++i) {
    const double sd = std::sqrt(noise_variances[i]);
    d.obs.y[i].x += sd * normal(rng);
    d.obs.y[i].y += sd * normal(rng);
  }
  d.obs.sigma2 = noise_variances;
  return d;
}

ModelContext::ModelContext(std::size_t n_p, const ModelConfig& cfg, const PriorPair& priors)
    : model(template_circle(n_p), cfg),
      p0_basis(n_p, priors.momentum.modes_for(n_p)),
      nu_basis(n_p, priors.reparam.modes_for(n_p)),
      prior{p0_basis.variances(priors.momentum), nu_basis.variances(priors.reparam)} {}

void infer_subcase(SubcaseResult& sc, const ModelContext& ctx, const InferenceSetup& setup, bool infer_sigma2,
                   std::uint64_t seed) {
  const auto& obs = sc.data.obs;
  obs.validate();
  const std::vector<double> zp(ctx.prior.p0.size(), 0.0), zn(ctx.prior.nu.size(), 0.0);
  sc.map = map_estimate(ctx.model, ctx.p0_basis, ctx.nu_basis, obs, ctx.prior, zp, zn, setup.optimizer);

  SamplerConfig cfg = setup.sampler;
  cfg.infer_sigma2 = infer_sigma2;
  ChainState init;
  init.p0 = sc.map->p0;
  init.nu = sc.map->nu;
  const auto potential = make_potential(ctx.model, ctx.p0_basis, ctx.nu_basis, obs);
  if (infer_sigma2) {
    const Misfit m = potential(init.p0, init.nu);
    init.sigma2 = m.ok() && m.residual_sq > 0.0 ? m.residual_sq / (2.0 * static_cast<double>(obs.size())) : 1.0;
  } else {
    init.sigma2 = obs.sigma2.front();
  }
  Rng rng(seed);
  sc.chain = run_chain(init, cfg, ctx.prior, potential, obs.size(), rng);
  if (sc.chain.records.empty()) throw NumericalFailure("chain produced no records");
  sc.summary = chain_summary(sc.chain.records, ctx.p0_basis, ctx.nu_basis);
}

namespace {

struct Job {
  SubcaseResult result;
  bool infer_sigma2 = false;
  std::uint64_t chain_seed = 0;
  std::function<SyntheticData()> make_data;
};

void run_job(Job& job, const ModelContext& ctx, const InferenceSetup& setup) {
  try {
    job.result.data = job.make_data();
    infer_subcase(job.result, ctx, setup, job.infer_sigma2, job.chain_seed);
    job.result.ok = true;
  } catch (const std::exception& e) {
    job.result.ok = false;
    job.result.error = e.what();
  }
}

}  // namespace

std::vector<double> partial_noise_variances(const ScenarioSpec& spec) {
  const std::size_t n = spec.n_obs_partial;
  const auto quiet = static_cast<std::size_t>(std::llround((1.0 - spec.noisy_fraction) * static_cast<double>(n)));
  std::vector<double> var(n, spec.sigma_d * spec.sigma_d);
  for (std::size_t i = quiet; i < n; ++i) var[i] = spec.sigma_l * spec.sigma_l;
  return var;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const InferenceSetup& setup, unsigned threads,
                            const std::function<void(const SubcaseResult&)>& on_case) {
  spec.validate();
  setup.model.validate();
  setup.sampler.validate();
  setup.optimizer.validate();
  const auto report = validate_spec(setup.priors, setup.model.shoot.metric);
  if (!report.ok()) throw ValidationError(report.errors.front());

  ModelConfig data_model = setup.model;
  data_model.shoot.steps = spec.data_steps;
  data_model.lie_steps = spec.data_steps;

  ScenarioResult out;
  out.spec = spec;
  std::vector<Job> jobs;
  const std::string kind = to_string(spec.kind);

  switch (spec.kind) {
    case ScenarioKind::consistency: {
      Rng truth_rng(derive_seed(spec.seed, kind + "/truth"));
      const Truth truth = draw_truth(setup.priors, spec.data_resolution, spec.truth_modes, truth_rng);
      for (std::size_t n : spec.n_ladder) {
        Job j;
        j.result.name = "N" + std::to_string(n);
        j.result.parameter = static_cast<double>(n);
        j.infer_sigma2 = true;
        j.chain_seed = derive_seed(spec.seed, kind + "/chain/" + j.result.name);
        const std::uint64_t noise_seed = derive_seed(spec.seed, kind + "/noise/" + j.result.name);
        j.make_data = [truth, data_model, n, noise_seed, &spec] {
          Rng rng(noise_seed);
          return synthesize_observations(truth, data_model, n, std::vector<double>(n, spec.sigma * spec.sigma), rng);
        };
        jobs.push_back(std::move(j));
      }
      break;
    }
    case ScenarioKind::multimodality: {
      for (double r : spec.r_values) {
        Job j;
        char buf[32];
        std::snprintf(buf, sizeof buf, "r%.4g", r);
        j.result.name = buf;
        j.result.parameter = r;
        j.infer_sigma2 = false;
        j.chain_seed = derive_seed(spec.seed, kind + "/chain/" + j.result.name);
        const std::size_t n = spec.n_obs_multimodality;
        const double s2 = spec.sigma_multimodality * spec.sigma_multimodality;
        j.make_data = [r, n, s2] {
          SyntheticData d;
          d.obs = ObservationSet::equispaced(rounded_square_target(r, n), s2);
          d.truth.sigma2 = d.obs.sigma2;
          return d;
        };
        jobs.push_back(std::move(j));
      }
      break;
    }
    case ScenarioKind::partial: {
      Job j;
      j.result.name = "partial";
      j.result.parameter = spec.noisy_fraction;
      j.infer_sigma2 = true;
      j.chain_seed = derive_seed(spec.seed, kind + "/chain/partial");
      const std::uint64_t truth_seed = derive_seed(spec.seed, kind + "/truth");
      const std::uint64_t noise_seed = derive_seed(spec.seed, kind + "/noise/partial");
      j.make_data = [&spec, &setup, data_model, truth_seed, noise_seed] {
        Rng trng(truth_seed);
        const Truth truth = draw_truth(setup.priors, spec.data_resolution, spec.truth_modes, trng);
        Rng rng(noise_seed);
        return synthesize_observations(truth, data_model, spec.n_obs_partial, partial_noise_variances(spec), rng);
      };
      jobs.push_back(std::move(j));
      break;
    }
  }

  const ModelContext ctx(spec.model_resolution, setup.model, setup.priors);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    for (auto& j : jobs) {
      run_job(j, ctx, setup);
      if (on_case) on_case(j.result);
    }
  } else {
    std::size_t next = 0;
    std::vector<std::future<void>> running;
    while (next < jobs.size() || !running.empty()) {
      while (running.size() < workers && next < jobs.size()) {
        Job* job = &jobs[next++];
        running.push_back(std::async(std::launch::async, [job, &ctx, &setup] { run_job(*job, ctx, setup); }));
      }
      running.front().get();
      running.erase(running.begin());
    }
    if (on_case)
      for (const auto& j : jobs) on_case(j.result);
  }
  for (auto& j : jobs) out.cases.push_back(std::move(j.result));
  return out;
}

std::vector<double> posterior_point_spread(const ModelContext& ctx, std::span<const ChainRecord> records,
                                           std::span<const double> s, std::size_t max_states) {
  if (records.empty()) throw ContractViolation("posterior_point_spread: no records");
  const std::size_t take = std::max<std::size_t>(1, std::min(max_states, records.size()));
  const double stride = static_cast<double>(records.size()) / static_cast<double>(take);
  std::vector<double> sx(s.size(), 0.0), sy(s.size(), 0.0), sxx(s.size(), 0.0), syy(s.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t k = 0; k < take; ++k) {
    const auto& r = records[static_cast<std::size_t>(static_cast<double>(k) * stride)];
    std::vector<Vec2> g;
    try {
      g = ctx.model.observe(ScalarLoopField(ctx.p0_basis.synthesize(r.p0)), ScalarLoopField(ctx.nu_basis.synthesize(r.nu)), s);
    } catch (const ObservationFailure&) {
      continue;
    }
    ++used;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sx[i] += g[i].x;
      sy[i] += g[i].y;
      sxx[i] += g[i].x * g[i].x;
      syy[i] += g[i].y * g[i].y;
    }
  }
  if (used == 0) throw NumericalFailure("posterior_point_spread: every forward evaluation failed");
  const double c = static_cast<double>(used);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double vx = sxx[i] / c - (sx[i] / c) * (sx[i] / c);
    const double vy = syy[i] / c - (sy[i] / c) * (sy[i] / c);
    out[i] = std::sqrt(std::max(0.0, vx + vy));
  }
  return out;
}

}  // namespace shapereg
