// Command-line front end: simulate, map, sample, diagnose, scenario, shapes.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapereg/diagnostics.hpp"
#include "shapereg/io.hpp"
#include "shapereg/scenarios.hpp"

namespace fs = std::filesystem;
using namespace shapereg;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string config;
  std::string out = ".";
  bool seed_given = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--out", c.out, "Output directory");
}

io::RunConfig load(const Common& c) {
  io::RunConfig cfg = c.config.empty() ? io::RunConfig{} : io::load_config(c.config);
  cfg.scenario.seed = c.seed;
  return cfg;
}

std::string out_path(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void prepare_out(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + c.out + "': " + ec.message());
}

void finish_manifest(io::RunManifest& m, const Common& c) {
  m.finished = io::utc_timestamp();
  io::write_manifest(out_path(c, "manifest.json"), m);
}

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ValidationError(flag + " is required");
  if (!fs::exists(path)) throw ValidationError(flag + ": file '" + path + "' does not exist");
}

// Writes data files of one sub-case; returns the names written.
std::vector<std::string> write_case_data(const Common& c, const SubcaseResult& sc, bool with_truth) {
  std::vector<std::string> files;
  const std::string obs = "obs_" + sc.name + ".csv";
  io::write_observations(out_path(c, obs), sc.data.obs);
  files.push_back(obs);
  if (with_truth) {
    const std::string truth = "truth_" + sc.name + ".json";
    io::write_truth(out_path(c, truth), sc.data.truth);
    files.push_back(truth);
  }
  return files;
}

int cmd_simulate(const Common& c, const std::string& scenario_name) {
  io::RunConfig cfg = load(c);
  if (!scenario_name.empty()) cfg.scenario.kind = scenario_kind_from_string(scenario_name);
  prepare_out(c);
  auto manifest = io::make_manifest("simulate", cfg, c.seed);
  const auto& spec = cfg.scenario;
  ModelConfig data_model = cfg.setup.model;
  data_model.shoot.steps = spec.data_steps;
  data_model.lie_steps = spec.data_steps;

  io::write_curve(out_path(c, "template.csv"), template_circle(spec.model_resolution));
  manifest.files.push_back("template.csv");
  const std::string kind = to_string(spec.kind);
  auto emit = [&](SubcaseResult sc, bool with_truth) {
    for (auto& f : write_case_data(c, sc, with_truth)) manifest.files.push_back(f);
  };
  switch (spec.kind) {
    case ScenarioKind::consistency: {
      Rng trng(derive_seed(spec.seed, kind + "/truth"));
      const Truth truth = draw_truth(cfg.setup.priors, spec.data_resolution, spec.truth_modes, trng);
      for (std::size_t n : spec.n_ladder) {
        SubcaseResult sc;
        sc.name = "N" + std::to_string(n);
        Rng rng(derive_seed(spec.seed, kind + "/noise/" + sc.name));
        sc.data = synthesize_observations(truth, data_model, n, std::vector<double>(n, spec.sigma * spec.sigma), rng);
        emit(std::move(sc), true);
      }
      break;
    }
    case ScenarioKind::multimodality: {
      for (double r : spec.r_values) {
        SubcaseResult sc;
        char buf[32];
        std::snprintf(buf, sizeof buf, "r%.4g", r);
        sc.name = buf;
        sc.data.obs = ObservationSet::equispaced(rounded_square_target(r, spec.n_obs_multimodality),
                                                 spec.sigma_multimodality * spec.sigma_multimodality);
        emit(std::move(sc), false);
      }
      break;
    }
    case ScenarioKind::partial: {
      Rng trng(derive_seed(spec.seed, kind + "/truth"));
      const Truth truth = draw_truth(cfg.setup.priors, spec.data_resolution, spec.truth_modes, trng);
      const auto var = partial_noise_variances(spec);
      const std::size_t n = var.size();
      SubcaseResult sc;
      sc.name = "partial";
      Rng rng(derive_seed(spec.seed, kind + "/noise/partial"));
      sc.data = synthesize_observations(truth, data_model, n, var, rng);
      emit(std::move(sc), true);
      break;
    }
  }
  finish_manifest(manifest, c);
  return 0;
}

int cmd_map(const Common& c, const std::string& data) {
  require_file(data, "--data");
  const io::RunConfig cfg = load(c);
  const ObservationSet obs = io::read_observations(data);
  prepare_out(c);
  auto manifest = io::make_manifest("map", cfg, c.seed);
  const ModelContext ctx(cfg.scenario.model_resolution, cfg.setup.model, cfg.setup.priors);
  const std::vector<double> zp(ctx.prior.p0.size(), 0.0), zn(ctx.prior.nu.size(), 0.0);
  const auto m = map_estimate(ctx.model, ctx.p0_basis, ctx.nu_basis, obs, ctx.prior, zp, zn, cfg.setup.optimizer);
  io::write_map(out_path(c, "map.json"), m);
  manifest.files.push_back("map.json");
  if (m.degraded) manifest.failures.push_back("map: " + m.reason);
  finish_manifest(manifest, c);
  return 0;
}

void write_chain_outputs(const Common& c, const std::string& prefix, const ChainResult& chain,
                         const ChainSummary& summary, io::RunManifest& manifest) {
  const std::string names[4] = {prefix + "chain.ndjson", prefix + "summary.json", prefix + "histograms.csv",
                                prefix + "bands.csv"};
  io::write_chain(out_path(c, names[0]), chain.records);
  io::write_summary(out_path(c, names[1]), summary, chain);
  io::write_histograms(out_path(c, names[2]), summary);
  io::write_point_bands(out_path(c, names[3]), summary);
  for (const auto& n : names) manifest.files.push_back(n);
}

int cmd_sample(const Common& c, const std::string& data, const std::string& init) {
  require_file(data, "--data");
  if (!init.empty()) require_file(init, "--init");
  const io::RunConfig cfg = load(c);
  const ObservationSet obs = io::read_observations(data);
  prepare_out(c);
  auto manifest = io::make_manifest("sample", cfg, c.seed);
  const ModelContext ctx(cfg.scenario.model_resolution, cfg.setup.model, cfg.setup.priors);

  SubcaseResult sc;
  sc.name = "sample";
  sc.data.obs = obs;
  const bool infer = cfg.setup.sampler.infer_sigma2;
  if (init.empty()) {
    infer_subcase(sc, ctx, cfg.setup, infer, derive_seed(c.seed, "sample/chain"));
  } else {
    const MapEstimate m = io::read_map(init);
    if (m.p0.size() != ctx.prior.p0.size() || m.nu.size() != ctx.prior.nu.size())
      throw ValidationError("--init: coefficient count does not match the model resolution");
    ChainState st{m.p0, m.nu, infer ? 1.0 : obs.sigma2.front(), 0.0, 0.0};
    const auto potential = make_potential(ctx.model, ctx.p0_basis, ctx.nu_basis, obs);
    if (infer) {
      const Misfit mf = potential(st.p0, st.nu);
      if (mf.ok() && mf.residual_sq > 0.0) st.sigma2 = mf.residual_sq / (2.0 * static_cast<double>(obs.size()));
    }
    Rng rng(derive_seed(c.seed, "sample/chain"));
    SamplerConfig scfg = cfg.setup.sampler;
    sc.chain = run_chain(st, scfg, ctx.prior, potential, obs.size(), rng);
    if (sc.chain.records.empty()) throw ValidationError("sampler: no records retained (n_iters <= burn_in)");
    sc.summary = chain_summary(sc.chain.records, ctx.p0_basis, ctx.nu_basis);
  }
  write_chain_outputs(c, "", sc.chain, *sc.summary, manifest);
  finish_manifest(manifest, c);
  return 0;
}

int cmd_diagnose(const Common& c, const std::string& chain_path, std::size_t bins) {
  require_file(chain_path, "--chain");
  const io::RunConfig cfg = load(c);
  const auto records = io::read_chain(chain_path);
  if (records.empty()) throw ValidationError("--chain: no records in '" + chain_path + "'");
  const std::size_t n_p = cfg.scenario.model_resolution;
  const SpectralBasis pb(n_p, cfg.setup.priors.momentum.modes_for(n_p));
  const SpectralBasis nb(n_p, cfg.setup.priors.reparam.modes_for(n_p));
  if (records.front().p0.size() != pb.dim() || records.front().nu.size() != nb.dim())
    throw ValidationError("--chain: record dimension does not match scenario.model_resolution");
  prepare_out(c);
  auto manifest = io::make_manifest("diagnose", cfg, c.seed);
  const auto summary = chain_summary(records, pb, nb, bins);
  io::write_summary(out_path(c, "summary.json"), summary);
  io::write_histograms(out_path(c, "histograms.csv"), summary);
  io::write_point_bands(out_path(c, "bands.csv"), summary);

  std::vector<double> lowest(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) lowest[i] = records[i].p0[0];
  const auto thinned = thin_by_ess(lowest, summary.p0_mode_ess[0]);
  const auto dip = dip_test(thinned);
  std::ofstream f(out_path(c, "diagnostics.json"));
  f << "{\"lowest_mode_dip\":" << io::format_double(dip.dip) << ",\"lowest_mode_dip_p_value\":"
    << io::format_double(dip.p_value) << ",\"dip_sample_size\":" << dip.n << "}\n";
  for (const char* n : {"summary.json", "histograms.csv", "bands.csv", "diagnostics.json"}) manifest.files.push_back(n);
  finish_manifest(manifest, c);
  return 0;
}

int cmd_scenario(const Common& c, const std::string& name, unsigned threads) {
  io::RunConfig cfg = load(c);
  cfg.scenario.kind = scenario_kind_from_string(name);
  prepare_out(c);
  auto manifest = io::make_manifest("scenario " + name, cfg, c.seed);
  const bool with_truth = cfg.scenario.kind != ScenarioKind::multimodality;
  const auto result = run_scenario(cfg.scenario, cfg.setup, threads);

  nlohmann::json combined = nlohmann::json::array();
  for (const auto& sc : result.cases) {
    nlohmann::json entry{{"name", sc.name}, {"parameter", sc.parameter}, {"ok", sc.ok}};
    if (!sc.data.obs.y.empty())
      for (auto& f : write_case_data(c, sc, with_truth)) manifest.files.push_back(f);
    if (!sc.ok) {
      entry["error"] = sc.error;
      manifest.failures.push_back(sc.name + ": " + sc.error);
      combined.push_back(entry);
      continue;
    }
    io::write_map(out_path(c, "map_" + sc.name + ".json"), *sc.map);
    manifest.files.push_back("map_" + sc.name + ".json");
    write_chain_outputs(c, sc.name + "_", sc.chain, *sc.summary, manifest);
    entry["acceptance_rate"] = sc.chain.acceptance_rate();
    entry["final_beta"] = sc.chain.final_beta;
    entry["sigma2_quantiles"] = sc.summary->sigma2_quantiles;
    entry["map_value"] = sc.map->value;
    entry["map_initial_value"] = sc.map->initial_value;
    combined.push_back(entry);
  }
  std::ofstream f(out_path(c, "scenario_summary.json"));
  f << combined.dump(2) << '\n';
  manifest.files.push_back("scenario_summary.json");
  finish_manifest(manifest, c);
  return manifest.failures.empty() ? 0 : 2;
}

int cmd_shapes(const Common& c, const std::string& chain_path, std::size_t count, std::size_t points) {
  require_file(chain_path, "--chain");
  const io::RunConfig cfg = load(c);
  const auto records = io::read_chain(chain_path);
  if (count < 1) throw ValidationError("--count must be >= 1");
  if (count > records.size())
    throw ValidationError("--count " + std::to_string(count) + " exceeds the " + std::to_string(records.size()) +
                          " retained states");
  const ModelContext ctx(cfg.scenario.model_resolution, cfg.setup.model, cfg.setup.priors);
  if (records.front().p0.size() != ctx.p0_basis.dim() || records.front().nu.size() != ctx.nu_basis.dim())
    throw ValidationError("--chain: record dimension does not match scenario.model_resolution");
  prepare_out(c);
  auto manifest = io::make_manifest("shapes", cfg, c.seed);
  const auto s = ObservationSet::equispaced(points);
  std::ofstream f(out_path(c, "shapes.csv"));
  f << "sample,iteration,index,s,x,y\n";
  for (std::size_t k = 0; k < count; ++k) {
    const auto& r = records[k * records.size() / count];
    const auto g = ctx.model.observe(ScalarLoopField(ctx.p0_basis.synthesize(r.p0)),
                                     ScalarLoopField(ctx.nu_basis.synthesize(r.nu)), s);
    for (std::size_t i = 0; i < points; ++i)
      f << k << ',' << r.iteration << ',' << i << ',' << io::format_double(s[i]) << ',' << io::format_double(g[i].x)
        << ',' << io::format_double(g[i].y) << '\n';
  }
  manifest.files.push_back("shapes.csv");
  finish_manifest(manifest, c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian shape registration of closed planar curves"};
  app.require_subcommand(1);

  Common c_sim, c_map, c_sample, c_diag, c_scen, c_shapes;
  std::string sim_scenario, map_data, sample_data, sample_init, diag_chain, scen_name, shapes_chain;
  std::size_t diag_bins = 40, shapes_count = 20, shapes_points = 400;
  unsigned threads = 1;

  auto* sim = app.add_subcommand("simulate", "Synthesise observation files for a scenario");
  add_common(sim, c_sim);
  sim->add_option("--scenario", sim_scenario, "consistency | multimodality | partial");

  auto* map = app.add_subcommand("map", "MAP estimate by BFGS");
  add_common(map, c_map);
  map->add_option("--data", map_data, "Observation CSV")->required();

  auto* sample = app.add_subcommand("sample", "pCN chain (MAP burn-in unless --init is given)");
  add_common(sample, c_sample);
  sample->add_option("--data", sample_data, "Observation CSV")->required();
  sample->add_option("--init", sample_init, "MAP JSON used as the initial state");

  auto* diag = app.add_subcommand("diagnose", "Summaries and histogram tables of a chain file");
  add_common(diag, c_diag);
  diag->add_option("--chain", diag_chain, "Chain NDJSON")->required();
  diag->add_option("--bins", diag_bins, "Histogram bins");

  auto* scen = app.add_subcommand("scenario", "Run a full experiment preset");
  add_common(scen, c_scen);
  scen->add_option("name", scen_name, "consistency | multimodality | partial")->required();
  scen->add_option("--threads", threads, "Sub-cases run concurrently on this many threads");

  auto* shapes = app.add_subcommand("shapes", "Export dense posterior-sample curves");
  add_common(shapes, c_shapes);
  shapes->add_option("--chain", shapes_chain, "Chain NDJSON")->required();
  shapes->add_option("--count", shapes_count, "Number of curves");
  shapes->add_option("--points", shapes_points, "Points per curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(c_sim, sim_scenario);
    if (*map) return cmd_map(c_map, map_data);
    if (*sample) return cmd_sample(c_sample, sample_data, sample_init);
    if (*diag) return cmd_diagnose(c_diag, diag_chain, diag_bins);
    if (*scen) return cmd_scenario(c_scen, scen_name, threads);
    if (*shapes) return cmd_shapes(c_shapes, shapes_chain, shapes_count, shapes_points);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateCurve& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
