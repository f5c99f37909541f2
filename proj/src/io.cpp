#include "shapereg/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace shapereg::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
  return f;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw InvalidInput(what + ": '" + t + "' is not a number");
  return v;
}

// Numbers as written by chain_record_to_line: JSON numbers or null.
std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

double json_to_double(const json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw InvalidInput("chain record: field '" + field + "' is not numeric");
  return j.get<double>();
}

}  // namespace

// ---------------------------------------------------------------------------

void write_point_table(std::ostream& os, const PointTable& t) {
  const bool with_sigma = !t.sigma2.empty();
  if (t.s.size() != t.points.size() || (with_sigma && t.sigma2.size() != t.points.size()))
    throw ContractViolation("write_point_table: column lengths differ");
  os << (with_sigma ? "index,s,x,y,sigma2\n" : "index,s,x,y\n");
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    os << i << ',' << format_double(t.s[i]) << ',' << format_double(t.points[i].x) << ','
       << format_double(t.points[i].y);
    if (with_sigma) os << ',' << format_double(t.sigma2[i]);
    os << '\n';
  }
}

PointTable read_point_table(std::istream& is, bool require_sigma2) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("point table: missing header");
  const auto header = split(trim(line), ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
  std::vector<std::string> required{"index", "s", "x", "y"};
  if (require_sigma2) required.emplace_back("sigma2");
  for (const auto& name : required)
    if (!col.count(name)) throw InvalidInput("point table: missing column '" + name + "'");
  const bool has_sigma = col.count("sigma2") > 0;

  PointTable t;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != header.size())
      throw InvalidInput("point table: row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                         " fields, expected " + std::to_string(header.size()));
    const std::string where = "point table row " + std::to_string(row);
    const double idx = parse_double(f[col["index"]], where + " column 'index'");
    if (idx != static_cast<double>(row)) throw InvalidInput(where + ": index out of sequence");
    t.s.push_back(parse_double(f[col["s"]], where + " column 's'"));
    t.points.push_back({parse_double(f[col["x"]], where + " column 'x'"), parse_double(f[col["y"]], where + " column 'y'")});
    if (has_sigma) t.sigma2.push_back(parse_double(f[col["sigma2"]], where + " column 'sigma2'"));
    ++row;
  }
  return t;
}

void write_observations(const std::string& path, const ObservationSet& obs) {
  auto f = open_out(path);
  write_point_table(f, {obs.s, obs.y, obs.sigma2});
}

ObservationSet read_observations(const std::string& path) {
  auto f = open_in(path);
  PointTable t = read_point_table(f, true);
  ObservationSet o{std::move(t.points), std::move(t.s), std::move(t.sigma2)};
  o.validate();
  return o;
}

void write_curve(const std::string& path, const ClosedCurve2D& q) {
  auto f = open_out(path);
  PointTable t;
  t.s = ObservationSet::equispaced(q.size());
  t.points.assign(q.points().begin(), q.points().end());
  write_point_table(f, t);
}

PointTable read_curve(const std::string& path) {
  auto f = open_in(path);
  return read_point_table(f, false);
}

// ---------------------------------------------------------------------------

std::string chain_record_to_line(const ChainRecord& r) {
  std::string s = "{\"iteration\":" + std::to_string(r.iteration) + ",\"accepted\":" + (r.accepted ? "true" : "false") +
                  ",\"phi\":" + json_number(r.phi) + ",\"sigma2\":" + json_number(r.sigma2) + ",\"p0\":[";
  for (std::size_t i = 0; i < r.p0.size(); ++i) s += (i ? "," : "") + json_number(r.p0[i]);
  s += "],\"nu\":[";
  for (std::size_t i = 0; i < r.nu.size(); ++i) s += (i ? "," : "") + json_number(r.nu[i]);
  s += "]}";
  return s;
}

ChainRecord chain_record_from_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("chain record: malformed JSON (") + e.what() + ")");
  }
  if (!j.is_object()) throw InvalidInput("chain record: expected an object");
  for (const char* key : {"iteration", "accepted", "phi", "sigma2", "p0", "nu"})
    if (!j.contains(key)) throw InvalidInput(std::string("chain record: missing field '") + key + "'");
  ChainRecord r;
  if (!j["iteration"].is_number_unsigned()) throw InvalidInput("chain record: field 'iteration' is not a count");
  if (!j["accepted"].is_boolean()) throw InvalidInput("chain record: field 'accepted' is not a boolean");
  r.iteration = j["iteration"].get<std::size_t>();
  r.accepted = j["accepted"].get<bool>();
  r.phi = json_to_double(j["phi"], "phi");
  r.sigma2 = json_to_double(j["sigma2"], "sigma2");
  for (const char* key : {"p0", "nu"}) {
    if (!j[key].is_array()) throw InvalidInput(std::string("chain record: field '") + key + "' is not an array");
    auto& dst = std::string(key) == "p0" ? r.p0 : r.nu;
    for (const auto& v : j[key]) dst.push_back(json_to_double(v, key));
  }
  for (const auto& [k, v] : j.items())
    if (k != "iteration" && k != "accepted" && k != "phi" && k != "sigma2" && k != "p0" && k != "nu")
      throw InvalidInput("chain record: unknown field '" + k + "'");
  return r;
}

void write_chain(const std::string& path, const std::vector<ChainRecord>& records) {
  auto f = open_out(path);
  for (const auto& r : records) f << chain_record_to_line(r) << '\n';
}

std::vector<ChainRecord> read_chain(const std::string& path) {
  auto f = open_in(path);
  std::vector<ChainRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(chain_record_from_line(line));
    } catch (const InvalidInput& e) {
      throw InvalidInput(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Reads the keys of one config section, rejecting unknown ones.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config: '" + name_ + "' must be an object");
  }
  ~Section() = default;

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError("config: unknown key '" + path(k) + "'");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }
  const json& raw(const std::string& k) { return j_.at(k); }
  std::string path(const std::string& k) const { return name_ + "." + k; }

  void get(const std::string& k, double& out) {
    if (!has(k)) return;
    if (!j_[k].is_number()) throw ValidationError("config: '" + path(k) + "' must be a number");
    out = j_[k].get<double>();
  }
  void get(const std::string& k, std::size_t& out) {
    if (!has(k)) return;
    if (!j_[k].is_number_unsigned()) throw ValidationError("config: '" + path(k) + "' must be a non-negative integer");
    out = j_[k].get<std::size_t>();
  }
  void get(const std::string& k, int& out) {
    if (!has(k)) return;
    if (!j_[k].is_number_integer()) throw ValidationError("config: '" + path(k) + "' must be an integer");
    out = j_[k].get<int>();
  }
  void get(const std::string& k, bool& out) {
    if (!has(k)) return;
    if (!j_[k].is_boolean()) throw ValidationError("config: '" + path(k) + "' must be true or false");
    out = j_[k].get<bool>();
  }
  void get(const std::string& k, std::uint64_t& out, int) {
    if (!has(k)) return;
    if (!j_[k].is_number_unsigned()) throw ValidationError("config: '" + path(k) + "' must be a non-negative integer");
    out = j_[k].get<std::uint64_t>();
  }
  template <class T>
  void get_list(const std::string& k, std::vector<T>& out) {
    if (!has(k)) return;
    if (!j_[k].is_array()) throw ValidationError("config: '" + path(k) + "' must be an array");
    out.clear();
    for (const auto& v : j_[k]) {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("config: '" + path(k) + "' entries must be numbers");
      } else {
        if (!v.is_number_unsigned()) throw ValidationError("config: '" + path(k) + "' entries must be non-negative integers");
      }
      out.push_back(v.get<T>());
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_prior(Section& parent, const std::string& key, PriorSpec& p) {
  if (!parent.has(key)) return;
  Section s(parent.raw(key), parent.path(key));
  s.get("delta", p.delta);
  s.get("alpha", p.alpha);
  s.get("ell", p.ell);
  s.get("n_modes", p.n_modes);
  s.finish();
}

json prior_json(const PriorSpec& p) {
  return {{"delta", p.delta}, {"alpha", p.alpha}, {"ell", p.ell}, {"n_modes", p.n_modes}};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: malformed JSON (") + e.what() + ")");
  }
  RunConfig c;
  Section root(j, "config");
  auto& m = c.setup.model;
  if (root.has("model")) {
    Section s(root.raw("model"), "model");
    s.get("steps", m.shoot.steps);
    s.get("lie_steps", m.lie_steps);
    s.get("n_g", m.shoot.n_g);
    s.get("hamiltonian_tol", m.shoot.hamiltonian_tol);
    if (s.has("metric")) {
      Section mt(s.raw("metric"), "model.metric");
      mt.get("alpha", m.shoot.metric.alpha);
      mt.get("gamma", m.shoot.metric.gamma);
      mt.finish();
    }
    s.finish();
  }
  if (root.has("prior")) {
    Section s(root.raw("prior"), "prior");
    read_prior(s, "p0", c.setup.priors.momentum);
    read_prior(s, "nu", c.setup.priors.reparam);
    s.finish();
  }
  if (root.has("sampler")) {
    auto& sc = c.setup.sampler;
    Section s(root.raw("sampler"), "sampler");
    s.get("beta", sc.beta);
    s.get("n_iters", sc.n_iters);
    s.get("thinning", sc.thinning);
    s.get("burn_in", sc.burn_in);
    s.get("adapt_beta", sc.adapt_beta);
    s.get("target_accept", sc.target_accept);
    s.get("infer_sigma2", sc.infer_sigma2);
    s.get("ig_a0", sc.ig_a0);
    s.get("ig_b0", sc.ig_b0);
    s.finish();
  }
  if (root.has("optimizer")) {
    auto& o = c.setup.optimizer;
    Section s(root.raw("optimizer"), "optimizer");
    s.get("max_iters", o.max_iters);
    s.get("grad_tol", o.grad_tol);
    s.get("step_tol", o.step_tol);
    s.get("wolfe_c1", o.wolfe_c1);
    s.get("wolfe_c2", o.wolfe_c2);
    s.get("max_line_search", o.max_line_search);
    s.finish();
  }
  if (root.has("scenario")) {
    auto& sp = c.scenario;
    Section s(root.raw("scenario"), "scenario");
    if (s.has("kind")) {
      if (!s.raw("kind").is_string()) throw ValidationError("config: 'scenario.kind' must be a string");
      sp.kind = scenario_kind_from_string(s.raw("kind").get<std::string>());
    }
    s.get_list("n_ladder", sp.n_ladder);
    s.get("sigma", sp.sigma);
    s.get_list("r_values", sp.r_values);
    s.get("n_obs_multimodality", sp.n_obs_multimodality);
    s.get("sigma_multimodality", sp.sigma_multimodality);
    s.get("n_obs_partial", sp.n_obs_partial);
    s.get("sigma_d", sp.sigma_d);
    s.get("sigma_l", sp.sigma_l);
    s.get("noisy_fraction", sp.noisy_fraction);
    s.get("data_resolution", sp.data_resolution);
    s.get("model_resolution", sp.model_resolution);
    s.get("data_steps", sp.data_steps);
    s.get("truth_modes", sp.truth_modes);
    s.get("seed", sp.seed, 0);
    s.finish();
  }
  root.finish();

  c.setup.model.validate();
  c.setup.sampler.validate();
  c.setup.optimizer.validate();
  c.setup.priors.momentum.validate();
  c.setup.priors.reparam.validate();
  c.scenario.validate();
  const auto report = validate_spec(c.setup.priors, c.setup.model.shoot.metric);
  if (!report.ok()) throw ValidationError("config: " + report.errors.front());
  return c;
}

RunConfig load_config(const std::string& path) {
  auto f = open_in(path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string config_to_string(const RunConfig& c) {
  const auto& m = c.setup.model;
  const auto& sc = c.setup.sampler;
  const auto& o = c.setup.optimizer;
  const auto& sp = c.scenario;
  json j;
  j["model"] = {{"steps", m.shoot.steps},
                {"lie_steps", m.lie_steps},
                {"n_g", m.shoot.n_g},
                {"hamiltonian_tol", m.shoot.hamiltonian_tol},
                {"metric", {{"alpha", m.shoot.metric.alpha}, {"gamma", m.shoot.metric.gamma}}}};
  j["prior"] = {{"p0", prior_json(c.setup.priors.momentum)}, {"nu", prior_json(c.setup.priors.reparam)}};
  j["sampler"] = {{"beta", sc.beta},
                  {"n_iters", sc.n_iters},
                  {"thinning", sc.thinning},
                  {"burn_in", sc.burn_in},
                  {"adapt_beta", sc.adapt_beta},
                  {"target_accept", sc.target_accept},
                  {"infer_sigma2", sc.infer_sigma2},
                  {"ig_a0", sc.ig_a0},
                  {"ig_b0", sc.ig_b0}};
  j["optimizer"] = {{"max_iters", o.max_iters}, {"grad_tol", o.grad_tol},   {"step_tol", o.step_tol},
                    {"wolfe_c1", o.wolfe_c1},   {"wolfe_c2", o.wolfe_c2},   {"max_line_search", o.max_line_search}};
  j["scenario"] = {{"kind", to_string(sp.kind)},
                   {"n_ladder", sp.n_ladder},
                   {"sigma", sp.sigma},
                   {"r_values", sp.r_values},
                   {"n_obs_multimodality", sp.n_obs_multimodality},
                   {"sigma_multimodality", sp.sigma_multimodality},
                   {"n_obs_partial", sp.n_obs_partial},
                   {"sigma_d", sp.sigma_d},
                   {"sigma_l", sp.sigma_l},
                   {"noisy_fraction", sp.noisy_fraction},
                   {"data_resolution", sp.data_resolution},
                   {"model_resolution", sp.model_resolution},
                   {"data_steps", sp.data_steps},
                   {"truth_modes", sp.truth_modes},
                   {"seed", sp.seed}};
  return j.dump(2);  // object keys are sorted, so the dump is canonical
}

std::uint64_t config_digest(const RunConfig& cfg, std::uint64_t seed) {
  const std::string text = config_to_string(cfg) + "\nseed=" + std::to_string(seed);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const std::string& command, const RunConfig& cfg, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.seed = seed;
  m.digest = config_digest(cfg, seed);
  m.scenario_kind = to_string(cfg.scenario.kind);
  m.data_resolution = cfg.scenario.data_resolution;
  m.model_resolution = cfg.scenario.model_resolution;
  m.n_g = cfg.setup.model.shoot.n_g;
  m.steps = cfg.setup.model.shoot.steps;
  m.data_steps = cfg.scenario.data_steps;
  m.started = utc_timestamp();
  return m;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  char digest[20];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(m.digest));
  json j{{"tool_version", m.tool_version},
         {"command", m.command},
         {"seed", m.seed},
         {"config_digest", digest},
         {"scenario_kind", m.scenario_kind},
         {"resolutions",
          {{"data_n_p", m.data_resolution}, {"model_n_p", m.model_resolution}, {"n_g", m.n_g}, {"steps", m.steps},
           {"data_steps", m.data_steps}}},
         {"started", m.started},
         {"finished", m.finished},
         {"files", m.files},
         {"failures", m.failures}};
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

std::string vec_json(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + json_number(v[i]);
  return s + "]";
}

std::vector<double> read_vec(const json& j, const std::string& key, const std::string& what) {
  if (!j.contains(key)) throw InvalidInput(what + ": missing field '" + key + "'");
  if (!j[key].is_array()) throw InvalidInput(what + ": field '" + key + "' is not an array");
  std::vector<double> out;
  for (const auto& v : j[key]) out.push_back(json_to_double(v, key));
  return out;
}

json read_json_file(const std::string& path) {
  auto f = open_in(path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace

void write_summary(const std::string& path, const ChainSummary& s, const std::optional<ChainResult>& chain) {
  auto f = open_out(path);
  f << "{\n";
  f << "  \"records\": " << s.records << ",\n";
  f << "  \"record_acceptance_rate\": " << json_number(s.acceptance_rate) << ",\n";
  if (chain) {
    f << "  \"acceptance_rate\": " << json_number(chain->acceptance_rate()) << ",\n";
    f << "  \"final_beta\": " << json_number(chain->final_beta) << ",\n";
  }
  f << "  \"sigma2_mean\": " << json_number(s.sigma2_mean) << ",\n";
  f << "  \"sigma2_ess\": " << json_number(s.sigma2_ess) << ",\n";
  f << "  \"sigma2_quantiles\": " << vec_json(s.sigma2_quantiles) << ",\n";
  f << "  \"p0_mode_mean\": " << vec_json(s.p0_mode_mean) << ",\n";
  f << "  \"p0_mode_std\": " << vec_json(s.p0_mode_std) << ",\n";
  f << "  \"p0_mode_ess\": " << vec_json(s.p0_mode_ess) << ",\n";
  f << "  \"nu_mode_mean\": " << vec_json(s.nu_mode_mean) << ",\n";
  f << "  \"nu_mode_std\": " << vec_json(s.nu_mode_std) << ",\n";
  f << "  \"nu_mode_ess\": " << vec_json(s.nu_mode_ess) << ",\n";
  f << "  \"p0_point_mean\": " << vec_json(s.p0_point_mean) << ",\n";
  f << "  \"p0_point_std\": " << vec_json(s.p0_point_std) << ",\n";
  f << "  \"nu_point_mean\": " << vec_json(s.nu_point_mean) << ",\n";
  f << "  \"nu_point_std\": " << vec_json(s.nu_point_std) << "\n";
  f << "}\n";
}

void write_histograms(const std::string& path, const ChainSummary& s) {
  auto f = open_out(path);
  f << "field,index,bin,lo,hi,count\n";
  auto emit = [&f](const std::string& field, std::size_t index, const Histogram& h) {
    const double w = h.bin_width();
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      f << field << ',' << index << ',' << b << ',' << format_double(h.lo + w * static_cast<double>(b)) << ','
        << format_double(h.lo + w * static_cast<double>(b + 1)) << ',' << h.counts[b] << '\n';
  };
  for (std::size_t i = 0; i < s.p0_mode_hist.size(); ++i) emit("p0", i, s.p0_mode_hist[i]);
  for (std::size_t i = 0; i < s.nu_mode_hist.size(); ++i) emit("nu", i, s.nu_mode_hist[i]);
  emit("sigma2", 0, s.sigma2_hist);
}

void write_point_bands(const std::string& path, const ChainSummary& s) {
  auto f = open_out(path);
  f << "index,s,p0_mean,p0_std,nu_mean,nu_std\n";
  const std::size_t n = s.p0_point_mean.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double sj = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    f << j << ',' << format_double(sj) << ',' << format_double(s.p0_point_mean[j]) << ','
      << format_double(s.p0_point_std[j]) << ',' << format_double(s.nu_point_mean[j]) << ','
      << format_double(s.nu_point_std[j]) << '\n';
  }
}

void write_truth(const std::string& path, const Truth& t) {
  auto f = open_out(path);
  f << "{\"resolution\":" << t.resolution << ",\"modes\":" << t.modes << ",\"p0\":" << vec_json(t.p0)
    << ",\"nu\":" << vec_json(t.nu) << ",\"sigma2\":" << vec_json(t.sigma2) << "}\n";
}

Truth read_truth(const std::string& path) {
  const json j = read_json_file(path);
  Truth t;
  for (const char* key : {"resolution", "modes"})
    if (!j.contains(key) || !j[key].is_number_unsigned())
      throw InvalidInput(path + ": missing or invalid field '" + key + "'");
  t.resolution = j["resolution"].get<std::size_t>();
  t.modes = j["modes"].get<std::size_t>();
  t.p0 = read_vec(j, "p0", path);
  t.nu = read_vec(j, "nu", path);
  t.sigma2 = read_vec(j, "sigma2", path);
  return t;
}

void write_map(const std::string& path, const MapEstimate& m) {
  auto f = open_out(path);
  f << "{\"value\":" << json_number(m.value) << ",\"initial_value\":" << json_number(m.initial_value)
    << ",\"iterations\":" << m.iterations << ",\"converged\":" << (m.converged ? "true" : "false")
    << ",\"degraded\":" << (m.degraded ? "true" : "false") << ",\"reason\":" << json(m.reason).dump()
    << ",\"p0\":" << vec_json(m.p0) << ",\"nu\":" << vec_json(m.nu) << "}\n";
}

MapEstimate read_map(const std::string& path) {
  const json j = read_json_file(path);
  MapEstimate m;
  m.p0 = read_vec(j, "p0", path);
  m.nu = read_vec(j, "nu", path);
  if (j.contains("value")) m.value = json_to_double(j["value"], "value");
  if (j.contains("initial_value")) m.initial_value = json_to_double(j["initial_value"], "initial_value");
  if (j.contains("iterations") && j["iterations"].is_number_unsigned()) m.iterations = j["iterations"].get<std::size_t>();
  if (j.contains("converged") && j["converged"].is_boolean()) m.converged = j["converged"].get<bool>();
  if (j.contains("degraded") && j["degraded"].is_boolean()) m.degraded = j["degraded"].get<bool>();
  if (j.contains("reason") && j["reason"].is_string()) m.reason = j["reason"].get<std::string>();
  return m;
}

}  // namespace shapereg::io
