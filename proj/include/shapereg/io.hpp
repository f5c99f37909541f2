#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shapereg/inference.hpp"
#include "shapereg/scenarios.hpp"

namespace shapereg::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Formats a double with 17 significant digits; non-finite values as "nan",
/// "inf" or "-inf".
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Point tables: header "index,s,x,y" or "index,s,x,y,sigma2".
// ---------------------------------------------------------------------------

struct PointTable {
  std::vector<double> s;
  std::vector<Vec2> points;
  std::vector<double> sigma2;  // empty when the column is absent
};

void write_point_table(std::ostream& os, const PointTable& t);
PointTable read_point_table(std::istream& is, bool require_sigma2);

void write_observations(const std::string& path, const ObservationSet& obs);
ObservationSet read_observations(const std::string& path);
void write_curve(const std::string& path, const ClosedCurve2D& q);
PointTable read_curve(const std::string& path);

// ---------------------------------------------------------------------------
// Chains: one JSON object per line.
// ---------------------------------------------------------------------------

std::string chain_record_to_line(const ChainRecord& r);
ChainRecord chain_record_from_line(const std::string& line);
void write_chain(const std::string& path, const std::vector<ChainRecord>& records);
std::vector<ChainRecord> read_chain(const std::string& path);

// ---------------------------------------------------------------------------
// Configuration: a JSON document with sections model, prior, sampler,
// optimizer and scenario. Unknown keys are rejected.
// ---------------------------------------------------------------------------

struct RunConfig {
  InferenceSetup setup{};
  ScenarioSpec scenario{};
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_string(const RunConfig& cfg);

/// FNV-1a 64-bit digest of the canonical config dump and the seed.
std::uint64_t config_digest(const RunConfig& cfg, std::uint64_t seed);

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  std::uint64_t seed = 0;
  std::uint64_t digest = 0;
  std::string scenario_kind;
  std::size_t data_resolution = 0;
  std::size_t model_resolution = 0;
  std::size_t n_g = 0;
  int steps = 0;
  int data_steps = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> files;
  std::vector<std::string> failures;
};

RunManifest make_manifest(const std::string& command, const RunConfig& cfg, std::uint64_t seed);
void write_manifest(const std::string& path, const RunManifest& m);
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Summaries and truth.
// ---------------------------------------------------------------------------

void write_summary(const std::string& path, const ChainSummary& s, const std::optional<ChainResult>& chain = {});
/// Columns: field,index,bin,lo,hi,count with field in {p0, nu, sigma2}.
void write_histograms(const std::string& path, const ChainSummary& s);
/// Columns: index,s,p0_mean,p0_std,nu_mean,nu_std.
void write_point_bands(const std::string& path, const ChainSummary& s);
void write_truth(const std::string& path, const Truth& t);
Truth read_truth(const std::string& path);
void write_map(const std::string& path, const MapEstimate& m);
MapEstimate read_map(const std::string& path);

}  // namespace shapereg::io
