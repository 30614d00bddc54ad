#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/aggregation.hpp"
#include "agora/asset.hpp"
#include "agora/geo.hpp"
#include "agora/service.hpp"
#include "agora/time.hpp"

namespace agora::sim {

using Json = nlohmann::ordered_json;
using asset::QuestionId;

struct TraceSpec {
  std::vector<geo::GeoPoint> waypoints;
  double speed_mps = 5.0;
  std::int64_t sample_period_ms = 1000;
  double gps_noise_sigma_m = 0.0;
  std::uint64_t seed = 0;
  /// Time spent standing at every waypoint after the first.
  double dwell_s = 0.0;
  Timestamp start;
};

struct TracePoint {
  Timestamp t;
  geo::GeoPoint truth;
  /// Position the phone reports: truth plus Gaussian noise.
  geo::GeoPoint reported;
};

/// Moves along great circles between waypoints at constant speed, standing
/// still for dwell_s at each later waypoint. Samples every period and also
/// at each waypoint arrival, so a noiseless trace passes through every
/// waypoint. Throws Range on an invalid spec.
std::vector<TracePoint> generate_trace(const TraceSpec& spec);

struct AnswerRule {
  enum class Kind { Fixed, Categorical, Scripted, Text };
  Kind kind = Kind::Fixed;
  std::int64_t option = 0;
  /// (option id, probability); probabilities sum to 1.
  std::vector<std::pair<std::int64_t, double>> distribution;
  /// One option per answer, cycling; indexed by the participant's answer count.
  std::vector<std::int64_t> script;
  std::string text;
};

struct BehaviorPolicy {
  std::map<QuestionId, AnswerRule> rules;
  std::optional<AnswerRule> fallback;
  /// Present the QR token handed out for the question when one is required.
  bool present_token = true;
  /// Skip answering these questions.
  std::vector<QuestionId> skip;
};

struct CohortEntry {
  int count = 1;
  std::string asset;  // key into Scenario::assets
  TraceSpec trace;    // start and seed are offset per participant
  /// Route through the asset's points of interest instead of trace.waypoints.
  bool route_from_asset = true;
  std::int64_t start_offset_ms = 0;
  /// Added per participant within the entry.
  std::int64_t start_stagger_ms = 0;
  BehaviorPolicy policy;
  bool upload_sensors = true;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  Timestamp start;
  std::string secret_key = "simulation-secret";
  std::string designer_token = "designer";
  std::string task_name = "task";
  bool auto_assign = false;
  /// Asset documents by key, in interchange format.
  std::map<std::string, std::string> assets;
  std::vector<CohortEntry> cohort;
};

/// Loads a scenario config; asset paths are resolved relative to the file.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const Json& j, const std::string& base_dir);

struct LiveReading {
  Timestamp t;
  std::size_t events = 0;  // aggregation events seen so far
  std::optional<double> avg;
  std::int64_t count = 0;
};

struct SimulationResult {
  /// NDJSON lines: header, service events, client annotations, exports.
  std::vector<Json> log;
  std::string task_id;
  std::map<std::string, std::string> exports;
  std::vector<LiveReading> live;
  std::int64_t answers_accepted = 0;
  std::map<std::string, std::int64_t> rejections;  // error name -> count
  std::int64_t samples_accepted = 0;
  std::unique_ptr<service::Service> service;

  std::string log_text() const;
};

/// Drives every participant of `scenario` through the service in-process on
/// a virtual clock. Deterministic in the scenario.
SimulationResult run_cohort(const Scenario& scenario);

std::vector<Json> parse_log(const std::string& text);

struct ReplayResult {
  std::unique_ptr<service::Service> service;
  std::map<std::string, std::string> exports;
};

/// Refolds the logged service events into a fresh service and compares the
/// exports with those recorded in the log. Throws DivergenceDetected with
/// the first divergent sequence number.
ReplayResult replay(const std::vector<Json>& log);

/// Aggregation events (join/update/leave rows) of a task export.
std::vector<aggregation::Event> export_events(const std::string& export_ndjson);

struct AggregateCheck {
  std::optional<double> engine;
  std::optional<double> oracle;
  std::size_t events = 0;
  /// Engine and oracle agreed after every prefix of the event sequence.
  bool prefix_equal = true;
  std::optional<std::size_t> first_mismatch;
};

/// Feeds `events` through the engine and the brute-force oracle.
AggregateCheck check_aggregate(std::span<const aggregation::Event> events, aggregation::Fn fn);

}  // namespace agora::sim
