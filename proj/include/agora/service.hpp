#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/aggregation.hpp"
#include "agora/asset.hpp"
#include "agora/error.hpp"
#include "agora/presence.hpp"
#include "agora/project.hpp"
#include "agora/sensing.hpp"
#include "agora/session.hpp"
#include "agora/time.hpp"

namespace agora::service {

using Json = nlohmann::ordered_json;

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string secret_key = "change-me";
  std::string data_dir;
  std::vector<std::string> designer_tokens{"designer"};
  /// Write a checkpoint every this many events (0 disables).
  std::uint64_t snapshot_every = 1000;
};

/// Reads a JSON config file, then applies AGORA_LISTEN ("host:port"),
/// AGORA_SECRET_KEY, AGORA_DATA_DIR and AGORA_DESIGNER_TOKEN overrides.
Config load_config(const std::string& path);
Config apply_env_overrides(Config cfg);

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  /// Bearer token from the Authorization header, if any.
  std::string bearer;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// One accepted state mutation. `digest` chains the previous digest with
/// this record's kind, timestamp, actor, payload and outcome.
struct EventRecord {
  std::uint64_t seq = 0;
  Timestamp ts;
  std::string actor;
  std::string kind;
  Json payload;
  Json outcome;
  std::string digest;
};

Json to_json(const EventRecord& e);
EventRecord event_from_json(const Json& j);

int http_status(ErrorCode code) noexcept;

using Clock = std::function<Timestamp()>;
using EventSink = std::function<void(const EventRecord&)>;

/// Lifecycle service: designer CRUD, participant subscription and data
/// collection, analytics. Every mutation is a command folded into state and
/// appended to the event log; replaying the log reproduces the state.
/// handle() may be called concurrently; mutations are serialized.
class Service {
 public:
  Service(Config config, Clock clock);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& request);

  void set_event_sink(EventSink sink);
  std::vector<EventRecord> events() const;
  std::string last_digest() const;

  /// Newline-delimited export: task header, answers, sensor samples, then
  /// aggregation events, each in acceptance order. Throws NotFound.
  std::string export_task(const std::string& task_id) const;
  std::vector<std::string> task_ids() const;
  /// Canonical dump of all state; equal dumps mean equal services.
  std::string dump_state() const;

  /// Re-applies one logged event, checking sequence and digest. Throws
  /// DivergenceDetected naming the sequence number on any mismatch.
  void apply_logged(const EventRecord& record);

  /// Fresh service folded from `events`.
  static std::unique_ptr<Service> refold(Config config, std::span<const EventRecord> events);

  std::string participant_token(const std::string& participant_id) const;
  presence::ChallengeRegistry& challenges() noexcept;
  const Config& config() const noexcept { return config_; }

 private:
  struct State;

  Response route(const Request& request);
  Response mutate(const std::string& actor, const std::string& kind, Json payload);
  Json apply(const std::string& kind, const Json& payload, Timestamp ts);
  Json append(const std::string& actor, const std::string& kind, Json payload, Json outcome, Timestamp ts);

  void require_designer(const Request& request) const;
  void require_participant(const Request& request, const std::string& participant_id) const;
  void require_session_owner(const Request& request, const std::string& session_id) const;

  Config config_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::unique_ptr<State> state_;
  std::vector<EventRecord> log_;
  EventSink sink_;
};

/// Appends events to `<data_dir>/events.ndjson` and writes checkpoints to
/// `<data_dir>/snapshot.json`.
class FileEventLog {
 public:
  explicit FileEventLog(std::string data_dir, std::uint64_t snapshot_every = 1000);

  /// Events in the log. A torn last line is skipped; `valid_bytes`, if
  /// given, receives the length of the intact prefix.
  std::vector<EventRecord> load(std::uintmax_t* valid_bytes = nullptr) const;
  /// load(), then truncates a torn last line so appends start clean.
  std::vector<EventRecord> recover();
  void append(const EventRecord& record);
  /// Throws DivergenceDetected when the checkpoint's digest does not match
  /// the refolded log at the checkpoint's sequence number.
  void verify_checkpoint(std::span<const EventRecord> events) const;

 private:
  std::string dir_;
  std::uint64_t snapshot_every_;
};

/// Service restored from the data directory (if any) with persistence wired.
std::unique_ptr<Service> open_persistent(const Config& config, Clock clock);

/// Blocks serving HTTP on config.host:config.port.
int serve_http(Service& service, const Config& config);

}  // namespace agora::service
