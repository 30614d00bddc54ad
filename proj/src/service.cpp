#include "agora/service.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "agora/crypto.hpp"

namespace agora::service {

namespace {

using asset::QuestionId;

struct AssetEntry {
  std::string id;
  std::string project_id;
  std::shared_ptr<const asset::Asset> asset;
  std::vector<asset::Finding> findings;
};

struct AssignmentEntry {
  asset::Assignment assignment;
  /// Frozen when the task is (or becomes) active; null while in draft.
  std::shared_ptr<const asset::Asset> snapshot;
};

struct CodeEntry {
  std::string code;
  std::string project_id;
  std::optional<std::int64_t> max_uses;
  std::int64_t uses = 0;
  std::optional<Timestamp> expires_at;
};

struct SessionEntry {
  modality::TaskSession session;
  std::string task_id;
  sensing::SampleGate gate;
};

struct TaskData {
  std::vector<Json> answers;
  std::vector<Json> samples;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, const std::string& path = {}) {
  throw Error(code, message, path);
}

Json parse_json(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::BadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object()) fail(ErrorCode::BadRequest, "expected a JSON object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::BadRequest, std::string("missing field ") + key, key);
  return *it;
}

std::string str_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_string()) fail(ErrorCode::BadRequest, std::string("field ") + key + " must be a string", key);
  return v.get<std::string>();
}

double num_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_number()) fail(ErrorCode::BadRequest, std::string("field ") + key + " must be a number", key);
  return v.get<double>();
}

std::int64_t int_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_number_integer()) fail(ErrorCode::BadRequest, std::string("field ") + key + " must be an integer", key);
  return v.get<std::int64_t>();
}

geo::GeoPoint point_field(const Json& obj) {
  try {
    return geo::GeoPoint(num_field(obj, "lat"), num_field(obj, "lon"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Range) fail(ErrorCode::BadRequest, e.what(), "lat");
    throw;
  }
}

Timestamp time_field(const Json& v, const char* key) {
  if (v.is_number_integer()) return Timestamp{v.get<std::int64_t>()};
  if (v.is_string()) {
    if (auto t = parse_iso8601(v.get<std::string>())) return *t;
  }
  fail(ErrorCode::BadRequest, std::string("field ") + key + " must be an ISO-8601 UTC time or epoch ms", key);
}

Json json_point(const geo::GeoPoint& p) { return Json{{"lat", p.lat_deg()}, {"lon", p.lon_deg()}}; }

Json json_time(std::optional<Timestamp> t) { return t ? Json(to_iso8601(*t)) : Json(nullptr); }

Json payload_json(const modality::AnswerPayload& p) {
  if (const auto* ids = std::get_if<std::vector<std::int64_t>>(&p)) return Json{{"options", *ids}};
  return Json{{"text", std::get<std::string>(p)}};
}

Json statuses_json(const modality::TaskSession& s) {
  Json out = Json::object();
  for (const auto& [qid, st] : s.statuses()) out[std::to_string(qid)] = std::string(modality::to_string(st));
  return out;
}

std::string task_status_name(asset::TaskStatus s) {
  switch (s) {
    case asset::TaskStatus::Draft: return "Draft";
    case asset::TaskStatus::Active: return "Active";
    case asset::TaskStatus::Closed: return "Closed";
  }
  return "";
}

Json findings_json(const std::vector<asset::Finding>& findings) {
  Json arr = Json::array();
  for (const auto& f : findings) {
    arr.push_back({{"severity", f.severity == asset::Finding::Severity::Error ? "error" : "notice"},
                   {"path", f.path},
                   {"message", f.message}});
  }
  return arr;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '/')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string chain_digest(const std::string& prev, const EventRecord& e) {
  std::string material = prev;
  material += '\n' + e.kind + '\n' + std::to_string(e.ts.ms) + '\n' + e.actor + '\n' + e.payload.dump() + '\n' +
              e.outcome.dump();
  return crypto::to_hex(crypto::sha256(material));
}

}  // namespace

struct Service::State {
  explicit State(const std::string& secret) : challenges(secret) {}

  std::map<std::string, asset::Project> projects;
  std::map<std::string, AssetEntry> assets;
  std::map<std::string, asset::Task> tasks;
  std::map<std::string, AssignmentEntry> assignments;
  std::map<std::string, CodeEntry> codes;
  std::map<std::string, asset::Participant> participants;
  std::map<std::string, SessionEntry> sessions;
  std::map<std::string, aggregation::LocalizedAggregator> aggregators;
  std::map<std::string, TaskData> task_data;
  presence::ChallengeRegistry challenges;
  std::uint64_t counter = 0;

  std::string next_id(const char* prefix) { return std::string(prefix) + std::to_string(++counter); }

  asset::Project& project(const std::string& id) {
    auto it = projects.find(id);
    if (it == projects.end()) fail(ErrorCode::NotFound, "unknown project " + id);
    return it->second;
  }
  AssetEntry& asset_entry(const std::string& id) {
    auto it = assets.find(id);
    if (it == assets.end()) fail(ErrorCode::NotFound, "unknown asset " + id);
    return it->second;
  }
  asset::Task& task(const std::string& id) {
    auto it = tasks.find(id);
    if (it == tasks.end()) fail(ErrorCode::NotFound, "unknown task " + id);
    return it->second;
  }
  AssignmentEntry& assignment(const std::string& id) {
    auto it = assignments.find(id);
    if (it == assignments.end()) fail(ErrorCode::NotFound, "unknown assignment " + id);
    return it->second;
  }
  asset::Participant& participant(const std::string& id) {
    auto it = participants.find(id);
    if (it == participants.end()) fail(ErrorCode::NotFound, "unknown participant " + id);
    return it->second;
  }
  SessionEntry& session(const std::string& id) {
    auto it = sessions.find(id);
    if (it == sessions.end()) fail(ErrorCode::NotFound, "unknown session " + id);
    return it->second;
  }
  aggregation::LocalizedAggregator& aggregator(const std::string& task_id) {
    auto it = aggregators.find(task_id);
    if (it == aggregators.end()) it = aggregators.emplace(task_id, aggregation::LocalizedAggregator(task_id)).first;
    return it->second;
  }
};

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Syntax:
    case ErrorCode::Schema:
    case ErrorCode::Range:
    case ErrorCode::BadRequest:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
    case ErrorCode::NotEnrolled:
    case ErrorCode::ProofRequired:
    case ErrorCode::ProofInvalid:
      return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownQuestion:
      return 404;
    case ErrorCode::PayloadMismatch:
      return 422;
    case ErrorCode::DivergenceDetected:
      return 500;
    case ErrorCode::CoincidentPoints:
    case ErrorCode::NoTask:
    case ErrorCode::AssignmentClosed:
    case ErrorCode::SessionComplete:
    case ErrorCode::NotLocalized:
    case ErrorCode::AlreadyAnswered:
    case ErrorCode::AlreadyUsed:
    case ErrorCode::AlreadyJoined:
    case ErrorCode::NotJoined:
    case ErrorCode::Conflict:
      return 409;
  }
  return 500;
}

Json to_json(const EventRecord& e) {
  Json j = Json::object();
  j["seq"] = e.seq;
  j["ts"] = to_iso8601(e.ts);
  j["actor"] = e.actor;
  j["kind"] = e.kind;
  j["payload"] = e.payload;
  j["outcome"] = e.outcome;
  j["digest"] = e.digest;
  return j;
}

EventRecord event_from_json(const Json& j) {
  EventRecord e;
  e.seq = j.at("seq").get<std::uint64_t>();
  const auto ts = parse_iso8601(j.at("ts").get<std::string>());
  if (!ts) fail(ErrorCode::BadRequest, "malformed event timestamp");
  e.ts = *ts;
  e.actor = j.at("actor").get<std::string>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  e.outcome = j.at("outcome");
  e.digest = j.at("digest").get<std::string>();
  return e;
}

Service::Service(Config config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), state_(std::make_unique<State>(config_.secret_key)) {}

Service::~Service() = default;

presence::ChallengeRegistry& Service::challenges() noexcept { return state_->challenges; }

void Service::set_event_sink(EventSink sink) {
  std::unique_lock lock(mutex_);
  sink_ = std::move(sink);
}

std::vector<EventRecord> Service::events() const {
  std::shared_lock lock(mutex_);
  return log_;
}

std::string Service::last_digest() const {
  std::shared_lock lock(mutex_);
  return log_.empty() ? std::string() : log_.back().digest;
}

std::string Service::participant_token(const std::string& participant_id) const {
  return crypto::to_hex(crypto::hmac_sha256(config_.secret_key, "participant:" + participant_id));
}

Json Service::append(const std::string& actor, const std::string& kind, Json payload, Json outcome, Timestamp ts) {
  EventRecord e;
  e.seq = log_.size() + 1;
  e.ts = ts;
  e.actor = actor;
  e.kind = kind;
  e.payload = std::move(payload);
  e.outcome = std::move(outcome);
  e.digest = chain_digest(log_.empty() ? std::string() : log_.back().digest, e);
  log_.push_back(e);
  if (sink_) sink_(log_.back());
  return log_.back().outcome;
}

Response Service::mutate(const std::string& actor, const std::string& kind, Json payload) {
  std::unique_lock lock(mutex_);
  const Timestamp ts = clock_();
  Json outcome = apply(kind, payload, ts);
  const int status = outcome.contains("created") && outcome["created"].get<bool>() ? 201 : 200;
  append(actor, kind, std::move(payload), outcome, ts);
  return Response{status, outcome.dump()};
}

void Service::apply_logged(const EventRecord& record) {
  std::unique_lock lock(mutex_);
  const auto diverged = [&](const std::string& why) {
    fail(ErrorCode::DivergenceDetected,
         "divergence at sequence " + std::to_string(record.seq) + ": " + why, std::to_string(record.seq));
  };
  if (record.seq != log_.size() + 1) diverged("unexpected sequence number");
  Json outcome;
  try {
    outcome = apply(record.kind, record.payload, record.ts);
  } catch (const Error& e) {
    diverged(std::string("command failed on replay: ") + e.what());
  }
  EventRecord e = record;
  e.outcome = outcome;
  e.digest = chain_digest(log_.empty() ? std::string() : log_.back().digest, e);
  if (outcome != record.outcome) diverged("outcome differs");
  if (e.digest != record.digest) diverged("digest differs");
  log_.push_back(std::move(e));
  if (sink_) sink_(log_.back());
}

std::unique_ptr<Service> Service::refold(Config config, std::span<const EventRecord> events) {
  auto svc = std::make_unique<Service>(std::move(config), [] { return Timestamp{}; });
  for (const auto& e : events) svc->apply_logged(e);
  return svc;
}

Json Service::apply(const std::string& kind, const Json& p, Timestamp ts) {
  State& st = *state_;

  if (kind == "project.create") {
    const std::string name = str_field(p, "name");
    if (name.empty()) fail(ErrorCode::BadRequest, "project name must not be empty", "name");
    asset::Project pr{st.next_id("p-"), name, str_field(p, "owner"), field(p, "auto_assign").get<bool>(), ts};
    st.projects.emplace(pr.id, pr);
    return Json{{"created", true}, {"id", pr.id}};
  }

  if (kind == "asset.create" || kind == "asset.replace") {
    const bool create = kind == "asset.create";
    const std::string owner = create ? str_field(p, "project") : st.asset_entry(str_field(p, "asset")).project_id;
    const asset::Project& pr = st.project(owner);
    auto parsed = std::make_shared<asset::Asset>(asset::parse_asset(str_field(p, "document")));
    auto report = asset::validate_asset(*parsed);
    if (!report.ok()) {
      const auto first = std::find_if(report.findings.begin(), report.findings.end(), [](const asset::Finding& f) {
        return f.severity == asset::Finding::Severity::Error;
      });
      fail(ErrorCode::Schema, first->message, first->path);
    }
    Json out{{"created", create}};
    std::string id;
    if (create) {
      id = st.next_id("a-");
      st.assets.emplace(id, AssetEntry{id, pr.id, parsed, report.findings});
    } else {
      id = str_field(p, "asset");
      auto& entry = st.asset_entry(id);
      entry.asset = parsed;
      entry.findings = report.findings;
    }
    out["id"] = id;
    out["findings"] = findings_json(report.findings);
    if (create && pr.auto_assign) {
      std::vector<asset::Task> tasks;
      for (const auto& [tid, t] : st.tasks) {
        if (t.project_id == pr.id) tasks.push_back(t);
      }
      std::sort(tasks.begin(), tasks.end(), [](const asset::Task& a, const asset::Task& b) {
        return a.created_at < b.created_at;
      });
      if (!tasks.empty()) {
        // Ties in creation time go to the task created last.
        std::stable_sort(tasks.begin(), tasks.end(), [&](const asset::Task& a, const asset::Task& b) {
          if (a.created_at != b.created_at) return a.created_at < b.created_at;
          return std::stoull(a.id.substr(2)) < std::stoull(b.id.substr(2));
        });
        auto asg = asset::auto_assign(pr, id, tasks, st.next_id("as-"), ts);
        const auto& task = st.task(asg.task_id);
        AssignmentEntry entry{asg, task.status == asset::TaskStatus::Active ? parsed : nullptr};
        out["assignment"] = asg.id;
        out["task"] = asg.task_id;
        st.assignments.emplace(asg.id, std::move(entry));
      }
    }
    return out;
  }

  if (kind == "task.create") {
    const asset::Project& pr = st.project(str_field(p, "project"));
    asset::Task t;
    t.project_id = pr.id;
    t.name = str_field(p, "name");
    t.created_at = ts;
    t.status = p.value("draft", false) ? asset::TaskStatus::Draft : asset::TaskStatus::Active;
    t.id = st.next_id("t-");
    st.tasks.emplace(t.id, t);
    return Json{{"created", true}, {"id", t.id}, {"status", task_status_name(t.status)}};
  }

  if (kind == "task.activate" || kind == "task.close") {
    auto& t = st.task(str_field(p, "task"));
    if (kind == "task.activate") {
      if (t.status == asset::TaskStatus::Closed) fail(ErrorCode::Conflict, "task " + t.id + " is closed");
      t.status = asset::TaskStatus::Active;
      for (auto& [aid, entry] : st.assignments) {
        if (entry.assignment.task_id == t.id && !entry.snapshot) {
          entry.snapshot = st.asset_entry(entry.assignment.asset_id).asset;
        }
      }
    } else {
      t.status = asset::TaskStatus::Closed;
    }
    return Json{{"id", t.id}, {"status", task_status_name(t.status)}};
  }

  if (kind == "assignment.create") {
    const auto& a = st.asset_entry(str_field(p, "asset"));
    const auto& t = st.task(str_field(p, "task"));
    if (a.project_id != t.project_id) {
      fail(ErrorCode::Conflict, "asset " + a.id + " and task " + t.id + " belong to different projects");
    }
    asset::Assignment asg;
    asg.asset_id = a.id;
    asg.task_id = t.id;
    asg.created_at = ts;
    for (const auto& pid : field(p, "participants")) {
      const auto& participant = st.participant(pid.get<std::string>());
      if (!participant.projects.contains(t.project_id)) {
        fail(ErrorCode::Conflict, "participant " + participant.id + " is not enrolled in project " + t.project_id);
      }
      asg.participant_ids.insert(participant.id);
    }
    asg.id = st.next_id("as-");
    st.assignments.emplace(asg.id, AssignmentEntry{asg, t.status == asset::TaskStatus::Active ? a.asset : nullptr});
    return Json{{"created", true}, {"id", asg.id}};
  }

  if (kind == "code.create") {
    const auto& pr = st.project(str_field(p, "project"));
    CodeEntry c;
    c.project_id = pr.id;
    if (p.contains("max_uses") && !p["max_uses"].is_null()) {
      c.max_uses = int_field(p, "max_uses");
      if (*c.max_uses < 1) fail(ErrorCode::BadRequest, "max_uses must be positive", "max_uses");
    }
    if (p.contains("ttl_s") && !p["ttl_s"].is_null()) c.expires_at = ts.plus_ms(int_field(p, "ttl_s") * 1000);
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    for (std::uint64_t attempt = 0;; ++attempt) {
      const auto mac = crypto::hmac_sha256(config_.secret_key,
                                           "access-code:" + std::to_string(st.counter) + ":" + std::to_string(attempt));
      std::string code;
      for (int i = 0; i < 8; ++i) code.push_back(kAlphabet[mac[static_cast<std::size_t>(i)] % 36]);
      if (!st.codes.contains(code)) {
        c.code = code;
        break;
      }
    }
    ++st.counter;
    st.codes.emplace(c.code, c);
    return Json{{"created", true},
                {"code", c.code},
                {"project", c.project_id},
                {"max_uses", c.max_uses ? Json(*c.max_uses) : Json(nullptr)},
                {"expires_at", json_time(c.expires_at)}};
  }

  if (kind == "subscribe") {
    const std::string code = str_field(p, "code");
    auto it = st.codes.find(code);
    if (it == st.codes.end()) fail(ErrorCode::Forbidden, "invalid access code");
    CodeEntry& c = it->second;
    if (c.expires_at && ts > *c.expires_at) fail(ErrorCode::Forbidden, "access code expired");
    if (c.max_uses && c.uses >= *c.max_uses) fail(ErrorCode::Forbidden, "access code exhausted");
    std::string pid;
    if (p.contains("participant")) {
      pid = st.participant(str_field(p, "participant")).id;
    } else {
      pid = st.next_id("u-");
      const std::string pseudonym = p.value("pseudonym", std::string("participant-") + pid.substr(2));
      st.participants.emplace(pid, asset::Participant{pid, pseudonym, {}});
    }
    st.participants.at(pid).projects.insert(c.project_id);
    ++c.uses;
    return Json{{"participant", pid}, {"project", c.project_id}, {"token", participant_token(pid)}};
  }

  if (kind == "session.start") {
    const auto& participant = st.participant(str_field(p, "participant"));
    const auto& asg = st.assignment(str_field(p, "assignment"));
    const auto& t = st.task(asg.assignment.task_id);
    for (const auto& [sid, entry] : st.sessions) {
      if (entry.session.participant_id() == participant.id && entry.session.assignment_id() == asg.assignment.id) {
        fail(ErrorCode::Conflict, "participant already has session " + sid + " for this assignment", sid);
      }
    }
    if (!asg.snapshot) fail(ErrorCode::AssignmentClosed, "task " + t.id + " is not active");
    const std::string project_id = st.asset_entry(asg.assignment.asset_id).project_id;
    auto session = modality::TaskSession::start(st.next_id("s-"), asg.assignment, participant, asg.snapshot,
                                                project_id, t.status, ts);
    const std::string sid = session.id();
    Json out{{"created", true}, {"id", sid}, {"statuses", statuses_json(session)}};
    st.sessions.emplace(sid, SessionEntry{std::move(session), t.id, {}});
    return out;
  }

  if (kind == "location") {
    auto& entry = st.session(str_field(p, "session"));
    if (st.task(entry.task_id).status == asset::TaskStatus::Closed) {
      fail(ErrorCode::AssignmentClosed, "task " + entry.task_id + " is closed");
    }
    const auto point = point_field(p);
    const auto events = entry.session.on_location_update(point, ts);
    Json jevents = Json::array();
    auto& agg = st.aggregator(entry.task_id);
    for (const auto& e : events) {
      const bool left = e.kind == modality::ZoneEvent::Kind::Left;
      jevents.push_back({{"kind", left ? "Left" : "Entered"}, {"question", e.question_id}});
      if (left && entry.session.status(e.question_id) == modality::PoiStatus::Answered &&
          agg.is_live(entry.session.participant_id())) {
        agg.leave(entry.session.participant_id(), ts);
      }
    }
    return Json{{"events", jevents}, {"statuses", statuses_json(entry.session)}};
  }

  if (kind == "answer") {
    auto& entry = st.session(str_field(p, "session"));
    auto& session = entry.session;
    if (st.task(entry.task_id).status == asset::TaskStatus::Closed) {
      fail(ErrorCode::AssignmentClosed, "task " + entry.task_id + " is closed");
    }
    const QuestionId qid = int_field(p, "question");
    modality::AnswerPayload payload;
    if (p.contains("text")) {
      payload = str_field(p, "text");
    } else {
      std::vector<std::int64_t> ids;
      const Json& opts = field(p, "options");
      if (!opts.is_array()) fail(ErrorCode::PayloadMismatch, "options must be an array", "options");
      for (const auto& o : opts) {
        if (!o.is_number_integer()) fail(ErrorCode::PayloadMismatch, "option ids must be integers", "options");
        ids.push_back(o.get<std::int64_t>());
      }
      payload = std::move(ids);
    }
    const auto location = point_field(p);
    session.precheck_answer(qid, payload, location);

    std::optional<presence::Proof> proof;
    if (p.contains("proof") && !p["proof"].is_null()) {
      const Json& jp = p["proof"];
      std::optional<presence::Challenge> ch;
      std::string response;
      if (jp.contains("token")) {
        response = str_field(jp, "token");
        ch = st.challenges.find_by_token(response);
      } else {
        ch = st.challenges.find(str_field(jp, "challenge"));
        response = str_field(jp, "response");
      }
      if (!ch || ch->question_id != qid || ch->scope != session.asset().id) {
        fail(ErrorCode::ProofInvalid, "proof does not belong to question " + std::to_string(qid));
      }
      presence::Proof pr{ch->id, ch->question_id, response, ts, presence::Verdict::Pending};
      pr.verdict = st.challenges.verify(*ch, response, ts);
      if (pr.verdict != presence::Verdict::Verified) {
        fail(ErrorCode::ProofInvalid, "proof " + ch->id + " rejected");
      }
      proof = pr;
    }

    const auto outcome = session.submit_answer(qid, payload, location, proof, ts);
    const auto& record = session.answers().back();
    Json row = Json::object();
    row["type"] = "answer";
    row["session"] = session.id();
    row["participant"] = session.participant_id();
    row["assignment"] = session.assignment_id();
    row["question"] = qid;
    row["payload"] = payload_json(record.payload);
    row["answered_at"] = to_iso8601(record.answered_at);
    row["lat"] = record.location.lat_deg();
    row["lon"] = record.location.lon_deg();
    row["proof"] = record.proof_id ? Json(*record.proof_id) : Json(nullptr);
    row["credits"] = record.credits;
    st.task_data[entry.task_id].answers.push_back(std::move(row));

    if (outcome.value) {
      auto& agg = st.aggregator(entry.task_id);
      if (agg.is_live(session.participant_id())) agg.update(session.participant_id(), *outcome.value, ts);
      else agg.join(session.participant_id(), *outcome.value, ts);
    }
    return Json{{"question", qid},
                {"credits", outcome.credits_awarded},
                {"total_credits", session.credits_earned()},
                {"unlocked", outcome.unlocked},
                {"completed", outcome.completed},
                {"proof", proof ? Json(proof->challenge_id) : Json(nullptr)}};
  }

  if (kind == "sensors") {
    auto& entry = st.session(str_field(p, "session"));
    std::vector<sensing::SensorSample> samples;
    for (const auto& r : field(p, "records")) {
      sensing::SensorSample s;
      s.session_id = str_field(r, "session");
      if (s.session_id != entry.session.id()) fail(ErrorCode::BadRequest, "record for a different session");
      const auto kind_opt = asset::sensor_kind_from(str_field(r, "kind"));
      if (!kind_opt) fail(ErrorCode::BadRequest, "unknown sensor kind", "kind");
      s.kind = *kind_opt;
      s.captured_at = time_field(field(r, "captured_at"), "captured_at");
      for (const auto& v : field(r, "values")) {
        if (!v.is_number()) fail(ErrorCode::BadRequest, "sensor values must be numbers", "values");
        s.values.push_back(v.get<double>());
      }
      if (r.contains("lat") && r.contains("lon") && !r["lat"].is_null()) s.location = point_field(r);
      samples.push_back(std::move(s));
    }
    Json dropped = Json::object();
    std::int64_t accepted = 0;
    auto& rows = st.task_data[entry.task_id].samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const auto d = entry.gate.offer(entry.session, s);
      if (!d.accepted) {
        const std::string reason(sensing::to_string(d.reason));
        dropped[reason] = dropped.value(reason, 0) + 1;
        continue;
      }
      ++accepted;
      const Json& r = p["records"][i];
      Json row = Json::object();
      row["type"] = "sample";
      row["session"] = s.session_id;
      row["participant"] = entry.session.participant_id();
      row["kind"] = std::string(asset::to_string(s.kind));
      row["captured_at"] = to_iso8601(s.captured_at);
      row["values"] = s.values;
      row["lat"] = s.location ? Json(s.location->lat_deg()) : Json(nullptr);
      row["lon"] = s.location ? Json(s.location->lon_deg()) : Json(nullptr);
      row["accuracy"] = r.contains("accuracy") ? r["accuracy"] : Json(nullptr);
      rows.push_back(std::move(row));
    }
    return Json{{"accepted", accepted}, {"dropped", dropped}};
  }

  if (kind == "challenge.create") {
    const auto& a = st.asset_entry(str_field(p, "asset"));
    const auto kind_opt = presence::challenge_kind_from(str_field(p, "kind"));
    if (!kind_opt) fail(ErrorCode::BadRequest, "unknown challenge kind", "kind");
    presence::ChallengeSpec spec;
    spec.prompt = p.value("prompt", std::string());
    if (p.contains("accepted")) {
      for (const auto& v : p["accepted"]) spec.accepted.insert(v.get<std::string>());
    }
    spec.puzzle_kind = p.value("puzzle_kind", std::string());
    spec.puzzle_spec = p.value("puzzle_spec", std::string());
    const auto ch = st.challenges.issue_challenge(*a.asset, int_field(p, "question"), *kind_opt,
                                                  int_field(p, "ttl_s"), ts, spec);
    Json out{{"created", true},
             {"id", ch.id},
             {"question", ch.question_id},
             {"kind", std::string(presence::to_string(ch.kind))},
             {"expires_at", to_iso8601(ch.expires_at)}};
    if (ch.kind == presence::ChallengeKind::QrToken) out["token"] = ch.token;
    return out;
  }

  if (kind == "session.close") {
    auto& entry = st.session(str_field(p, "session"));
    entry.session.close(ts);
    auto& agg = st.aggregator(entry.task_id);
    if (agg.is_live(entry.session.participant_id())) agg.leave(entry.session.participant_id(), ts);
    return Json{{"id", entry.session.id()}, {"closed", true}};
  }

  fail(ErrorCode::BadRequest, "unknown command " + kind);
}

void Service::require_designer(const Request& r) const {
  if (r.bearer.empty()) fail(ErrorCode::Unauthorized, "missing bearer token");
  if (std::find(config_.designer_tokens.begin(), config_.designer_tokens.end(), r.bearer) ==
      config_.designer_tokens.end()) {
    fail(ErrorCode::Unauthorized, "invalid designer token");
  }
}

void Service::require_participant(const Request& r, const std::string& participant_id) const {
  if (r.bearer.empty()) fail(ErrorCode::Unauthorized, "missing bearer token");
  const auto expected = participant_token(participant_id);
  if (!crypto::equal(std::span(reinterpret_cast<const std::uint8_t*>(r.bearer.data()), r.bearer.size()),
                     std::span(reinterpret_cast<const std::uint8_t*>(expected.data()), expected.size()))) {
    fail(ErrorCode::Unauthorized, "invalid participant token");
  }
}

void Service::require_session_owner(const Request& r, const std::string& session_id) const {
  std::string owner;
  {
    std::shared_lock lock(mutex_);
    const auto it = state_->sessions.find(session_id);
    if (it == state_->sessions.end()) fail(ErrorCode::NotFound, "unknown session " + session_id);
    owner = it->second.session.participant_id();
  }
  require_participant(r, owner);
}

Response Service::handle(const Request& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    Json body{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (!e.path().empty()) body["path"] = e.path();
    return Response{http_status(e.code()), body.dump()};
  } catch (const nlohmann::json::exception& e) {
    Json body{{"error", "BadRequest"}, {"message", e.what()}};
    return Response{400, body.dump()};
  }
}

Response Service::route(const Request& r) {
  const auto seg = split_path(r.path);
  const auto n = seg.size();
  const bool get = r.method == "GET";
  const bool post = r.method == "POST";
  const bool put = r.method == "PUT";
  if (n < 2 || seg[0] != "v1") fail(ErrorCode::NotFound, "no route for " + r.path);
  const std::string& root = seg[1];

  if (get && n == 2 && root == "health") return Response{200, Json{{"status", "ok"}}.dump()};

  if (root == "projects") {
    if (post && n == 2) {
      require_designer(r);
      const Json body = parse_json(r.body);
      Json payload{{"name", str_field(body, "name")},
                   {"owner", body.value("owner", r.bearer)},
                   {"auto_assign", body.value("auto_assign", true)}};
      return mutate(r.bearer, "project.create", std::move(payload));
    }
    if (n == 3 && get) {
      require_designer(r);
      std::shared_lock lock(mutex_);
      const auto& pr = state_->project(seg[2]);
      Json out{{"id", pr.id}, {"name", pr.name}, {"owner", pr.owner}, {"auto_assign", pr.auto_assign},
               {"created_at", to_iso8601(pr.created_at)}};
      Json assets = Json::array(), tasks = Json::array();
      for (const auto& [id, a] : state_->assets) {
        if (a.project_id == pr.id) assets.push_back(id);
      }
      for (const auto& [id, t] : state_->tasks) {
        if (t.project_id == pr.id) tasks.push_back({{"id", id}, {"name", t.name}, {"status", task_status_name(t.status)}});
      }
      out["assets"] = assets;
      out["tasks"] = tasks;
      return Response{200, out.dump()};
    }
    if (post && n == 4 && seg[3] == "assets") {
      require_designer(r);
      return mutate(r.bearer, "asset.create", Json{{"project", seg[2]}, {"document", r.body}});
    }
    if (post && n == 4 && seg[3] == "tasks") {
      require_designer(r);
      const Json body = parse_json(r.body);
      return mutate(r.bearer, "task.create",
                    Json{{"project", seg[2]}, {"name", str_field(body, "name")}, {"draft", body.value("draft", false)}});
    }
    if (post && n == 4 && seg[3] == "codes") {
      require_designer(r);
      const Json body = parse_json(r.body);
      Json payload{{"project", seg[2]},
                   {"max_uses", body.value("max_uses", Json(nullptr))},
                   {"ttl_s", body.value("ttl_s", Json(nullptr))}};
      return mutate(r.bearer, "code.create", std::move(payload));
    }
  }

  if (root == "assets" && n >= 3) {
    if (put && n == 3) {
      require_designer(r);
      return mutate(r.bearer, "asset.replace", Json{{"asset", seg[2]}, {"document", r.body}});
    }
    if (get && n == 3) {
      require_designer(r);
      std::shared_lock lock(mutex_);
      const auto& a = state_->asset_entry(seg[2]);
      Json out{{"id", a.id}, {"project", a.project_id}, {"document", asset::to_json(*a.asset)},
               {"findings", findings_json(a.findings)}};
      return Response{200, out.dump()};
    }
    if (post && n == 4 && seg[3] == "challenges") {
      require_designer(r);
      Json body = parse_json(r.body);
      body["asset"] = seg[2];
      return mutate(r.bearer, "challenge.create", std::move(body));
    }
  }

  if (root == "tasks" && n == 4) {
    if (post && (seg[3] == "activate" || seg[3] == "close")) {
      require_designer(r);
      return mutate(r.bearer, "task." + seg[3], Json{{"task", seg[2]}});
    }
    if (get && seg[3] == "aggregate") {
      require_designer(r);
      const auto fn_it = r.query.find("fn");
      if (fn_it == r.query.end()) fail(ErrorCode::BadRequest, "missing fn parameter", "fn");
      const auto fn = aggregation::fn_from(fn_it->second);
      std::shared_lock lock(mutex_);
      state_->task(seg[2]);
      if (!fn) fail(ErrorCode::BadRequest, "unknown aggregate function " + fn_it->second, "fn");
      const auto it = state_->aggregators.find(seg[2]);
      Json out{{"fn", std::string(aggregation::to_string(*fn))}};
      if (it == state_->aggregators.end()) {
        const auto v = aggregation::AggregateState{}.read(*fn);
        out["value"] = v ? Json(*v) : Json(nullptr);
        out["count"] = 0;
        out["updated_at"] = nullptr;
        out["events"] = 0;
      } else {
        const auto v = it->second.read(*fn);
        out["value"] = v ? Json(*v) : Json(nullptr);
        out["count"] = it->second.state().count();
        out["updated_at"] = json_time(it->second.updated_at());
        out["events"] = it->second.log().size();
      }
      return Response{200, out.dump()};
    }
    if (get && seg[3] == "export") {
      require_designer(r);
      return Response{200, export_task(seg[2]), "application/x-ndjson"};
    }
  }

  if (root == "assignments" && post && n == 2) {
    require_designer(r);
    const Json body = parse_json(r.body);
    Json participants = body.value("participants", Json::array());
    if (!participants.is_array()) fail(ErrorCode::BadRequest, "participants must be an array", "participants");
    return mutate(r.bearer, "assignment.create",
                  Json{{"asset", str_field(body, "asset")}, {"task", str_field(body, "task")},
                       {"participants", participants}});
  }

  if (root == "subscribe" && post && n == 2) {
    const Json body = parse_json(r.body);
    Json payload{{"code", str_field(body, "code")}};
    if (body.contains("pseudonym")) payload["pseudonym"] = str_field(body, "pseudonym");
    if (body.contains("participant")) {
      require_participant(r, str_field(body, "participant"));
      payload["participant"] = body["participant"];
    }
    return mutate("anonymous", "subscribe", std::move(payload));
  }

  if (root == "participants" && n == 4) {
    const std::string& pid = seg[2];
    require_participant(r, pid);
    if (get && seg[3] == "tasks") {
      std::shared_lock lock(mutex_);
      const auto& participant = state_->participant(pid);
      Json out = Json::array();
      for (const auto& [aid, entry] : state_->assignments) {
        const auto& t = state_->tasks.at(entry.assignment.task_id);
        if (!participant.projects.contains(t.project_id) || !entry.assignment.permits(pid) ||
            t.status != asset::TaskStatus::Active || !entry.snapshot) {
          continue;
        }
        Json session = nullptr;
        for (const auto& [sid, s] : state_->sessions) {
          if (s.session.participant_id() == pid && s.session.assignment_id() == aid) session = sid;
        }
        out.push_back({{"assignment", aid}, {"task", t.id}, {"task_name", t.name},
                       {"asset", asset::to_json(*entry.snapshot)}, {"session", session}});
      }
      return Response{200, out.dump()};
    }
    if (post && seg[3] == "sessions") {
      const Json body = parse_json(r.body);
      return mutate(pid, "session.start", Json{{"participant", pid}, {"assignment", str_field(body, "assignment")}});
    }
  }

  if (root == "sessions" && n >= 3) {
    const std::string& sid = seg[2];
    if (get && n == 3) {
      if (std::find(config_.designer_tokens.begin(), config_.designer_tokens.end(), r.bearer) ==
          config_.designer_tokens.end()) {
        require_session_owner(r, sid);
      }
      std::shared_lock lock(mutex_);
      const auto& s = state_->session(sid).session;
      Json out{{"id", s.id()}, {"participant", s.participant_id()}, {"assignment", s.assignment_id()},
               {"statuses", statuses_json(s)}, {"unlocked", s.unlocked_pois()},
               {"credits", s.credits_earned()}, {"started_at", to_iso8601(s.started_at())},
               {"completed_at", json_time(s.completed_at())}};
      return Response{200, out.dump()};
    }
    if (post && n == 4 && seg[3] == "close") {
      require_designer(r);
      return mutate(r.bearer, "session.close", Json{{"session", sid}});
    }
    if (post && n == 4 && seg[3] == "locations") {
      require_session_owner(r, sid);
      const Json body = parse_json(r.body);
      return mutate(sid, "location", Json{{"session", sid}, {"lat", num_field(body, "lat")}, {"lon", num_field(body, "lon")}});
    }
    if (post && n == 4 && seg[3] == "answers") {
      require_session_owner(r, sid);
      const Json body = parse_json(r.body);
      Json payload{{"session", sid}, {"question", int_field(body, "question")}};
      if (body.contains("text")) payload["text"] = field(body, "text");
      else payload["options"] = field(body, "options");
      payload["lat"] = num_field(body, "lat");
      payload["lon"] = num_field(body, "lon");
      if (body.contains("proof")) payload["proof"] = body["proof"];
      return mutate(sid, "answer", std::move(payload));
    }
    if (post && n == 4 && seg[3] == "sensors") {
      require_session_owner(r, sid);
      Json records = Json::array();
      Json whole;
      bool parsed_whole = false;
      try {
        whole = Json::parse(r.body);
        parsed_whole = true;
      } catch (const nlohmann::json::parse_error&) {
      }
      if (parsed_whole && whole.is_object() && whole.contains("records")) {
        records = whole["records"];
      } else if (parsed_whole && whole.is_array()) {
        records = whole;
      } else {
        std::stringstream ss(r.body);
        std::string line;
        while (std::getline(ss, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          records.push_back(parse_json(line));
        }
      }
      if (!records.is_array()) fail(ErrorCode::BadRequest, "records must be an array", "records");
      return mutate(sid, "sensors", Json{{"session", sid}, {"records", records}});
    }
  }

  fail(ErrorCode::NotFound, "no route for " + r.method + " " + r.path);
}

std::vector<std::string> Service::task_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, t] : state_->tasks) ids.push_back(id);
  return ids;
}

std::string Service::export_task(const std::string& task_id) const {
  std::shared_lock lock(mutex_);
  const auto it = state_->tasks.find(task_id);
  if (it == state_->tasks.end()) fail(ErrorCode::NotFound, "unknown task " + task_id);
  const auto& t = it->second;
  std::string out;
  out += Json{{"type", "task"}, {"task", t.id}, {"project", t.project_id}, {"name", t.name},
              {"status", task_status_name(t.status)}, {"created_at", to_iso8601(t.created_at)}}
             .dump();
  out += '\n';
  if (const auto d = state_->task_data.find(task_id); d != state_->task_data.end()) {
    for (const auto& row : d->second.answers) out += row.dump() + '\n';
    for (const auto& row : d->second.samples) out += row.dump() + '\n';
  }
  if (const auto a = state_->aggregators.find(task_id); a != state_->aggregators.end()) {
    for (const auto& e : a->second.log()) {
      Json row{{"type", "event"}, {"t", to_iso8601(e.t)}, {"kind", std::string(aggregation::to_string(e.kind))},
               {"participant", e.participant}};
      if (e.value) row["value"] = *e.value;
      out += row.dump() + '\n';
    }
  }
  return out;
}

std::string Service::dump_state() const {
  std::shared_lock lock(mutex_);
  const State& st = *state_;
  Json out = Json::object();
  Json projects = Json::array();
  for (const auto& [id, p] : st.projects) {
    projects.push_back({{"id", id}, {"name", p.name}, {"owner", p.owner}, {"auto_assign", p.auto_assign},
                        {"created_at", p.created_at.ms}});
  }
  out["projects"] = projects;
  Json assets = Json::array();
  for (const auto& [id, a] : st.assets) {
    assets.push_back({{"id", id}, {"project", a.project_id}, {"document", asset::to_json(*a.asset)}});
  }
  out["assets"] = assets;
  Json tasks = Json::array();
  for (const auto& [id, t] : st.tasks) {
    tasks.push_back({{"id", id}, {"project", t.project_id}, {"name", t.name}, {"status", task_status_name(t.status)},
                     {"created_at", t.created_at.ms}});
  }
  out["tasks"] = tasks;
  Json assignments = Json::array();
  for (const auto& [id, a] : st.assignments) {
    assignments.push_back({{"id", id}, {"asset", a.assignment.asset_id}, {"task", a.assignment.task_id},
                           {"participants", a.assignment.participant_ids},
                           {"snapshot", a.snapshot ? asset::to_json(*a.snapshot) : Json(nullptr)}});
  }
  out["assignments"] = assignments;
  Json codes = Json::array();
  for (const auto& [code, c] : st.codes) {
    codes.push_back({{"code", code}, {"project", c.project_id}, {"uses", c.uses},
                     {"max_uses", c.max_uses ? Json(*c.max_uses) : Json(nullptr)}});
  }
  out["codes"] = codes;
  Json participants = Json::array();
  for (const auto& [id, p] : st.participants) {
    participants.push_back({{"id", id}, {"pseudonym", p.pseudonym}, {"projects", p.projects}});
  }
  out["participants"] = participants;
  Json sessions = Json::array();
  for (const auto& [id, e] : st.sessions) {
    Json answers = Json::array();
    for (const auto& a : e.session.answers()) {
      answers.push_back({{"question", a.question_id}, {"payload", payload_json(a.payload)},
                         {"at", a.answered_at.ms}, {"location", json_point(a.location)}, {"credits", a.credits}});
    }
    sessions.push_back({{"id", id}, {"task", e.task_id}, {"participant", e.session.participant_id()},
                        {"statuses", statuses_json(e.session)}, {"credits", e.session.credits_earned()},
                        {"completed_at", json_time(e.session.completed_at())}, {"answers", answers}});
  }
  out["sessions"] = sessions;
  Json aggregates = Json::object();
  for (const auto& [task, agg] : st.aggregators) {
    Json counts = Json::array();
    for (const auto& [v, c] : agg.state().counts()) counts.push_back({v, c});
    aggregates[task] = counts;
  }
  out["aggregates"] = aggregates;
  Json exports = Json::object();
  for (const auto& [id, t] : st.tasks) {
    if (const auto d = st.task_data.find(id); d != st.task_data.end()) {
      exports[id] = {{"answers", d->second.answers.size()}, {"samples", d->second.samples.size()}};
    }
  }
  out["task_data"] = exports;
  out["counter"] = st.counter;
  out["events"] = log_.size();
  return out.dump();
}

}  // namespace agora::service
