#include "agora/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

#include "agora/crypto.hpp"
#include "agora/error.hpp"
#include "agora/presence.hpp"
#include "agora/sensing.hpp"

namespace agora::sim {

namespace {

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  geo::GeoPoint a;
  geo::GeoPoint b;  // equal to a while standing
};

geo::GeoPoint position_at(const std::vector<Segment>& segs, double t) {
  const auto it = std::lower_bound(segs.begin(), segs.end(), t, [](const Segment& s, double v) { return s.t1 < v; });
  const Segment& s = it == segs.end() ? segs.back() : *it;
  if (s.a == s.b || s.t1 <= s.t0) return s.a;
  return geo::interpolate(s.a, s.b, std::clamp((t - s.t0) / (s.t1 - s.t0), 0.0, 1.0));
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AnswerRule rule_from_json(const Json& j) {
  AnswerRule r;
  if (j.contains("fixed")) {
    r.kind = AnswerRule::Kind::Fixed;
    r.option = j["fixed"].get<std::int64_t>();
  } else if (j.contains("categorical")) {
    r.kind = AnswerRule::Kind::Categorical;
    double total = 0.0;
    for (const auto& pair : j["categorical"]) {
      r.distribution.emplace_back(pair.at(0).get<std::int64_t>(), pair.at(1).get<double>());
      if (r.distribution.back().second < 0.0) throw Error(ErrorCode::BadRequest, "negative probability");
      total += r.distribution.back().second;
    }
    if (r.distribution.empty() || std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::BadRequest, "categorical distribution must sum to 1");
    }
  } else if (j.contains("script")) {
    r.kind = AnswerRule::Kind::Scripted;
    r.script = j["script"].get<std::vector<std::int64_t>>();
    if (r.script.empty()) throw Error(ErrorCode::BadRequest, "empty answer script");
  } else if (j.contains("text")) {
    r.kind = AnswerRule::Kind::Text;
    r.text = j["text"].get<std::string>();
  } else {
    throw Error(ErrorCode::BadRequest, "answer rule needs fixed, categorical, script or text");
  }
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Participant {
  std::string id;
  std::string token;
  std::string session;
  std::string asset_id;
  std::shared_ptr<const asset::Asset> asset;
  std::map<QuestionId, geo::LocalizationZone> zones;
  std::map<QuestionId, std::string> statuses;
  std::map<QuestionId, std::string> qr_tokens;
  std::set<QuestionId> answered;
  std::int64_t answer_count = 0;
  std::map<std::pair<QuestionId, asset::SensorKind>, std::int64_t> next_sample;
  const CohortEntry* entry = nullptr;
  std::vector<TracePoint> trace;
  std::mt19937_64 rng;
  bool stopped = false;
};

}  // namespace

std::vector<TracePoint> generate_trace(const TraceSpec& spec) {
  if (spec.waypoints.size() < 2) throw Error(ErrorCode::Range, "a trace needs at least two waypoints");
  if (!(spec.speed_mps > 0.0)) throw Error(ErrorCode::Range, "speed must be positive");
  if (spec.sample_period_ms <= 0) throw Error(ErrorCode::Range, "sample period must be positive");
  if (!(spec.gps_noise_sigma_m >= 0.0)) throw Error(ErrorCode::Range, "noise sigma must be non-negative");
  if (!(spec.dwell_s >= 0.0)) throw Error(ErrorCode::Range, "dwell must be non-negative");

  std::vector<Segment> segs;
  std::vector<std::pair<double, geo::GeoPoint>> arrivals{{0.0, spec.waypoints.front()}};
  double t = 0.0;
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    const auto& a = spec.waypoints[i - 1];
    const auto& b = spec.waypoints[i];
    const double dur = geo::haversine_distance(a, b) / spec.speed_mps * 1000.0;
    segs.push_back({t, t + dur, a, b});
    t += dur;
    arrivals.emplace_back(t, b);
    if (spec.dwell_s > 0.0) {
      segs.push_back({t, t + spec.dwell_s * 1000.0, b, b});
      t += spec.dwell_s * 1000.0;
    }
  }
  const double total = t;

  // Grid samples plus waypoint arrivals; an arrival wins over a grid sample
  // landing on the same millisecond.
  std::map<std::int64_t, geo::GeoPoint> samples;
  const auto period = static_cast<double>(spec.sample_period_ms);
  for (std::int64_t k = 0; static_cast<double>(k) * period <= total + 1e-6; ++k) {
    const double tk = static_cast<double>(k) * period;
    samples.emplace(std::llround(tk), position_at(segs, tk));
  }
  for (const auto& [ta, p] : arrivals) samples[std::llround(ta)] = p;
  if (spec.dwell_s > 0.0) samples.emplace(std::llround(total), spec.waypoints.back());

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.gps_noise_sigma_m > 0.0 ? spec.gps_noise_sigma_m : 1.0);
  std::vector<TracePoint> out;
  out.reserve(samples.size());
  for (const auto& [ms, truth] : samples) {
    TracePoint tp{spec.start.plus_ms(ms), truth, truth};
    if (spec.gps_noise_sigma_m > 0.0) {
      const double east = noise(rng);
      const double north = noise(rng);
      tp.reported = geo::from_tangent_plane(truth, {east, north});
    }
    out.push_back(tp);
  }
  return out;
}

Scenario scenario_from_json(const Json& j, const std::string& base_dir) {
  Scenario s;
  s.name = j.value("name", std::string("scenario"));
  s.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("start")) {
    const auto t = parse_iso8601(j["start"].get<std::string>());
    if (!t) throw Error(ErrorCode::BadRequest, "scenario start must be ISO-8601 UTC", "start");
    s.start = *t;
  }
  s.secret_key = j.value("secret_key", s.secret_key);
  s.designer_token = j.value("designer_token", s.designer_token);
  s.task_name = j.value("task_name", s.task_name);
  s.auto_assign = j.value("auto_assign", false);
  for (const auto& [key, path] : j.at("assets").items()) {
    s.assets[key] = read_file(std::filesystem::path(base_dir) / path.get<std::string>());
  }
  for (const auto& c : j.at("cohort")) {
    CohortEntry e;
    e.count = c.value("count", 1);
    e.asset = c.at("asset").get<std::string>();
    if (!s.assets.contains(e.asset)) throw Error(ErrorCode::BadRequest, "cohort refers to unknown asset " + e.asset);
    e.start_offset_ms = static_cast<std::int64_t>(c.value("offset_s", 0.0) * 1000.0);
    e.start_stagger_ms = static_cast<std::int64_t>(c.value("stagger_s", 0.0) * 1000.0);
    e.upload_sensors = c.value("upload_sensors", true);
    const Json tr = c.value("trace", Json::object());
    e.trace.speed_mps = tr.value("speed_mps", e.trace.speed_mps);
    e.trace.sample_period_ms = tr.value("sample_period_ms", e.trace.sample_period_ms);
    e.trace.gps_noise_sigma_m = tr.value("gps_noise_sigma_m", e.trace.gps_noise_sigma_m);
    e.trace.dwell_s = tr.value("dwell_s", e.trace.dwell_s);
    if (tr.contains("waypoints") && tr["waypoints"].is_array()) {
      e.route_from_asset = false;
      for (const auto& w : tr["waypoints"]) e.trace.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
    }
    const Json pol = c.value("policy", Json::object());
    e.policy.present_token = pol.value("present_token", true);
    if (pol.contains("skip")) e.policy.skip = pol["skip"].get<std::vector<QuestionId>>();
    if (pol.contains("default")) e.policy.fallback = rule_from_json(pol["default"]);
    if (pol.contains("rules")) {
      for (const auto& [qid, rule] : pol["rules"].items()) e.policy.rules[std::stoll(qid)] = rule_from_json(rule);
    }
    s.cohort.push_back(std::move(e));
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Syntax, std::string("scenario: ") + e.what(), path);
  }
  return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

std::string SimulationResult::log_text() const {
  std::string out;
  for (const auto& line : log) out += line.dump() + '\n';
  return out;
}

std::vector<Json> parse_log(const std::string& text) {
  std::vector<Json> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Syntax, "log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

SimulationResult run_cohort(const Scenario& sc) {
  SimulationResult res;
  Timestamp now = sc.start;
  service::Config cfg;
  cfg.secret_key = sc.secret_key;
  cfg.designer_tokens = {sc.designer_token};
  res.service = std::make_unique<service::Service>(cfg, [&now] { return now; });
  service::Service& svc = *res.service;

  res.log.push_back({{"type", "header"}, {"format", "agora-simulation-log/1"}, {"scenario", sc.name},
                     {"seed", sc.seed}, {"secret_key", sc.secret_key}, {"designer_token", sc.designer_token},
                     {"start", to_iso8601(sc.start)}});
  svc.set_event_sink([&res](const service::EventRecord& e) {
    Json line{{"type", "event"}};
    line.update(service::to_json(e));
    res.log.push_back(std::move(line));
  });

  const auto call = [&](const std::string& actor, const std::string& method, const std::string& path,
                        const std::string& body, const std::string& bearer) {
    service::Request rq;
    rq.method = method;
    const auto q = path.find('?');
    rq.path = path.substr(0, q);
    if (q != std::string::npos) {
      const std::string query = path.substr(q + 1);
      const auto eq = query.find('=');
      rq.query[query.substr(0, eq)] = query.substr(eq + 1);
    }
    rq.body = body;
    rq.bearer = bearer;
    service::Response rs = svc.handle(rq);
    Json req_body = body.empty() ? Json(nullptr) : Json::parse(body, nullptr, false);
    if (req_body.is_discarded()) req_body = body;
    Json resp_body = rs.content_type == "application/json" ? Json::parse(rs.body, nullptr, false) : Json(rs.body);
    res.log.push_back({{"type", "client"}, {"t", to_iso8601(now)}, {"actor", actor}, {"method", method},
                       {"path", path}, {"request", req_body}, {"status", rs.status}, {"response", resp_body}});
    return std::make_pair(rs.status, resp_body);
  };
  const auto must = [&](const std::pair<int, Json>& r, const std::string& what) -> const Json& {
    if (r.first >= 300) {
      throw Error(ErrorCode::BadRequest, what + " failed: " + r.second.dump());
    }
    return r.second;
  };
  const std::string& dt = sc.designer_token;

  // Designer setup.
  const std::string project =
      must(call("designer", "POST", "/v1/projects",
                Json{{"name", sc.name}, {"auto_assign", sc.auto_assign}}.dump(), dt), "project")["id"];
  res.task_id = must(call("designer", "POST", "/v1/projects/" + project + "/tasks",
                          Json{{"name", sc.task_name}}.dump(), dt), "task")["id"];
  std::map<std::string, std::string> asset_ids;
  std::map<std::string, std::string> auto_assignments;
  std::map<std::string, std::shared_ptr<const asset::Asset>> parsed;
  for (const auto& [key, doc] : sc.assets) {
    const Json out = must(call("designer", "POST", "/v1/projects/" + project + "/assets", doc, dt), "asset " + key);
    asset_ids[key] = out["id"];
    if (out.contains("assignment")) auto_assignments[key] = out["assignment"];
    parsed[key] = std::make_shared<const asset::Asset>(asset::parse_asset(doc));
  }
  int total = 0;
  for (const auto& e : sc.cohort) total += e.count;
  const std::string code = must(call("designer", "POST", "/v1/projects/" + project + "/codes",
                                     Json{{"max_uses", std::max(total, 1)}}.dump(), dt), "code")["code"];

  // Enrollment.
  std::vector<Participant> people;
  people.reserve(static_cast<std::size_t>(total));
  for (const auto& e : sc.cohort) {
    Json ids = Json::array();
    const std::size_t first = people.size();
    for (int k = 0; k < e.count; ++k) {
      const std::size_t idx = people.size();
      const Json out = must(call("participant-" + std::to_string(idx), "POST", "/v1/subscribe",
                                 Json{{"code", code}, {"pseudonym", "sim-" + std::to_string(idx)}}.dump(), ""),
                            "subscribe");
      Participant p;
      p.id = out["participant"];
      p.token = out["token"];
      p.entry = &e;
      p.asset = parsed.at(e.asset);
      p.asset_id = asset_ids.at(e.asset);
      p.rng.seed(mix(sc.seed, idx));
      ids.push_back(p.id);
      people.push_back(std::move(p));
    }
    std::string assignment;
    if (sc.auto_assign) {
      assignment = auto_assignments.at(e.asset);
    } else {
      assignment = must(call("designer", "POST", "/v1/assignments",
                             Json{{"asset", asset_ids.at(e.asset)}, {"task", res.task_id}, {"participants", ids}}.dump(),
                             dt), "assignment")["id"];
    }
    for (std::size_t i = first; i < people.size(); ++i) {
      Participant& p = people[i];
      const std::string label = "participant-" + std::to_string(i);
      // QR codes at the spots: one single-use token per participant and question.
      for (auto qid : p.asset->ordered_ids()) {
        p.zones.emplace(qid, asset::zone_for(*p.asset, qid));
        if (e.policy.present_token && presence::require_proof(*p.asset->find_question(qid), p.asset->proof_policy)) {
          p.qr_tokens[qid] = must(call("designer", "POST", "/v1/assets/" + p.asset_id + "/challenges",
                                       Json{{"question", qid}, {"kind", "QrToken"}, {"ttl_s", 86400}}.dump(), dt),
                                  "challenge")["token"];
        }
      }
      const Json started = must(call(label, "POST", "/v1/participants/" + p.id + "/sessions",
                                     Json{{"assignment", assignment}}.dump(), p.token), "session");
      p.session = started["id"];
      for (const auto& [q, st] : started["statuses"].items()) p.statuses[std::stoll(q)] = st.get<std::string>();

      TraceSpec spec = e.trace;
      spec.seed = mix(sc.seed ^ 0x5EED, i);
      spec.start = sc.start.plus_ms(e.start_offset_ms + e.start_stagger_ms * static_cast<std::int64_t>(i - first) + 60'000);
      if (e.route_from_asset) {
        spec.waypoints.clear();
        const auto& a = *p.asset;
        const auto ids_in_order = a.ordered_ids();
        const auto& first_poi = a.find_question(ids_in_order.front())->location;
        const auto& last_poi = a.find_question(ids_in_order.back())->location;
        spec.waypoints.push_back(a.start ? *a.start : geo::destination_point(first_poi, 180.0, 300.0));
        for (auto qid : ids_in_order) spec.waypoints.push_back(a.find_question(qid)->location);
        spec.waypoints.push_back(a.destination ? *a.destination : geo::destination_point(last_poi, 0.0, 300.0));
      }
      p.trace = generate_trace(spec);
    }
  }

  const auto record_live = [&](const std::string& label) {
    const auto r = call(label, "GET", "/v1/tasks/" + res.task_id + "/aggregate?fn=avg", "", dt);
    if (r.first != 200) return;
    LiveReading lr;
    lr.t = now;
    lr.events = r.second["events"].get<std::size_t>();
    lr.count = r.second["count"].get<std::int64_t>();
    if (!r.second["value"].is_null()) lr.avg = r.second["value"].get<double>();
    res.live.push_back(lr);
  };

  const auto pick = [](Participant& p, const AnswerRule& rule) -> Json {
    switch (rule.kind) {
      case AnswerRule::Kind::Fixed:
        return Json::array({rule.option});
      case AnswerRule::Kind::Categorical: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = u(p.rng);
        double acc = 0.0;
        for (const auto& [opt, prob] : rule.distribution) {
          acc += prob;
          if (x < acc) return Json::array({opt});
        }
        return Json::array({rule.distribution.back().first});
      }
      case AnswerRule::Kind::Scripted:
        return Json::array({rule.script[static_cast<std::size_t>(p.answer_count) % rule.script.size()]});
      case AnswerRule::Kind::Text:
        return rule.text;
    }
    return nullptr;
  };

  // Virtual-time event queue over every participant's trace.
  using Item = std::tuple<std::int64_t, std::size_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t i = 0; i < people.size(); ++i) {
    if (!people[i].trace.empty()) queue.emplace(people[i].trace.front().t.ms, i, 0);
  }
  std::normal_distribution<double> reading(0.0, 1.0);
  while (!queue.empty()) {
    const auto [ms, i, k] = queue.top();
    queue.pop();
    Participant& p = people[i];
    if (k + 1 < p.trace.size()) queue.emplace(p.trace[k + 1].t.ms, i, k + 1);
    if (p.stopped) continue;
    const TracePoint& tp = p.trace[k];
    now = tp.t;
    const std::string label = "participant-" + std::to_string(i);
    const std::string base = "/v1/sessions/" + p.session;

    const auto loc = call(label, "POST", base + "/locations",
                          Json{{"lat", tp.reported.lat_deg()}, {"lon", tp.reported.lon_deg()}}.dump(), p.token);
    if (loc.first != 200) {
      // A finished session refuses further fixes; the participant goes home.
      const std::string err = loc.second.value("error", std::string("Unknown"));
      if (err != "SessionComplete") ++res.rejections[err];
      p.stopped = true;
      continue;
    }
    bool aggregate_changed = false;
    for (const auto& [q, st] : loc.second["statuses"].items()) p.statuses[std::stoll(q)] = st.get<std::string>();
    for (const auto& ev : loc.second["events"]) {
      if (ev["kind"] == "Left" && p.answered.contains(ev["question"].get<QuestionId>())) aggregate_changed = true;
    }
    if (aggregate_changed) record_live(label);

    const auto& policy = p.entry->policy;
    for (const auto& [qid, zone] : p.zones) {
      if (p.answered.contains(qid) || p.statuses[qid] == "Locked" || p.statuses[qid] == "Answered") continue;
      if (std::find(policy.skip.begin(), policy.skip.end(), qid) != policy.skip.end()) continue;
      if (!geo::zone_contains(zone, tp.truth)) continue;
      const auto rit = policy.rules.find(qid);
      if (rit == policy.rules.end() && !policy.fallback) continue;
      const AnswerRule& rule = rit != policy.rules.end() ? rit->second : *policy.fallback;
      Json body{{"question", qid}};
      const Json choice = pick(p, rule);
      if (choice.is_string()) body["text"] = choice;
      else body["options"] = choice;
      body["lat"] = tp.reported.lat_deg();
      body["lon"] = tp.reported.lon_deg();
      if (const auto t = p.qr_tokens.find(qid); t != p.qr_tokens.end()) body["proof"] = {{"token", t->second}};
      const auto ans = call(label, "POST", base + "/answers", body.dump(), p.token);
      if (ans.first == 200) {
        ++res.answers_accepted;
        ++p.answer_count;
        p.answered.insert(qid);
        p.statuses[qid] = "Answered";
        for (const auto& u : ans.second["unlocked"]) p.statuses[u.get<QuestionId>()] = "Unlocked";
        record_live(label);
      } else {
        ++res.rejections[ans.second.value("error", std::string("Unknown"))];
      }
    }

    if (!p.entry->upload_sensors) continue;
    Json records = Json::array();
    for (const auto& [qid, zone] : p.zones) {
      const auto& st = p.statuses[qid];
      const auto* q = p.asset->find_question(qid);
      const bool collecting = st == "Inside" || (st == "Answered" && geo::zone_contains(zone, tp.reported));
      for (const auto& s : q->sensors) {
        const auto key = std::make_pair(qid, s.kind);
        if (!collecting) {
          p.next_sample.erase(key);
          continue;
        }
        const auto per = sensing::period_ms(q->frequency);
        auto& next = p.next_sample.try_emplace(key, tp.t.ms).first->second;
        for (; next <= tp.t.ms && records.size() < 64; next += per) {
          Json values = Json::array();
          if (s.kind == asset::SensorKind::Location) {
            values = {tp.reported.lat_deg(), tp.reported.lon_deg()};
          } else {
            for (std::size_t v = 0; v < sensing::arity(s.kind); ++v) values.push_back(reading(p.rng));
          }
          records.push_back({{"session", p.session}, {"kind", std::string(asset::to_string(s.kind))},
                             {"captured_at", next}, {"values", values}, {"lat", tp.reported.lat_deg()},
                             {"lon", tp.reported.lon_deg()}});
        }
      }
    }
    if (records.empty()) continue;
    const auto up = call(label, "POST", base + "/sensors", Json{{"records", records}}.dump(), p.token);
    if (up.first == 200) res.samples_accepted += up.second["accepted"].get<std::int64_t>();
  }

  for (const auto& tid : svc.task_ids()) {
    res.exports[tid] = svc.export_task(tid);
    res.log.push_back({{"type", "export"}, {"task", tid}, {"body", res.exports[tid]}});
  }
  res.log.push_back({{"type", "state"}, {"sha256", crypto::to_hex(crypto::sha256(svc.dump_state()))}});
  return res;
}

std::vector<aggregation::Event> export_events(const std::string& export_ndjson) {
  std::vector<aggregation::Event> out;
  for (const auto& row : parse_log(export_ndjson)) {
    if (row.value("type", std::string()) != "event") continue;
    aggregation::Event e;
    const auto t = parse_iso8601(row.at("t").get<std::string>());
    const auto kind = aggregation::event_kind_from(row.at("kind").get<std::string>());
    if (!t || !kind) throw Error(ErrorCode::Syntax, "malformed export event row");
    e.t = *t;
    e.kind = *kind;
    e.participant = row.at("participant").get<std::string>();
    if (row.contains("value")) e.value = row["value"].get<double>();
    out.push_back(std::move(e));
  }
  return out;
}

AggregateCheck check_aggregate(std::span<const aggregation::Event> events, aggregation::Fn fn) {
  AggregateCheck c;
  aggregation::LocalizedAggregator engine;
  for (std::size_t i = 0; i < events.size(); ++i) {
    engine.apply(events[i]);
    if (engine.read(fn) != aggregation::oracle_aggregate(events.first(i + 1), fn)) {
      c.prefix_equal = false;
      if (!c.first_mismatch) c.first_mismatch = i + 1;
    }
  }
  c.events = events.size();
  c.engine = engine.read(fn);
  c.oracle = aggregation::oracle_aggregate(events, fn);
  return c;
}

ReplayResult replay(const std::vector<Json>& log) {
  service::Config cfg;
  std::vector<service::EventRecord> events;
  for (const auto& line : log) {
    const std::string type = line.value("type", std::string());
    if (type == "header") {
      cfg.secret_key = line.value("secret_key", cfg.secret_key);
      cfg.designer_tokens = {line.value("designer_token", std::string("designer"))};
    } else if (type == "event") {
      events.push_back(service::event_from_json(line));
    }
  }
  ReplayResult out;
  out.service = service::Service::refold(cfg, events);
  const std::string last = std::to_string(events.size());
  for (const auto& line : log) {
    const std::string type = line.value("type", std::string());
    if (type == "export") {
      const std::string tid = line["task"];
      std::string body;
      try {
        body = out.service->export_task(tid);
      } catch (const Error&) {
        throw Error(ErrorCode::DivergenceDetected, "task " + tid + " missing after replay", last);
      }
      if (body != line["body"].get<std::string>()) {
        throw Error(ErrorCode::DivergenceDetected, "export of task " + tid + " differs after sequence " + last, last);
      }
      out.exports[tid] = std::move(body);
    } else if (type == "state") {
      if (crypto::to_hex(crypto::sha256(out.service->dump_state())) != line["sha256"].get<std::string>()) {
        throw Error(ErrorCode::DivergenceDetected, "service state differs after sequence " + last, last);
      }
    }
  }
  return out;
}

}  // namespace agora::sim
