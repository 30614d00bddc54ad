#include "agora/asset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <queue>

#include "agora/error.hpp"

namespace agora::asset {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, what + " at " + path, path);
}

[[noreturn]] void range(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Range, what + " at " + path, path);
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(path + key, "missing mandatory field");
  return *it;
}

std::string join_path(const std::string& base, const char* key) { return base + key; }

// String-encoded numerics: "" and null mean absent.
std::optional<double> as_number(const Json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) schema(path, "expected a number or numeric string");
  const std::string& raw = v.get_ref<const std::string&>();
  const std::string_view text = trim(raw);
  if (text.empty()) return std::nullopt;
  double out = 0.0;
  const char* first = text.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(out)) {
    schema(path, "malformed number \"" + raw + "\"");
  }
  return out;
}

std::optional<std::int64_t> as_integer(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  const auto d = as_number(v, path);
  if (!d) return std::nullopt;
  if (std::trunc(*d) != *d || std::fabs(*d) > 9.0e15) schema(path, "expected an integer");
  return static_cast<std::int64_t>(*d);
}

double required_number(const Json& obj, const char* key, const std::string& base) {
  const auto v = as_number(require(obj, key, base), join_path(base, key));
  if (!v) schema(join_path(base, key), "missing mandatory value");
  return *v;
}

bool as_bool(const Json& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = lower(trim(v.get_ref<const std::string&>()));
    if (s == "true") return true;
    if (s == "false") return false;
  }
  schema(path, "expected \"true\" or \"false\"");
}

std::string as_text(const Json& v, const std::string& path) {
  if (!v.is_string()) schema(path, "expected a string");
  return v.get<std::string>();
}

Json extras_of(const Json& obj, std::initializer_list<std::string_view> known) {
  Json out = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) out[it.key()] = it.value();
  }
  return out;
}

void append_extras(Json& obj, const Json& extras) {
  for (auto it = extras.begin(); it != extras.end(); ++it) obj[it.key()] = it.value();
}

geo::GeoPoint make_point(double lat, double lon, const std::string& lat_path, const std::string& lon_path) {
  if (lat < -90.0 || lat > 90.0) range(lat_path, "latitude " + format_number(lat) + " out of range");
  if (lon < -180.0 || lon > 180.0) range(lon_path, "longitude " + format_number(lon) + " out of range");
  return geo::GeoPoint(lat, lon);
}

std::optional<geo::GeoPoint> optional_point(const Json& obj, const char* lat_key, const char* lon_key,
                                            const std::string& base) {
  const auto lat_it = obj.find(lat_key);
  const auto lon_it = obj.find(lon_key);
  const auto lat = lat_it == obj.end() ? std::nullopt : as_number(*lat_it, base + lat_key);
  const auto lon = lon_it == obj.end() ? std::nullopt : as_number(*lon_it, base + lon_key);
  if (!lat && !lon) return std::nullopt;
  if (!lat) schema(base + lat_key, "latitude missing while longitude is set");
  if (!lon) schema(base + lon_key, "longitude missing while latitude is set");
  return make_point(*lat, *lon, base + lat_key, base + lon_key);
}

Mode parse_mode(const Json& v, const std::string& path) {
  const std::string s = lower(trim(as_text(v, path)));
  if (s == "simple") return Mode::Simple;
  if (s == "sequential") return Mode::Sequential;
  if (s == "dynamic") return Mode::Dynamic;
  schema(path, "unknown mode \"" + v.get<std::string>() + "\"");
}

QuestionType parse_qtype(const Json& v, const std::string& path) {
  const std::string s = lower(trim(as_text(v, path)));
  if (s == "radio") return QuestionType::Radio;
  if (s == "checkbox") return QuestionType::Checkbox;
  if (s == "likert") return QuestionType::Likert;
  if (s == "textbox" || s == "text" || s == "text box") return QuestionType::Textbox;
  schema(path, "unknown question type \"" + v.get<std::string>() + "\"");
}

Frequency parse_frequency(const Json& v, const std::string& path) {
  const std::string s = lower(trim(as_text(v, path)));
  if (s == "low") return Frequency::Low;
  if (s == "medium") return Frequency::Medium;
  if (s == "high") return Frequency::High;
  schema(path, "unknown frequency \"" + v.get<std::string>() + "\"");
}

ZoneShape parse_shape(const Json& v, const std::string& path) {
  const std::string s = lower(trim(as_text(v, path)));
  if (s == "circle") return ZoneShape::Circle;
  if (s == "ellipse") return ZoneShape::Ellipse;
  schema(path, "unknown localization shape \"" + v.get<std::string>() + "\"");
}

ProofPolicy parse_policy(const Json& v, const std::string& path) {
  ProofPolicy p;
  if (v.is_array()) {
    p.kind = ProofPolicy::Kind::Listed;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto id = as_integer(v[i], path + "[" + std::to_string(i) + "]");
      if (!id) schema(path + "[" + std::to_string(i) + "]", "expected a question id");
      p.questions.insert(*id);
    }
    return p;
  }
  const std::string s = lower(trim(as_text(v, path)));
  if (s == "none") p.kind = ProofPolicy::Kind::None;
  else if (s == "mandatory") p.kind = ProofPolicy::Kind::Mandatory;
  else if (s == "all") p.kind = ProofPolicy::Kind::All;
  else schema(path, "unknown proof policy \"" + v.get<std::string>() + "\"");
  return p;
}

Json policy_to_json(const ProofPolicy& p) {
  switch (p.kind) {
    case ProofPolicy::Kind::None: return "None";
    case ProofPolicy::Kind::Mandatory: return "Mandatory";
    case ProofPolicy::Kind::All: return "All";
    case ProofPolicy::Kind::Listed: {
      Json arr = Json::array();
      for (auto id : p.questions) arr.push_back(id);
      return arr;
    }
  }
  return nullptr;
}

QuestionOption parse_option(const Json& j, const std::string& base) {
  if (!j.is_object()) schema(base, "expected an object");
  QuestionOption o;
  const auto id = as_integer(require(j, "id", base + "."), base + ".id");
  if (!id) schema(base + ".id", "missing mandatory value");
  o.id = *id;
  o.name = as_text(require(j, "Name", base + "."), base + ".Name");
  if (auto it = j.find("NextQuestion"); it != j.end()) o.next_question = as_integer(*it, base + ".NextQuestion");
  if (auto it = j.find("Credits"); it != j.end()) {
    o.credits = as_integer(*it, base + ".Credits");
    if (o.credits && *o.credits < 0) range(base + ".Credits", "credits must be non-negative");
  }
  o.extras = extras_of(j, {"id", "Name", "NextQuestion", "Credits"});
  return o;
}

SensorSpec parse_sensor(const Json& j, std::size_t index, const std::string& base) {
  if (!j.is_object()) schema(base, "expected an object");
  SensorSpec s;
  if (auto it = j.find("id"); it != j.end()) {
    const auto id = as_integer(*it, base + ".id");
    s.id = id.value_or(static_cast<std::int64_t>(index + 1));
  } else {
    s.id = static_cast<std::int64_t>(index + 1);
  }
  const std::string name = as_text(require(j, "Name", base + "."), base + ".Name");
  const auto kind = sensor_kind_from(name);
  if (!kind) schema(base + ".Name", "unknown sensor \"" + name + "\"");
  s.kind = *kind;
  s.extras = extras_of(j, {"id", "Name"});
  return s;
}

PoiQuestion parse_question(const Json& j, const std::string& base) {
  if (!j.is_object()) schema(base, "expected an object");
  const std::string dot = base + ".";
  PoiQuestion q;
  const auto id = as_integer(require(j, "id", dot), dot + "id");
  if (!id) schema(dot + "id", "missing mandatory value");
  q.id = *id;
  q.text = as_text(require(j, "Question", dot), dot + "Question");
  q.qtype = parse_qtype(require(j, "Type", dot), dot + "Type");
  const double lat = required_number(j, "Latitude", dot);
  const double lon = required_number(j, "Longitude", dot);
  q.location = make_point(lat, lon, dot + "Latitude", dot + "Longitude");

  if (auto it = j.find("Sensor"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema(dot + "Sensor", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      q.sensors.push_back(parse_sensor((*it)[i], i, dot + "Sensor[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = j.find("Time"); it != j.end()) {
    q.time_min = as_number(*it, dot + "Time").value_or(0.0);
    if (q.time_min < 0.0) range(dot + "Time", "duration must be non-negative");
  }
  if (auto it = j.find("Frequency"); it != j.end() && !it->is_null()) {
    q.frequency = parse_frequency(*it, dot + "Frequency");
  }
  if (auto it = j.find("Sequence"); it != j.end() && !it->is_null()) {
    if (it->is_boolean()) {
      q.sequence_flag = it->get<bool>();
    } else {
      const std::string s = lower(trim(as_text(*it, dot + "Sequence")));
      if (s == "enable" || s == "enabled" || s == "true") q.sequence_flag = true;
      else if (s == "disable" || s == "disabled" || s == "false") q.sequence_flag = false;
      else schema(dot + "Sequence", "expected \"Enable\" or \"Disable\"");
    }
  }
  if (auto it = j.find("Visibility"); it != j.end()) q.visibility = as_bool(*it, dot + "Visibility");
  if (auto it = j.find("Mandatory"); it != j.end()) q.mandatory = as_bool(*it, dot + "Mandatory");
  if (auto it = j.find("Option"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema(dot + "Option", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      q.options.push_back(parse_option((*it)[i], dot + "Option[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = j.find("Combination"); it != j.end()) q.combination = *it;
  const double vicinity = required_number(j, "Vicinity", dot);
  if (!(vicinity > 0.0)) range(dot + "Vicinity", "vicinity must be positive");
  q.vicinity_m = vicinity;
  q.extras = extras_of(j, {"id", "Question", "Type", "Latitude", "Longitude", "Sensor", "Time", "Frequency",
                           "Sequence", "Visibility", "Mandatory", "Option", "Combination", "Vicinity"});
  return q;
}

Json point_component(const std::optional<geo::GeoPoint>& p, bool lat) {
  if (!p) return nullptr;
  return format_number(lat ? p->lat_deg() : p->lon_deg());
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Simple: return "Simple";
    case Mode::Sequential: return "Sequential";
    case Mode::Dynamic: return "Dynamic";
  }
  return "";
}

std::string_view to_string(QuestionType t) noexcept {
  switch (t) {
    case QuestionType::Radio: return "radio";
    case QuestionType::Checkbox: return "checkbox";
    case QuestionType::Likert: return "likert";
    case QuestionType::Textbox: return "textbox";
  }
  return "";
}

std::string_view to_string(SensorKind k) noexcept {
  switch (k) {
    case SensorKind::Light: return "Light";
    case SensorKind::Gyroscope: return "Gyroscope";
    case SensorKind::Proximity: return "Proximity";
    case SensorKind::Accelerometer: return "Accelerometer";
    case SensorKind::Location: return "Location";
    case SensorKind::Noise: return "Noise";
  }
  return "";
}

std::string_view to_string(Frequency f) noexcept {
  switch (f) {
    case Frequency::Low: return "Low";
    case Frequency::Medium: return "Medium";
    case Frequency::High: return "High";
  }
  return "";
}

std::optional<SensorKind> sensor_kind_from(std::string_view name) noexcept {
  const std::string s = lower(trim(name));
  if (s == "light") return SensorKind::Light;
  if (s == "gyroscope") return SensorKind::Gyroscope;
  if (s == "proximity") return SensorKind::Proximity;
  if (s == "accelerometer") return SensorKind::Accelerometer;
  if (s == "location" || s == "gps" || s == "gps location") return SensorKind::Location;
  if (s == "noise") return SensorKind::Noise;
  return std::nullopt;
}

const QuestionOption* PoiQuestion::find_option(std::int64_t option_id) const noexcept {
  for (const auto& o : options) {
    if (o.id == option_id) return &o;
  }
  return nullptr;
}

const PoiQuestion* Asset::find_question(QuestionId qid) const noexcept {
  for (const auto& q : questions) {
    if (q.id == qid) return &q;
  }
  return nullptr;
}

std::vector<QuestionId> Asset::ordered_ids() const {
  std::vector<QuestionId> ids;
  ids.reserve(questions.size());
  for (const auto& q : questions) ids.push_back(q.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::int64_t option_credit(const Asset& a, const QuestionOption& opt) noexcept {
  return opt.credits.value_or(a.default_credit);
}

geo::LocalizationZone zone_for(const Asset& a, QuestionId qid) {
  const PoiQuestion* q = a.find_question(qid);
  if (q == nullptr) throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(qid));
  if (a.zone_shape == ZoneShape::Circle) return geo::make_circle(q->location, q->vicinity_m);

  std::optional<geo::GeoPoint> target;
  const auto ids = a.ordered_ids();
  const auto it = std::upper_bound(ids.begin(), ids.end(), qid);
  if (it != ids.end()) target = a.find_question(*it)->location;
  else if (a.destination) target = a.destination;
  const double major = q->vicinity_m;
  const double minor = q->vicinity_m / 2.0;
  if (target && !(*target == q->location)) return geo::ellipse_toward(q->location, *target, major, minor);
  return geo::make_ellipse(q->location, major, minor, 0.0);
}

std::string normalize_lenient_json(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 16);
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
        out.push_back(c);
      } else if (c == '\\') {
        escaped = true;
        out.push_back(c);
      } else if (c == '"') {
        in_string = false;
        out.push_back(c);
      } else if (static_cast<unsigned char>(c) < 0x20) {
        static constexpr char kHex[] = "0123456789abcdef";
        out += "\\u00";
        out.push_back(kHex[(c >> 4) & 0xF]);
        out.push_back(kHex[c & 0xF]);
      } else {
        out.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == ']' || text[j] == '}')) continue;
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

Asset from_json(const Json& doc) {
  if (!doc.is_object()) schema("$", "document must be an object");
  Asset a;
  a.id = as_text(require(doc, "Id", ""), "Id");
  a.name = as_text(require(doc, "Name", ""), "Name");
  if (auto it = doc.find("Url"); it != doc.end() && !it->is_null()) a.url = as_text(*it, "Url");

  const Json& metadata = require(doc, "Metadata", "");
  if (!metadata.is_object()) schema("Metadata", "expected an object");
  const Json& record = require(metadata, "record", "Metadata.");
  if (!record.is_object()) schema("Metadata.record", "expected an object");

  const Json& settings = require(record, "StartAndDestinationModel", "");
  if (!settings.is_object()) schema("StartAndDestinationModel", "expected an object");
  const std::string sb = "StartAndDestinationModel.";
  a.start = optional_point(settings, "StartLatitude", "StartLongitude", sb);
  a.destination = optional_point(settings, "DestinationLatitude", "DestinationLongitude", sb);
  a.mode = parse_mode(require(settings, "Mode", sb), sb + "Mode");
  if (auto it = settings.find("DefaultCredit"); it != settings.end()) {
    a.default_credit = as_integer(*it, sb + "DefaultCredit").value_or(0);
    if (a.default_credit < 0) range(sb + "DefaultCredit", "default credit must be non-negative");
  }
  if (auto it = settings.find("Localization"); it != settings.end() && !it->is_null()) {
    a.zone_shape = parse_shape(*it, sb + "Localization");
  }
  if (auto it = settings.find("ProofPolicy"); it != settings.end() && !it->is_null()) {
    a.proof_policy = parse_policy(*it, sb + "ProofPolicy");
  }

  const Json& questions = require(record, "SampleDataModel", "");
  if (!questions.is_array()) schema("SampleDataModel", "expected an array");
  if (questions.empty()) schema("SampleDataModel", "at least one question is required");
  for (std::size_t i = 0; i < questions.size(); ++i) {
    a.questions.push_back(parse_question(questions[i], "SampleDataModel[" + std::to_string(i) + "]"));
  }

  a.extras = extras_of(doc, {"Id", "Name", "Url", "Metadata"});
  a.metadata_extras = extras_of(metadata, {"record"});
  a.record_extras = extras_of(record, {"StartAndDestinationModel", "SampleDataModel"});
  a.settings_extras = extras_of(settings, {"StartLatitude", "StartLongitude", "DestinationLatitude",
                                           "DestinationLongitude", "Mode", "DefaultCredit", "Localization",
                                           "ProofPolicy"});
  return a;
}

Asset parse_asset(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(normalize_lenient_json(document));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Syntax, std::string("malformed document: ") + e.what(),
                "byte " + std::to_string(e.byte));
  }
  return from_json(doc);
}

Json to_json(const Asset& a) {
  Json settings = Json::object();
  settings["StartLatitude"] = point_component(a.start, true);
  settings["StartLongitude"] = point_component(a.start, false);
  settings["DestinationLatitude"] = point_component(a.destination, true);
  settings["DestinationLongitude"] = point_component(a.destination, false);
  settings["Mode"] = std::string(to_string(a.mode));
  settings["DefaultCredit"] = std::to_string(a.default_credit);
  if (a.zone_shape == ZoneShape::Ellipse) settings["Localization"] = "Ellipse";
  if (a.proof_policy.kind != ProofPolicy::Kind::None) settings["ProofPolicy"] = policy_to_json(a.proof_policy);
  append_extras(settings, a.settings_extras);

  Json questions = Json::array();
  for (const auto& q : a.questions) {
    Json jq = Json::object();
    jq["id"] = q.id;
    jq["Question"] = q.text;
    jq["Type"] = std::string(to_string(q.qtype));
    jq["Latitude"] = format_number(q.location.lat_deg());
    jq["Longitude"] = format_number(q.location.lon_deg());
    Json sensors = Json::array();
    for (const auto& s : q.sensors) {
      Json js = Json::object();
      js["id"] = s.id;
      js["Name"] = std::string(to_string(s.kind));
      append_extras(js, s.extras);
      sensors.push_back(std::move(js));
    }
    jq["Sensor"] = std::move(sensors);
    jq["Time"] = format_number(q.time_min);
    jq["Frequency"] = std::string(to_string(q.frequency));
    jq["Sequence"] = q.sequence_flag ? "Enable" : "Disable";
    jq["Visibility"] = q.visibility ? "true" : "false";
    jq["Mandatory"] = q.mandatory ? "true" : "false";
    Json options = Json::array();
    for (const auto& o : q.options) {
      Json jo = Json::object();
      jo["id"] = o.id;
      jo["Name"] = o.name;
      jo["NextQuestion"] = o.next_question ? Json(*o.next_question) : Json(nullptr);
      jo["Credits"] = o.credits ? std::to_string(*o.credits) : std::string();
      append_extras(jo, o.extras);
      options.push_back(std::move(jo));
    }
    jq["Option"] = std::move(options);
    jq["Combination"] = q.combination;
    jq["Vicinity"] = format_number(q.vicinity_m);
    append_extras(jq, q.extras);
    questions.push_back(std::move(jq));
  }

  Json record = Json::object();
  record["StartAndDestinationModel"] = std::move(settings);
  record["SampleDataModel"] = std::move(questions);
  append_extras(record, a.record_extras);

  Json metadata = Json::object();
  metadata["record"] = std::move(record);
  append_extras(metadata, a.metadata_extras);

  Json doc = Json::object();
  doc["Id"] = a.id;
  doc["Name"] = a.name;
  doc["Url"] = a.url;
  doc["Metadata"] = std::move(metadata);
  append_extras(doc, a.extras);
  return doc;
}

std::string serialize_asset(const Asset& a, int indent) { return to_json(a).dump(indent); }

bool ValidationReport::ok() const noexcept { return error_count() == 0; }

std::size_t ValidationReport::error_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Finding::Severity::Error;
  }));
}

ValidationReport validate_asset(const Asset& a) {
  ValidationReport report;
  auto error = [&](std::string path, std::string message) {
    report.findings.push_back({Finding::Severity::Error, std::move(path), std::move(message)});
  };
  auto notice = [&](std::string path, std::string message) {
    report.findings.push_back({Finding::Severity::Notice, std::move(path), std::move(message)});
  };

  std::map<QuestionId, std::size_t> index_of;
  for (std::size_t i = 0; i < a.questions.size(); ++i) {
    const std::string base = "SampleDataModel[" + std::to_string(i) + "]";
    if (!index_of.emplace(a.questions[i].id, i).second) {
      error(base + ".id", "duplicate question id " + std::to_string(a.questions[i].id));
    }
  }
  const auto ordered = a.ordered_ids();

  for (std::size_t i = 0; i < a.questions.size(); ++i) {
    const auto& q = a.questions[i];
    const std::string base = "SampleDataModel[" + std::to_string(i) + "]";

    if (q.qtype == QuestionType::Textbox) {
      if (!q.options.empty()) error(base + ".Option", "textbox question must not have options");
    } else if (q.options.size() < 2) {
      error(base + ".Option", std::string(to_string(q.qtype)) + " question needs at least 2 options");
    }

    std::set<std::int64_t> option_ids;
    for (std::size_t j = 0; j < q.options.size(); ++j) {
      const auto& o = q.options[j];
      const std::string obase = base + ".Option[" + std::to_string(j) + "]";
      if (!option_ids.insert(o.id).second) error(obase + ".id", "duplicate option id " + std::to_string(o.id));
      if (!o.next_question) continue;
      const QuestionId next = *o.next_question;
      if (!index_of.contains(next)) {
        error(obase + ".NextQuestion", "dangling NextQuestion " + std::to_string(next));
      } else if (a.mode == Mode::Sequential) {
        const auto it = std::upper_bound(ordered.begin(), ordered.end(), q.id);
        if (it == ordered.end() || *it != next) {
          error(obase + ".NextQuestion", "NextQuestion " + std::to_string(next) + " contradicts sequential order");
        }
      } else if (a.mode == Mode::Simple) {
        notice(obase + ".NextQuestion", "NextQuestion ignored outside Dynamic mode");
      }
    }

    if (q.qtype == QuestionType::Likert) {
      for (std::size_t j = 1; j < q.options.size(); ++j) {
        if (q.options[j].id != q.options[j - 1].id + 1) {
          error(base + ".Option", "likert options must form a linear scale of consecutive ids");
          break;
        }
      }
    }

    std::set<SensorKind> kinds;
    for (std::size_t j = 0; j < q.sensors.size(); ++j) {
      if (!kinds.insert(q.sensors[j].kind).second) {
        error(base + ".Sensor[" + std::to_string(j) + "].Name",
              "duplicate sensor " + std::string(to_string(q.sensors[j].kind)));
      }
    }
    if (!q.sensors.empty() && q.vicinity_m >= kPassiveSensingRadiusM) {
      notice(base + ".Vicinity", "passive sensing: vicinity of at least 10000 m collects sensor data without restriction");
    }
  }

  if (a.mode == Mode::Dynamic) {
    if (!index_of.contains(1)) {
      error("SampleDataModel", "Dynamic mode requires an entry question with id 1");
    } else {
      std::set<QuestionId> seen{1};
      std::queue<QuestionId> frontier;
      frontier.push(1);
      while (!frontier.empty()) {
        const auto& q = a.questions[index_of.at(frontier.front())];
        frontier.pop();
        for (const auto& o : q.options) {
          if (o.next_question && index_of.contains(*o.next_question) && seen.insert(*o.next_question).second) {
            frontier.push(*o.next_question);
          }
        }
      }
      for (std::size_t i = 0; i < a.questions.size(); ++i) {
        if (!seen.contains(a.questions[i].id)) {
          error("SampleDataModel[" + std::to_string(i) + "]",
                "unreachable question " + std::to_string(a.questions[i].id));
        }
      }
    }
  }

  if (a.proof_policy.kind == ProofPolicy::Kind::Listed) {
    for (auto id : a.proof_policy.questions) {
      if (!index_of.contains(id)) {
        error("StartAndDestinationModel.ProofPolicy", "proof policy references unknown question " + std::to_string(id));
      }
    }
  }
  return report;
}

}  // namespace agora::asset
