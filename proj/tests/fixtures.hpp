#pragma once
// Shared helpers for building asset documents in tests.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/asset.hpp"
#include "agora/geo.hpp"

namespace fixtures {

using Json = nlohmann::ordered_json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string listing1_text() { return read_text(std::string(AGORA_TEST_DATA) + "/listing1.json"); }

inline Json listing1_json() { return Json::parse(agora::asset::normalize_lenient_json(listing1_text())); }

/// Shortest text that reads back as the same double.
inline std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct Poi {
  std::int64_t id;
  double lat;
  double lon;
  std::string type = "radio";
  std::vector<std::pair<std::int64_t, Json>> options{{1, nullptr}, {2, nullptr}};  // id, next
  bool mandatory = true;
  double vicinity = 25.0;
  std::vector<std::string> sensors{};
  std::string frequency = "Medium";
  std::string time = "3";
  std::vector<std::string> credits{};  // per option, "" when absent
};

inline Json question_json(const Poi& p) {
  Json q = Json::object();
  q["id"] = p.id;
  q["Question"] = "Question " + std::to_string(p.id);
  q["Type"] = p.type;
  q["Latitude"] = num(p.lat);
  q["Longitude"] = num(p.lon);
  Json sensors = Json::array();
  for (std::size_t i = 0; i < p.sensors.size(); ++i) sensors.push_back({{"id", i + 1}, {"Name", p.sensors[i]}});
  q["Sensor"] = sensors;
  q["Time"] = p.time;
  q["Frequency"] = p.frequency;
  q["Sequence"] = "Disable";
  q["Visibility"] = "true";
  q["Mandatory"] = p.mandatory ? "true" : "false";
  Json opts = Json::array();
  if (p.type != "textbox") {
    for (std::size_t i = 0; i < p.options.size(); ++i) {
      const auto& [id, next] = p.options[i];
      opts.push_back({{"id", id},
                      {"Name", "Option " + std::to_string(id)},
                      {"NextQuestion", next},
                      {"Credits", i < p.credits.size() ? p.credits[i] : std::string()}});
    }
  }
  q["Option"] = opts;
  q["Combination"] = nullptr;
  q["Vicinity"] = num(p.vicinity);
  return q;
}

inline Json asset_json(const std::string& mode, const std::vector<Poi>& pois, int default_credit = 3,
                       const Json& settings_extra = Json::object()) {
  Json settings = {{"StartLatitude", nullptr}, {"StartLongitude", nullptr}, {"DestinationLatitude", nullptr},
                   {"DestinationLongitude", nullptr}, {"Mode", mode}, {"DefaultCredit", std::to_string(default_credit)}};
  for (const auto& [k, v] : settings_extra.items()) settings[k] = v;
  Json qs = Json::array();
  for (const auto& p : pois) qs.push_back(question_json(p));
  return {{"Id", "test-asset"},
          {"Name", mode + "_test"},
          {"Url", "http://smart-agora.org"},
          {"Metadata", {{"record", {{"StartAndDestinationModel", settings}, {"SampleDataModel", qs}}}}}};
}

/// Four points of interest about 300 m apart, heading south-east in Zurich.
inline std::vector<Poi> four_pois(const std::string& type = "radio") {
  std::vector<Poi> out;
  const double lat0 = 47.3769, lon0 = 8.5417;
  for (int i = 0; i < 4; ++i) {
    Poi p{i + 1, lat0 - 0.0027 * i, lon0 + 0.0030 * i};
    p.type = type;
    if (type == "likert") p.options = {{1, nullptr}, {2, nullptr}, {3, nullptr}, {4, nullptr}, {5, nullptr}};
    out.push_back(p);
  }
  return out;
}

inline agora::asset::Asset make_asset(const Json& doc) { return agora::asset::from_json(doc); }

}  // namespace fixtures
