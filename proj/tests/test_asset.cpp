#include <random>

#include <doctest.h>

#include "agora/asset.hpp"
#include "agora/error.hpp"
#include "agora/project.hpp"
#include "fixtures.hpp"

using namespace agora::asset;
using agora::Error;
using agora::ErrorCode;
using fixtures::Json;

namespace {

ErrorCode parse_error_code(const std::string& doc, std::string* path = nullptr) {
  try {
    parse_asset(doc);
  } catch (const Error& e) {
    if (path) *path = e.path();
    return e.code();
  }
  FAIL("document was accepted");
  return ErrorCode::BadRequest;
}

bool has_finding(const ValidationReport& r, const std::string& path, const std::string& fragment) {
  for (const auto& f : r.findings) {
    if (f.path == path && f.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("Sample asset parses to the stated values") {
  const Asset a = parse_asset(fixtures::listing1_text());
  CHECK(a.id == "AXeG00HIQMa8aD8nfimV");
  CHECK(a.name == "Simple_09022021_134527");
  CHECK(a.url == "http://smart-agora.org");
  CHECK(a.mode == Mode::Simple);
  CHECK(a.default_credit == 3);
  CHECK_FALSE(a.start.has_value());
  CHECK_FALSE(a.destination.has_value());
  REQUIRE(a.questions.size() == 1);
  const auto& q = a.questions[0];
  CHECK(q.id == 1);
  CHECK(q.text == "How dangerous for bikers was the last section?\t");
  CHECK(q.qtype == QuestionType::Radio);
  CHECK(q.location.lat_deg() == 47.3715915);
  CHECK(q.location.lon_deg() == 8.538603799999999);
  REQUIRE(q.sensors.size() == 2);
  CHECK(q.sensors[0].kind == SensorKind::Gyroscope);
  CHECK(q.sensors[1].kind == SensorKind::Location);
  CHECK(q.time_min == 3.0);
  CHECK(q.frequency == Frequency::Medium);
  CHECK_FALSE(q.sequence_flag);
  CHECK(q.visibility);
  CHECK(q.mandatory);
  REQUIRE(q.options.size() == 2);
  CHECK(q.options[0].id == 1);
  CHECK(q.options[0].name == "Safe");
  CHECK_FALSE(q.options[0].next_question.has_value());
  CHECK_FALSE(q.options[0].credits.has_value());
  CHECK(q.options[1].name == "Dangerous");
  CHECK(q.combination.is_null());
  CHECK(q.vicinity_m == 25.0);
  CHECK(option_credit(a, q.options[0]) == 3);
  CHECK(validate_asset(a).findings.empty());
}

TEST_CASE("Sample asset round-trips and the serialization matches the golden document") {
  const Asset a = parse_asset(fixtures::listing1_text());
  const std::string text = serialize_asset(a);
  CHECK(parse_asset(text) == a);
  // Same keys, same order, same values; whitespace ignored.
  CHECK(Json::parse(text) == fixtures::listing1_json());
  CHECK(text.find("\"Credits\": \"\"") != std::string::npos);
  CHECK(text.find("StartAndDestinationModel") != std::string::npos);
  CHECK(text.find("SampleDataModel") != std::string::npos);
}

TEST_CASE("lenient normalizer only touches trailing commas and raw control characters") {
  CHECK(normalize_lenient_json("[1,2,]") == "[1,2]");
  CHECK(normalize_lenient_json("{\"a\":1 , }") == "{\"a\":1  }");
  CHECK(normalize_lenient_json("{\"a\":\"x,]\"}") == "{\"a\":\"x,]\"}");
  CHECK(normalize_lenient_json("\"a\tb\"") == "\"a\\u0009b\"");
  CHECK(normalize_lenient_json("\"a\\\"\tb\"") == "\"a\\\"\\u0009b\"");
}

TEST_CASE("parse errors carry codes and paths") {
  std::string path;
  CHECK(parse_error_code("{\"Id\": ", &path) == ErrorCode::Syntax);

  Json doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"][0]["Latitude"] = "91.0";
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Range);
  CHECK(path == "SampleDataModel[0].Latitude");

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"][0]["Latitude"] = "95";
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Range);

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["StartAndDestinationModel"].erase("Mode");
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Schema);
  CHECK(path == "StartAndDestinationModel.Mode");

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"][0]["Vicinity"] = "0";
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Range);
  CHECK(path == "SampleDataModel[0].Vicinity");

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"][0]["Frequency"] = "Extreme";
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Schema);
  CHECK(path == "SampleDataModel[0].Frequency");

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"][0]["Sensor"][0]["Name"] = "Barometer";
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Schema);

  doc = fixtures::listing1_json();
  doc["Metadata"]["record"]["SampleDataModel"] = Json::array();
  CHECK(parse_error_code(doc.dump(), &path) == ErrorCode::Schema);
}

TEST_CASE("sequential chain 1 -> 2 -> null is valid") {
  auto pois = fixtures::four_pois();
  pois.resize(2);
  pois[0].options = {{1, 2}, {2, 2}};
  const Asset a = parse_asset(fixtures::asset_json("Sequential", pois).dump());
  CHECK(a.mode == Mode::Sequential);
  CHECK(validate_asset(a).ok());
}

TEST_CASE("empty credits serialize as empty string and explicit credits survive") {
  auto pois = fixtures::four_pois();
  pois.resize(1);
  pois[0].credits = {"", "7"};
  const Asset a = parse_asset(fixtures::asset_json("Simple", pois).dump());
  CHECK_FALSE(a.questions[0].options[0].credits.has_value());
  CHECK(a.questions[0].options[1].credits == 7);
  CHECK(option_credit(a, a.questions[0].options[1]) == 7);
  const Json out = to_json(a);
  CHECK(out["Metadata"]["record"]["SampleDataModel"][0]["Option"][0]["Credits"] == "");
  CHECK(out["Metadata"]["record"]["SampleDataModel"][0]["Option"][1]["Credits"] == "7");
}

TEST_CASE("minimal textbox asset round-trips") {
  fixtures::Poi p{1, 47.0, 8.0};
  p.type = "textbox";
  const Asset a = parse_asset(fixtures::asset_json("Simple", {p}, 0).dump());
  CHECK(a.questions[0].options.empty());
  CHECK(validate_asset(a).ok());
  CHECK(parse_asset(serialize_asset(a)) == a);
}

TEST_CASE("unknown fields and extension settings are preserved") {
  Json doc = fixtures::listing1_json();
  doc["Owner"] = "lab";
  doc["Metadata"]["record"]["SampleDataModel"][0]["Color"] = "red";
  doc["Metadata"]["record"]["SampleDataModel"][0]["Option"][0]["Emoji"] = ":)";
  doc["Metadata"]["record"]["StartAndDestinationModel"]["Theme"] = "dark";
  doc["Metadata"]["record"]["StartAndDestinationModel"]["Localization"] = "Ellipse";
  doc["Metadata"]["record"]["StartAndDestinationModel"]["ProofPolicy"] = Json::array({1});
  const Asset a = parse_asset(doc.dump());
  CHECK(a.zone_shape == ZoneShape::Ellipse);
  CHECK(a.proof_policy.kind == ProofPolicy::Kind::Listed);
  const Json out = to_json(a);
  CHECK(out["Owner"] == "lab");
  CHECK(out["Metadata"]["record"]["SampleDataModel"][0]["Color"] == "red");
  CHECK(out["Metadata"]["record"]["SampleDataModel"][0]["Option"][0]["Emoji"] == ":)");
  CHECK(out["Metadata"]["record"]["StartAndDestinationModel"]["Theme"] == "dark");
  CHECK(parse_asset(out.dump()) == a);
}

TEST_CASE("round-trip property over generated assets") {
  std::mt19937_64 rng(2024);
  const char* modes[] = {"Simple", "Sequential", "Dynamic"};
  const char* types[] = {"radio", "checkbox", "likert", "textbox"};
  const char* sensors[] = {"Light", "Gyroscope", "Proximity", "Accelerometer", "Location", "Noise"};
  const char* freqs[] = {"Low", "Medium", "High"};
  std::uniform_int_distribution<int> n_q(1, 6), pick(0, 1000);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 179.9), vic(0.5, 20000.0);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<fixtures::Poi> pois;
    const int n = n_q(rng);
    for (int i = 0; i < n; ++i) {
      fixtures::Poi p{i + 1 + (pick(rng) % 3) * 10, lat(rng), lon(rng)};
      p.type = types[pick(rng) % 4];
      p.vicinity = vic(rng);
      p.mandatory = pick(rng) % 2;
      p.frequency = freqs[pick(rng) % 3];
      p.time = fixtures::num(pick(rng) / 10.0);
      for (int s = 0; s < 6; ++s) {
        if (pick(rng) % 3 == 0) p.sensors.push_back(sensors[s]);
      }
      const int n_opt = 2 + pick(rng) % 3;
      p.options.clear();
      for (int o = 0; o < n_opt; ++o) {
        Json next = pick(rng) % 2 ? Json(pick(rng) % 9) : Json(nullptr);
        p.options.emplace_back(o + 1, next);
        p.credits.push_back(pick(rng) % 2 ? std::to_string(pick(rng) % 10) : std::string());
      }
      pois.push_back(p);
    }
    const Json doc = fixtures::asset_json(modes[pick(rng) % 3], pois, pick(rng) % 5);
    const Asset a = parse_asset(doc.dump());
    const Asset b = parse_asset(serialize_asset(a));
    CHECK(a == b);
    CHECK(to_json(b) == doc);
  }
}

TEST_CASE("validation reports each injected defect at its path") {
  using fixtures::Poi;
  SUBCASE("dangling NextQuestion") {
    auto pois = fixtures::four_pois();
    pois.resize(2);
    pois[0].options = {{1, 2}, {2, 9}};
    pois[1].options = {{1, nullptr}, {2, nullptr}};
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Dynamic", pois).dump()));
    CHECK(has_finding(r, "SampleDataModel[0].Option[1].NextQuestion", "dangling NextQuestion 9"));
  }
  SUBCASE("unreachable question in dynamic mode") {
    auto pois = fixtures::four_pois();
    pois.resize(3);
    pois[0].options = {{1, 2}, {2, nullptr}};
    const auto a = parse_asset(fixtures::asset_json("Dynamic", pois).dump());
    const auto r = validate_asset(a);
    CHECK(has_finding(r, "SampleDataModel[2]", "unreachable question 3"));
    CHECK_FALSE(has_finding(r, "SampleDataModel[1]", "unreachable"));
  }
  SUBCASE("dynamic without question 1") {
    auto pois = fixtures::four_pois();
    pois.resize(1);
    pois[0].id = 2;
    CHECK(has_finding(validate_asset(parse_asset(fixtures::asset_json("Dynamic", pois).dump())), "SampleDataModel",
                      "entry question"));
  }
  SUBCASE("duplicate ids") {
    auto pois = fixtures::four_pois();
    pois[2].id = 2;
    pois[0].options = {{1, nullptr}, {1, nullptr}};
    pois[1].sensors = {"Light", "Light"};
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Simple", pois).dump()));
    CHECK(has_finding(r, "SampleDataModel[2].id", "duplicate question id 2"));
    CHECK(has_finding(r, "SampleDataModel[0].Option[1].id", "duplicate option id 1"));
    CHECK(has_finding(r, "SampleDataModel[1].Sensor[1].Name", "duplicate sensor"));
  }
  SUBCASE("option counts and likert scale") {
    auto pois = fixtures::four_pois();
    pois[0].options = {{1, nullptr}};
    pois[1].type = "likert";
    pois[1].options = {{1, nullptr}, {2, nullptr}, {4, nullptr}};
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Simple", pois).dump()));
    CHECK(has_finding(r, "SampleDataModel[0].Option", "at least 2 options"));
    CHECK(has_finding(r, "SampleDataModel[1].Option", "linear scale"));
    CHECK(r.error_count() == 2);
  }
  SUBCASE("sequential next contradicting id order") {
    auto pois = fixtures::four_pois();
    pois[0].options = {{1, 3}, {2, nullptr}};
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Sequential", pois).dump()));
    CHECK(has_finding(r, "SampleDataModel[0].Option[0].NextQuestion", "contradicts sequential order"));
  }
  SUBCASE("passive sensing is a notice, not an error") {
    auto pois = fixtures::four_pois();
    pois[0].vicinity = 50000.0;
    pois[0].sensors = {"Noise"};
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Simple", pois).dump()));
    CHECK(r.ok());
    CHECK(has_finding(r, "SampleDataModel[0].Vicinity", "passive sensing"));
  }
  SUBCASE("proof policy naming unknown question") {
    Json extra = Json::object();
    extra["ProofPolicy"] = Json::array({1, 8});
    const auto r = validate_asset(parse_asset(fixtures::asset_json("Simple", fixtures::four_pois(), 3, extra).dump()));
    CHECK(has_finding(r, "StartAndDestinationModel.ProofPolicy", "unknown question 8"));
  }
}

TEST_CASE("zone_for builds circles or ellipses pointing at the next question") {
  auto doc = fixtures::asset_json("Sequential", fixtures::four_pois());
  const Asset circ = parse_asset(doc.dump());
  const auto z = zone_for(circ, 2);
  REQUIRE(std::holds_alternative<agora::geo::Circle>(z));
  CHECK(std::get<agora::geo::Circle>(z).radius_m == 25.0);

  doc["Metadata"]["record"]["StartAndDestinationModel"]["Localization"] = "Ellipse";
  const Asset ell = parse_asset(doc.dump());
  const auto e = std::get<agora::geo::Ellipse>(zone_for(ell, 2));
  CHECK(e.semi_major_m == 25.0);
  CHECK(e.semi_minor_m == 12.5);
  CHECK(e.minor_axis_bearing_deg ==
        doctest::Approx(agora::geo::initial_bearing(ell.find_question(2)->location, ell.find_question(3)->location)));
  // Last question without destination points north.
  CHECK(std::get<agora::geo::Ellipse>(zone_for(ell, 4)).minor_axis_bearing_deg == 0.0);
  CHECK_THROWS_AS(zone_for(ell, 99), Error);
}

TEST_CASE("auto_assign picks the most recent task") {
  Project p{"p-1", "Cycling", "designer", true, {}};
  std::vector<Task> tasks{{"t-1", "p-1", "older", {1000}, TaskStatus::Active},
                          {"t-2", "p-1", "newer", {2000}, TaskStatus::Active}};
  const auto a = auto_assign(p, "a-1", tasks, "as-1", {3000});
  CHECK(a.task_id == "t-2");
  CHECK(a.open_enrollment());
  CHECK(a.permits("anyone"));

  tasks.resize(1);
  CHECK(auto_assign(p, "a-1", tasks, "as-2", {3000}).task_id == "t-1");

  tasks.clear();
  try {
    auto_assign(p, "a-1", tasks, "as-3", {3000});
    FAIL("expected NoTask");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTask);
  }

  std::vector<Task> tied{{"t-1", "p-1", "a", {1000}, TaskStatus::Active}, {"t-2", "p-1", "b", {1000}, TaskStatus::Active}};
  CHECK(auto_assign(p, "a-1", tied, "as-4", {3000}).task_id == "t-2");
}
