#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agora/geo.hpp"

namespace agora::asset {

using Json = nlohmann::ordered_json;
using QuestionId = std::int64_t;

/// Zones at least this wide collect sensor data without restriction.
inline constexpr double kPassiveSensingRadiusM = 10'000.0;

enum class Mode { Simple, Sequential, Dynamic };
enum class QuestionType { Radio, Checkbox, Likert, Textbox };
enum class SensorKind { Light, Gyroscope, Proximity, Accelerometer, Location, Noise };
enum class Frequency { Low, Medium, High };
enum class ZoneShape { Circle, Ellipse };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(QuestionType t) noexcept;
std::string_view to_string(SensorKind k) noexcept;
std::string_view to_string(Frequency f) noexcept;
std::optional<SensorKind> sensor_kind_from(std::string_view name) noexcept;

struct QuestionOption {
  std::int64_t id = 0;
  std::string name;
  std::optional<QuestionId> next_question;
  /// Absent means the asset default credit applies.
  std::optional<std::int64_t> credits;
  Json extras = Json::object();

  bool operator==(const QuestionOption&) const = default;
};

struct SensorSpec {
  std::int64_t id = 0;
  SensorKind kind = SensorKind::Location;
  Json extras = Json::object();

  bool operator==(const SensorSpec&) const = default;
};

struct PoiQuestion {
  QuestionId id = 0;
  std::string text;
  QuestionType qtype = QuestionType::Radio;
  geo::GeoPoint location;
  std::vector<SensorSpec> sensors;
  /// Minutes of sensor collection after entering the zone.
  double time_min = 0.0;
  Frequency frequency = Frequency::Medium;
  /// Preserved for round-trip only; the asset Mode decides ordering.
  bool sequence_flag = false;
  bool visibility = true;
  bool mandatory = false;
  std::vector<QuestionOption> options;
  /// Never interpreted; kept verbatim.
  Json combination = nullptr;
  double vicinity_m = 0.0;
  Json extras = Json::object();

  const QuestionOption* find_option(std::int64_t option_id) const noexcept;
  bool operator==(const PoiQuestion&) const = default;
};

/// Which questions require a witnessed-presence proof before an answer is
/// accepted.
struct ProofPolicy {
  enum class Kind { None, Mandatory, All, Listed };
  Kind kind = Kind::None;
  std::set<QuestionId> questions;

  bool operator==(const ProofPolicy&) const = default;
};

struct Asset {
  std::string id;
  std::string name;
  std::string url;
  Mode mode = Mode::Simple;
  std::int64_t default_credit = 0;
  std::optional<geo::GeoPoint> start;
  std::optional<geo::GeoPoint> destination;
  ZoneShape zone_shape = ZoneShape::Circle;
  ProofPolicy proof_policy;
  std::vector<PoiQuestion> questions;

  // Unknown keys at each nesting level of the interchange document.
  Json extras = Json::object();
  Json metadata_extras = Json::object();
  Json record_extras = Json::object();
  Json settings_extras = Json::object();

  const PoiQuestion* find_question(QuestionId qid) const noexcept;
  /// Question ids in ascending order; the Sequential visit order.
  std::vector<QuestionId> ordered_ids() const;
  bool operator==(const Asset&) const = default;
};

/// Credit for one selected option: its own credits, else the asset default.
std::int64_t option_credit(const Asset& a, const QuestionOption& opt) noexcept;

/// Localization zone of a question under the asset's zone shape. Ellipses
/// use semi-major = vicinity, semi-minor = vicinity / 2 and point their
/// minor axis at the next question in id order (or the destination after
/// the last one, or due north when neither exists).
geo::LocalizationZone zone_for(const Asset& a, QuestionId qid);

/// Accepts the interchange document, including the trailing commas and raw
/// control characters inside strings that dashboard exports contain.
Asset parse_asset(std::string_view document);
std::string serialize_asset(const Asset& a, int indent = 2);
Json to_json(const Asset& a);
Asset from_json(const Json& doc);

struct Finding {
  enum class Severity { Error, Notice };
  Severity severity = Severity::Error;
  std::string path;
  std::string message;

  bool operator==(const Finding&) const = default;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const noexcept;
  std::size_t error_count() const noexcept;
};

ValidationReport validate_asset(const Asset& a);

/// Removes trailing commas before `]`/`}` and escapes raw control characters
/// inside string literals so a strict JSON reader accepts the text.
std::string normalize_lenient_json(std::string_view text);

}  // namespace agora::asset
