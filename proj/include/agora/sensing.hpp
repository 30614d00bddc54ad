#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agora/asset.hpp"
#include "agora/geo.hpp"
#include "agora/session.hpp"
#include "agora/time.hpp"

namespace agora::sensing {

using asset::Frequency;
using asset::QuestionId;
using asset::SensorKind;

/// Sampling period for a frequency class: Low 2000 ms, Medium 250 ms,
/// High 200 ms. These are the only periods a plan can carry.
constexpr std::int64_t period_ms(Frequency f) noexcept {
  switch (f) {
    case Frequency::Low: return 2000;
    case Frequency::Medium: return 250;
    case Frequency::High: return 200;
  }
  return 2000;
}

/// Number of values a sample of `kind` carries. Location accepts an
/// optional third value (accuracy in meters).
std::size_t arity(SensorKind kind) noexcept;
bool arity_ok(SensorKind kind, std::size_t n) noexcept;

class SamplingPlan {
 public:
  SamplingPlan(QuestionId question_id, SensorKind kind, Frequency frequency, double duration_min,
               geo::LocalizationZone zone);

  QuestionId question_id() const noexcept { return question_id_; }
  SensorKind kind() const noexcept { return kind_; }
  Frequency frequency() const noexcept { return frequency_; }
  std::int64_t period_ms() const noexcept { return sensing::period_ms(frequency_); }
  double duration_min() const noexcept { return duration_min_; }
  std::int64_t duration_ms() const noexcept;
  const geo::LocalizationZone& zone() const noexcept { return zone_; }

 private:
  QuestionId question_id_;
  SensorKind kind_;
  Frequency frequency_;
  double duration_min_;
  geo::LocalizationZone zone_;
};

struct SensorSample {
  std::string session_id;
  SensorKind kind = SensorKind::Location;
  Timestamp captured_at;
  std::vector<double> values;
  std::optional<geo::GeoPoint> location;
};

enum class DropReason { OutsideZone, Expired, TooFrequent, WrongArity };
std::string_view to_string(DropReason r) noexcept;

struct GateDecision {
  bool accepted = false;
  DropReason reason = DropReason::OutsideZone;

  static GateDecision accept() { return {true, DropReason::OutsideZone}; }
  static GateDecision drop(DropReason r) { return {false, r}; }
  bool operator==(const GateDecision&) const = default;
};

std::vector<SamplingPlan> plans_for_question(const asset::PoiQuestion& q, const geo::LocalizationZone& zone);
std::vector<SamplingPlan> plans_for_question(const asset::Asset& a, QuestionId qid);

/// Accepted samples of one (session, kind) stream inside the current
/// window, which opens at zone entry.
struct StreamState {
  Timestamp window_start;
  std::int64_t accepted_in_window = 0;
  std::optional<Timestamp> last_accepted;
};

/// Decides one sample. Accepts iff the participant is present in the plan's
/// zone (and the sample's own location, when given, is inside it), the
/// sample lies in [entered_at, entered_at + duration], it is at least half
/// a period after the previous accepted one, and the stream stays within
/// the nominal schedule of one sample per period since entry.
GateDecision gate_sample(const SamplingPlan& plan, const modality::TaskSession& session, const SensorSample& sample,
                         Timestamp entered_at, const StreamState& stream);

/// Advances `stream` for an accepted sample.
void record_accept(StreamState& stream, Timestamp entered_at, Timestamp captured_at);

/// Zone wide enough for unrestricted, continuous collection.
bool passive_mode(const SamplingPlan& plan) noexcept;

/// Per-session gate bookkeeping for all plans of an asset.
class SampleGate {
 public:
  GateDecision offer(const modality::TaskSession& session, const SensorSample& sample);

 private:
  std::map<std::pair<QuestionId, SensorKind>, StreamState> streams_;
};

}  // namespace agora::sensing
