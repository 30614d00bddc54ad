#include "agora/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "agora/error.hpp"

namespace agora::sensing {

std::size_t arity(SensorKind kind) noexcept {
  switch (kind) {
    case SensorKind::Light: return 1;
    case SensorKind::Gyroscope: return 3;
    case SensorKind::Proximity: return 1;
    case SensorKind::Accelerometer: return 3;
    case SensorKind::Location: return 2;
    case SensorKind::Noise: return 1;
  }
  return 0;
}

bool arity_ok(SensorKind kind, std::size_t n) noexcept {
  if (kind == SensorKind::Location) return n == 2 || n == 3;
  return n == arity(kind);
}

std::string_view to_string(DropReason r) noexcept {
  switch (r) {
    case DropReason::OutsideZone: return "OutsideZone";
    case DropReason::Expired: return "Expired";
    case DropReason::TooFrequent: return "TooFrequent";
    case DropReason::WrongArity: return "WrongArity";
  }
  return "";
}

SamplingPlan::SamplingPlan(QuestionId question_id, SensorKind kind, Frequency frequency, double duration_min,
                           geo::LocalizationZone zone)
    : question_id_(question_id), kind_(kind), frequency_(frequency), duration_min_(duration_min), zone_(zone) {
  if (!(duration_min >= 0.0) || !std::isfinite(duration_min)) {
    throw Error(ErrorCode::Range, "sampling duration must be a non-negative number of minutes");
  }
}

std::int64_t SamplingPlan::duration_ms() const noexcept {
  return static_cast<std::int64_t>(std::llround(duration_min_ * 60'000.0));
}

std::vector<SamplingPlan> plans_for_question(const asset::PoiQuestion& q, const geo::LocalizationZone& zone) {
  std::vector<SamplingPlan> plans;
  plans.reserve(q.sensors.size());
  for (const auto& s : q.sensors) plans.emplace_back(q.id, s.kind, q.frequency, q.time_min, zone);
  return plans;
}

std::vector<SamplingPlan> plans_for_question(const asset::Asset& a, QuestionId qid) {
  const auto* q = a.find_question(qid);
  if (q == nullptr) throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(qid));
  return plans_for_question(*q, asset::zone_for(a, qid));
}

GateDecision gate_sample(const SamplingPlan& plan, const modality::TaskSession& session, const SensorSample& sample,
                         Timestamp entered_at, const StreamState& stream) {
  if (sample.kind != plan.kind() || !arity_ok(sample.kind, sample.values.size())) {
    return GateDecision::drop(DropReason::WrongArity);
  }
  if (!session.is_present(plan.question_id())) return GateDecision::drop(DropReason::OutsideZone);
  if (sample.location && !geo::zone_contains(plan.zone(), *sample.location)) {
    return GateDecision::drop(DropReason::OutsideZone);
  }
  if (sample.captured_at < entered_at) return GateDecision::drop(DropReason::OutsideZone);
  const std::int64_t since_entry = sample.captured_at.ms - entered_at.ms;
  if (since_entry > plan.duration_ms()) return GateDecision::drop(DropReason::Expired);

  const bool same_window = stream.window_start == entered_at;
  const std::int64_t period = plan.period_ms();
  if (same_window && stream.last_accepted) {
    // Twice the period in ms avoids the fractional half-period.
    if (2 * (sample.captured_at.ms - stream.last_accepted->ms) < period) {
      return GateDecision::drop(DropReason::TooFrequent);
    }
  }
  const std::int64_t accepted = same_window ? stream.accepted_in_window : 0;
  if (accepted >= since_entry / period + 1) return GateDecision::drop(DropReason::TooFrequent);
  return GateDecision::accept();
}

void record_accept(StreamState& stream, Timestamp entered_at, Timestamp captured_at) {
  if (stream.window_start != entered_at) {
    stream.window_start = entered_at;
    stream.accepted_in_window = 0;
  }
  ++stream.accepted_in_window;
  stream.last_accepted = captured_at;
}

bool passive_mode(const SamplingPlan& plan) noexcept {
  return geo::zone_extent_m(plan.zone()) >= asset::kPassiveSensingRadiusM;
}

GateDecision SampleGate::offer(const modality::TaskSession& session, const SensorSample& sample) {
  if (!arity_ok(sample.kind, sample.values.size())) return GateDecision::drop(DropReason::WrongArity);
  const auto& a = session.asset();
  for (auto qid : a.ordered_ids()) {
    const auto* q = a.find_question(qid);
    const bool has_kind = std::any_of(q->sensors.begin(), q->sensors.end(),
                                      [&](const asset::SensorSpec& s) { return s.kind == sample.kind; });
    if (!has_kind || !session.is_present(qid)) continue;
    const auto entered = session.entered_at(qid);
    if (!entered) continue;
    const SamplingPlan plan(qid, sample.kind, q->frequency, q->time_min, session.zone(qid));
    auto& stream = streams_[{qid, sample.kind}];
    const auto decision = gate_sample(plan, session, sample, *entered, stream);
    if (decision.accepted) record_accept(stream, *entered, sample.captured_at);
    return decision;
  }
  return GateDecision::drop(DropReason::OutsideZone);
}

}  // namespace agora::sensing
