#include "agora/session.hpp"

#include <algorithm>

#include "agora/error.hpp"

namespace agora::modality {

using asset::Mode;
using asset::QuestionType;

std::string_view to_string(PoiStatus s) noexcept {
  switch (s) {
    case PoiStatus::Locked: return "Locked";
    case PoiStatus::Unlocked: return "Unlocked";
    case PoiStatus::Inside: return "Inside";
    case PoiStatus::Answered: return "Answered";
  }
  return "";
}

TaskSession TaskSession::start(std::string session_id, const asset::Assignment& assignment,
                               const asset::Participant& participant, std::shared_ptr<const asset::Asset> snapshot,
                               const std::string& project_id, asset::TaskStatus task_status, Timestamp now) {
  if (!participant.projects.contains(project_id) || !assignment.permits(participant.id)) {
    throw Error(ErrorCode::NotEnrolled, "participant " + participant.id + " is not enrolled in assignment " +
                                            assignment.id);
  }
  if (task_status != asset::TaskStatus::Active) {
    throw Error(ErrorCode::AssignmentClosed, "task " + assignment.task_id + " is not active");
  }

  TaskSession s;
  s.id_ = std::move(session_id);
  s.participant_id_ = participant.id;
  s.assignment_id_ = assignment.id;
  s.asset_ = std::move(snapshot);
  s.started_at_ = now;
  const auto ids = s.asset_->ordered_ids();
  for (auto qid : ids) {
    s.status_[qid] = PoiStatus::Locked;
    s.zones_.emplace(qid, asset::zone_for(*s.asset_, qid));
  }
  switch (s.asset_->mode) {
    case Mode::Simple:
      for (auto& [qid, st] : s.status_) st = PoiStatus::Unlocked;
      break;
    case Mode::Sequential:
      s.refresh_sequential();
      break;
    case Mode::Dynamic:
      // An asset without question 1 fails validation; fall back to the
      // lowest id so the session is still navigable.
      s.status_[s.status_.contains(1) ? 1 : ids.front()] = PoiStatus::Unlocked;
      break;
  }
  return s;
}

const asset::PoiQuestion& TaskSession::question(QuestionId qid) const {
  const auto* q = asset_->find_question(qid);
  if (q == nullptr) throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(qid));
  return *q;
}

PoiStatus TaskSession::status(QuestionId qid) const {
  const auto it = status_.find(qid);
  if (it == status_.end()) throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(qid));
  return it->second;
}

const geo::LocalizationZone& TaskSession::zone(QuestionId qid) const {
  const auto it = zones_.find(qid);
  if (it == zones_.end()) throw Error(ErrorCode::UnknownQuestion, "unknown question " + std::to_string(qid));
  return it->second;
}

bool TaskSession::is_present(QuestionId qid) const {
  const auto it = status_.find(qid);
  if (it == status_.end()) return false;
  return it->second == PoiStatus::Inside || present_answered_.contains(qid);
}

std::optional<Timestamp> TaskSession::entered_at(QuestionId qid) const {
  if (!is_present(qid)) return std::nullopt;
  const auto it = entered_at_.find(qid);
  if (it == entered_at_.end()) return std::nullopt;
  return it->second;
}

std::vector<ZoneEvent> TaskSession::on_location_update(const geo::GeoPoint& p, Timestamp t) {
  if (closed_ || (complete() && present_answered_.empty())) {
    throw Error(ErrorCode::SessionComplete, "session " + id_ + " is complete");
  }
  std::vector<ZoneEvent> events;
  for (auto& [qid, st] : status_) {
    const bool inside = geo::zone_contains(zones_.at(qid), p);
    if (st == PoiStatus::Unlocked && inside && !complete()) {
      st = PoiStatus::Inside;
      entered_at_[qid] = t;
      events.push_back({ZoneEvent::Kind::Entered, qid, t});
    } else if (st == PoiStatus::Inside && !inside) {
      st = PoiStatus::Unlocked;
      events.push_back({ZoneEvent::Kind::Left, qid, t});
    } else if (st == PoiStatus::Answered && !inside && present_answered_.erase(qid) > 0) {
      events.push_back({ZoneEvent::Kind::Left, qid, t});
    }
  }
  return events;
}

void TaskSession::check_payload(const asset::PoiQuestion& q, const AnswerPayload& payload) const {
  auto mismatch = [&](const std::string& why) {
    throw Error(ErrorCode::PayloadMismatch, "question " + std::to_string(q.id) + ": " + why);
  };
  if (q.qtype == QuestionType::Textbox) {
    const auto* text = std::get_if<std::string>(&payload);
    if (text == nullptr) mismatch("textbox expects free text");
    if (text->find_first_not_of(" \t\r\n") == std::string::npos) mismatch("empty text");
    return;
  }
  const auto* selected = std::get_if<std::vector<std::int64_t>>(&payload);
  if (selected == nullptr) mismatch("expects option ids");
  if (q.qtype == QuestionType::Checkbox) {
    if (selected->empty()) mismatch("checkbox expects at least one option");
  } else if (selected->size() != 1) {
    mismatch(std::string(asset::to_string(q.qtype)) + " expects exactly one option");
  }
  std::set<std::int64_t> seen;
  for (auto id : *selected) {
    if (q.find_option(id) == nullptr) mismatch("unknown option " + std::to_string(id));
    if (!seen.insert(id).second) mismatch("option " + std::to_string(id) + " selected twice");
  }
}

bool TaskSession::proof_required(QuestionId qid) const {
  return presence::require_proof(question(qid), asset_->proof_policy);
}

void TaskSession::precheck_answer(QuestionId qid, const AnswerPayload& payload, const geo::GeoPoint& location) const {
  if (closed_ || complete()) throw Error(ErrorCode::SessionComplete, "session " + id_ + " is complete");
  const auto& q = question(qid);
  const PoiStatus st = status(qid);
  if (st == PoiStatus::Answered) {
    throw Error(ErrorCode::AlreadyAnswered, "question " + std::to_string(qid) + " already answered");
  }
  if (st != PoiStatus::Inside || !geo::zone_contains(zones_.at(qid), location)) {
    throw Error(ErrorCode::NotLocalized, "not localized at question " + std::to_string(qid));
  }
  check_payload(q, payload);
}

AnswerOutcome TaskSession::submit_answer(QuestionId qid, const AnswerPayload& payload, const geo::GeoPoint& location,
                                         const std::optional<presence::Proof>& proof, Timestamp now) {
  precheck_answer(qid, payload, location);
  const auto& q = question(qid);
  if (proof_required(qid)) {
    if (!proof) throw Error(ErrorCode::ProofRequired, "question " + std::to_string(qid) + " requires a proof");
    if (proof->verdict != presence::Verdict::Verified || proof->question_id != qid) {
      throw Error(ErrorCode::ProofInvalid, "proof " + proof->challenge_id + " does not verify question " +
                                               std::to_string(qid));
    }
  }

  AnswerOutcome out;
  out.question_id = qid;
  const asset::QuestionOption* branch = nullptr;
  if (const auto* selected = std::get_if<std::vector<std::int64_t>>(&payload)) {
    for (auto id : *selected) {
      const auto* opt = q.find_option(id);
      out.credits_awarded += asset::option_credit(*asset_, *opt);
      if (branch == nullptr || opt->id < branch->id) branch = opt;
    }
    if (q.qtype != QuestionType::Checkbox) out.value = static_cast<double>(branch->id);
  } else {
    out.credits_awarded = asset_->default_credit;
  }

  status_[qid] = PoiStatus::Answered;
  present_answered_.insert(qid);
  credits_ += out.credits_awarded;
  answers_.push_back(AnswerRecord{qid, payload, now, location,
                                  proof ? std::optional<std::string>(proof->challenge_id) : std::nullopt,
                                  out.credits_awarded});

  const auto before = unlocked_pois();
  switch (asset_->mode) {
    case Mode::Simple:
      break;
    case Mode::Sequential:
      refresh_sequential();
      break;
    case Mode::Dynamic: {
      const auto next = branch != nullptr ? branch->next_question : std::nullopt;
      const auto it = next ? status_.find(*next) : status_.end();
      if (it == status_.end() || it->second == PoiStatus::Answered) {
        dynamic_terminal_ = true;
      } else if (it->second == PoiStatus::Locked) {
        it->second = PoiStatus::Unlocked;
      }
      break;
    }
  }
  for (auto id : unlocked_pois()) {
    if (!before.contains(id)) out.unlocked.push_back(id);
  }
  if (completion_predicate()) {
    completed_at_ = now;
    // Nothing is left to enter once the session is complete.
    for (auto& [id, st] : status_) {
      if (st == PoiStatus::Inside) st = PoiStatus::Unlocked;
    }
  }
  out.completed = complete();
  return out;
}

void TaskSession::refresh_sequential() {
  // Unlock in id order up to and including the first unanswered mandatory
  // question; optional questions before it may be skipped.
  for (auto& [qid, st] : status_) {
    if (st == PoiStatus::Answered) continue;
    if (st == PoiStatus::Locked) st = PoiStatus::Unlocked;
    if (question(qid).mandatory) break;
  }
}

bool TaskSession::completion_predicate() const {
  if (asset_->mode == Mode::Dynamic) return dynamic_terminal_;
  bool any_mandatory = false;
  for (const auto& [qid, st] : status_) {
    if (!question(qid).mandatory) continue;
    any_mandatory = true;
    if (st != PoiStatus::Answered) return false;
  }
  if (any_mandatory) return true;
  return std::all_of(status_.begin(), status_.end(), [](const auto& kv) { return kv.second == PoiStatus::Answered; });
}

std::set<QuestionId> TaskSession::unlocked_pois() const {
  std::set<QuestionId> out;
  for (const auto& [qid, st] : status_) {
    if (st == PoiStatus::Unlocked || st == PoiStatus::Inside) out.insert(qid);
  }
  return out;
}

void TaskSession::close(Timestamp now) {
  closed_ = true;
  if (!completed_at_) completed_at_ = now;
}

}  // namespace agora::modality
