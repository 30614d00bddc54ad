#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "agora/asset.hpp"
#include "agora/geo.hpp"
#include "agora/presence.hpp"
#include "agora/project.hpp"
#include "agora/time.hpp"

namespace agora::modality {

using asset::QuestionId;

enum class PoiStatus { Locked, Unlocked, Inside, Answered };
std::string_view to_string(PoiStatus s) noexcept;

/// Selected option ids (radio, likert, checkbox) or free text (textbox).
using AnswerPayload = std::variant<std::vector<std::int64_t>, std::string>;

struct AnswerRecord {
  QuestionId question_id = 0;
  AnswerPayload payload;
  Timestamp answered_at;
  geo::GeoPoint location;
  std::optional<std::string> proof_id;
  std::int64_t credits = 0;
};

struct ZoneEvent {
  enum class Kind { Entered, Left };
  Kind kind = Kind::Entered;
  QuestionId question_id = 0;
  Timestamp at;

  bool operator==(const ZoneEvent&) const = default;
};

struct AnswerOutcome {
  QuestionId question_id = 0;
  std::int64_t credits_awarded = 0;
  std::vector<QuestionId> unlocked;
  bool completed = false;
  /// Scale position forwarded to localized aggregation (radio and likert).
  std::optional<double> value;
};

/// Navigation state of one participant working through one assignment.
/// Not internally synchronized: callers serialize mutations per session.
class TaskSession {
 public:
  /// Throws NotEnrolled when the participant is not enrolled in the project
  /// or not permitted by the assignment, AssignmentClosed when the task is
  /// not active.
  static TaskSession start(std::string session_id, const asset::Assignment& assignment,
                           const asset::Participant& participant, std::shared_ptr<const asset::Asset> snapshot,
                           const std::string& project_id, asset::TaskStatus task_status, Timestamp now);

  /// Throws SessionComplete once the session is complete and no answered
  /// zone is still occupied; until then departures keep being reported.
  std::vector<ZoneEvent> on_location_update(const geo::GeoPoint& p, Timestamp t);

  /// Runs every acceptance check of submit_answer except the proof.
  void precheck_answer(QuestionId qid, const AnswerPayload& payload, const geo::GeoPoint& location) const;

  AnswerOutcome submit_answer(QuestionId qid, const AnswerPayload& payload, const geo::GeoPoint& location,
                              const std::optional<presence::Proof>& proof, Timestamp now);

  std::set<QuestionId> unlocked_pois() const;
  bool proof_required(QuestionId qid) const;

  /// Revocation by a moderator.
  void close(Timestamp now);

  const std::string& id() const noexcept { return id_; }
  const std::string& participant_id() const noexcept { return participant_id_; }
  const std::string& assignment_id() const noexcept { return assignment_id_; }
  const asset::Asset& asset() const noexcept { return *asset_; }
  const std::shared_ptr<const asset::Asset>& asset_ptr() const noexcept { return asset_; }
  PoiStatus status(QuestionId qid) const;
  const std::map<QuestionId, PoiStatus>& statuses() const noexcept { return status_; }
  const std::vector<AnswerRecord>& answers() const noexcept { return answers_; }
  std::int64_t credits_earned() const noexcept { return credits_; }
  Timestamp started_at() const noexcept { return started_at_; }
  std::optional<Timestamp> completed_at() const noexcept { return completed_at_; }
  bool complete() const noexcept { return completed_at_.has_value(); }
  bool closed() const noexcept { return closed_; }
  /// Physically inside the question's zone, answered or not.
  bool is_present(QuestionId qid) const;
  std::optional<Timestamp> entered_at(QuestionId qid) const;
  const geo::LocalizationZone& zone(QuestionId qid) const;

 private:
  TaskSession() = default;

  const asset::PoiQuestion& question(QuestionId qid) const;
  void check_payload(const asset::PoiQuestion& q, const AnswerPayload& payload) const;
  void refresh_sequential();
  bool completion_predicate() const;

  std::string id_;
  std::string participant_id_;
  std::string assignment_id_;
  std::shared_ptr<const asset::Asset> asset_;
  std::map<QuestionId, PoiStatus> status_;
  std::map<QuestionId, geo::LocalizationZone> zones_;
  std::map<QuestionId, Timestamp> entered_at_;
  std::set<QuestionId> present_answered_;
  std::vector<AnswerRecord> answers_;
  std::int64_t credits_ = 0;
  bool dynamic_terminal_ = false;
  bool closed_ = false;
  Timestamp started_at_;
  std::optional<Timestamp> completed_at_;
};

}  // namespace agora::modality
