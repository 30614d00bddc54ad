#pragma once

#include <set>
#include <span>
#include <string>

#include "agora/time.hpp"

namespace agora::asset {

struct Project {
  std::string id;
  std::string name;
  std::string owner;
  bool auto_assign = true;
  Timestamp created_at;
};

enum class TaskStatus { Draft, Active, Closed };

struct Task {
  std::string id;
  std::string project_id;
  std::string name;
  Timestamp created_at;
  TaskStatus status = TaskStatus::Active;
};

/// Binds one asset and one task to participants. An empty participant set
/// means open enrollment: everyone enrolled in the project may join.
struct Assignment {
  std::string id;
  std::string asset_id;
  std::string task_id;
  std::set<std::string> participant_ids;
  Timestamp created_at;

  bool open_enrollment() const noexcept { return participant_ids.empty(); }
  bool permits(const std::string& participant_id) const {
    return open_enrollment() || participant_ids.contains(participant_id);
  }
};

/// Pseudonymous; no real-world identity is ever stored.
struct Participant {
  std::string id;
  std::string pseudonym;
  std::set<std::string> projects;
};

/// Assignment of `asset_id` to the project's most recently created task,
/// open to all enrolled participants. Throws NoTask when the project has
/// none. Among equal creation times the later entry in `tasks` wins.
Assignment auto_assign(const Project& project, const std::string& asset_id, std::span<const Task> tasks,
                       std::string assignment_id, Timestamp now);

}  // namespace agora::asset
