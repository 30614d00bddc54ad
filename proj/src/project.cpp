#include "agora/project.hpp"

#include "agora/error.hpp"

namespace agora::asset {

Assignment auto_assign(const Project& project, const std::string& asset_id, std::span<const Task> tasks,
                       std::string assignment_id, Timestamp now) {
  if (!project.auto_assign) {
    throw Error(ErrorCode::BadRequest, "project " + project.id + " has auto-assignment disabled");
  }
  const Task* newest = nullptr;
  for (const auto& t : tasks) {
    if (t.project_id != project.id) continue;
    if (newest == nullptr || t.created_at >= newest->created_at) newest = &t;
  }
  if (newest == nullptr) throw Error(ErrorCode::NoTask, "project " + project.id + " has no task");
  return Assignment{std::move(assignment_id), asset_id, newest->id, {}, now};
}

}  // namespace agora::asset
