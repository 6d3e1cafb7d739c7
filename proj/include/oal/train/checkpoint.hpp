#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oal/core/autodiff.hpp"
#include "oal/data/artifact.hpp"
#include "oal/data/teacher.hpp"
#include "oal/train/student.hpp"

namespace oal {

// JSONL, one {"name":..., "rows":r, "cols":c, "data":[row-major]} per parameter,
// after an optional meta line. Doubles are written in shortest round-trip form.
void save_parameters(const std::string& path, std::span<const Parameter* const> params,
                     const std::optional<ArtifactMeta>& meta = std::nullopt);
std::vector<Parameter> load_parameters(const std::string& path, std::optional<ArtifactMeta>* meta = nullptr);

void save_student(const std::string& path, const StudentModel& model,
                  const std::optional<ArtifactMeta>& meta = std::nullopt);
StudentModel load_student(const std::string& path, std::optional<ArtifactMeta>* meta = nullptr);

void save_teacher(const std::string& path, const TeacherSnapshot& teacher,
                  const std::optional<ArtifactMeta>& meta = std::nullopt);
TeacherSnapshot load_teacher(const std::string& path, std::optional<ArtifactMeta>* meta = nullptr);

}  // namespace oal
