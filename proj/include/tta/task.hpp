#pragma once

#include <stdexcept>
#include <string>

namespace tta {

enum class TaskKind { kClassification, kDetectionGrid, kSegmentation };

inline const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::kClassification: return "classification";
    case TaskKind::kDetectionGrid: return "detection";
    case TaskKind::kSegmentation: return "segmentation";
  }
  return "?";
}

inline TaskKind task_from_name(const std::string& name) {
  if (name == "classification") return TaskKind::kClassification;
  if (name == "detection") return TaskKind::kDetectionGrid;
  if (name == "segmentation") return TaskKind::kSegmentation;
  throw std::runtime_error("unknown task: " + name);
}

}  // namespace tta
