#include "swarmsense/error.h"

namespace swarmsense {

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::InvalidArgument: return "invalid-argument";
    case ErrorCategory::InvalidPose: return "invalid-pose";
    case ErrorCategory::Projection: return "projection";
    case ErrorCategory::Dimension: return "dimension";
    case ErrorCategory::TableMiss: return "table-miss";
    case ErrorCategory::Constraint: return "constraint";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Replay: return "replay";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::InvalidArgument: return 3;
    case ErrorCategory::InvalidPose: return 4;
    case ErrorCategory::Projection: return 5;
    case ErrorCategory::Dimension: return 6;
    case ErrorCategory::TableMiss: return 7;
    case ErrorCategory::Constraint: return 8;
    case ErrorCategory::Io: return 9;
    case ErrorCategory::Replay: return 10;
  }
  return 1;
}

}  // namespace swarmsense
