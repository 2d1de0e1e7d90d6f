#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "mcs/model.hpp"

namespace mcs {

inline constexpr std::string_view kTaskSetFormat = "mcs-taskset";
inline constexpr int kTaskSetVersion = 1;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON document, keys in fixed order, tasks ordered by id.
std::string serialize_taskset(const TaskSet& ts);
// Throws ParseError (with line or field path) or InvariantViolation.
TaskSet deserialize_taskset(std::string_view document);

TaskSet load_taskset(const std::string& path);
void save_taskset(const TaskSet& ts, const std::string& path);

}  // namespace mcs
