#include "ranl/types.hpp"

namespace ranl {

std::string_view to_string(QType q) {
  switch (q) {
    case QType::what:
      return "what";
    case QType::who:
      return "who";
    case QType::other:
      return "other";
  }
  return "?";
}

std::optional<QType> parse_qtype(std::string_view s) {
  if (s == "what") return QType::what;
  if (s == "who") return QType::who;
  if (s == "other") return QType::other;
  return std::nullopt;
}

std::string_view to_string(Task t) { return t == Task::mc ? "mc" : "oe"; }

std::optional<Task> parse_task(std::string_view s) {
  if (s == "mc") return Task::mc;
  if (s == "oe") return Task::oe;
  return std::nullopt;
}

}  // namespace ranl
