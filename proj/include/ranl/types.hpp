#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace ranl {

using TokenId = std::size_t;
using ClassId = std::size_t;

// Reserved vocabulary ids.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kReservedTokens = 4;

enum class QType { what, who, other };
inline constexpr QType kAllQTypes[] = {QType::what, QType::who, QType::other};

std::string_view to_string(QType q);
std::optional<QType> parse_qtype(std::string_view s);

enum class Task { mc, oe };

std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view s);

}  // namespace ranl
