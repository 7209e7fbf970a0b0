#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "axisedit/error.hpp"

namespace axisedit {

enum class Label : std::uint8_t { Male = 0, Female = 1 };

inline std::string_view to_string(Label l) { return l == Label::Male ? "Male" : "Female"; }

inline Label parse_label(std::string_view s) {
  if (s == "Male" || s == "male" || s == "M") return Label::Male;
  if (s == "Female" || s == "female" || s == "F") return Label::Female;
  throw InvalidArgument("unknown label '" + std::string(s) + "'");
}

/// +1 for Male, -1 for Female; male scores sit high on the axis.
inline double label_sign(Label l) { return l == Label::Male ? 1.0 : -1.0; }

}  // namespace axisedit
