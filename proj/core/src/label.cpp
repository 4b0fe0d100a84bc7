#include "chfb/label.hpp"

#include <string>

#include "chfb/error.hpp"

namespace chfb {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::NonFractured: return "non-fractured";
    case Label::Fractured: return "fractured";
    case Label::FleshAuto: return "flesh-auto";
  }
  return "non-fractured";
}

Label label_from_string(std::string_view s) {
  if (s == "non-fractured") return Label::NonFractured;
  if (s == "fractured") return Label::Fractured;
  if (s == "flesh-auto") return Label::FleshAuto;
  throw Error(ErrorCode::Parse, "unknown label: " + std::string(s));
}

}  // namespace chfb
