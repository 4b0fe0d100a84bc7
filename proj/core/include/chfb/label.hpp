#pragma once

#include <string_view>

namespace chfb {

enum class Label { NonFractured, Fractured, FleshAuto };

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

inline bool is_fractured(Label l) { return l == Label::Fractured; }

}  // namespace chfb
