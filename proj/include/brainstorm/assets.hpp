#pragma once

#include <map>
#include <string>
#include <string_view>

namespace brainstorm::assets {

// Text assets compiled in from assets/ (prompts, templates, migrations).
// Keys are paths relative to assets/, e.g. "prompts/doctor.txt".
const std::map<std::string_view, std::string_view>& table();

// Throws std::out_of_range for an unknown name.
std::string_view get(std::string_view name);

// Asset text with the single trailing newline that editors add removed.
std::string text(std::string_view name);

}  // namespace brainstorm::assets
