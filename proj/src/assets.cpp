#include "brainstorm/assets.hpp"

#include <stdexcept>

namespace brainstorm::assets {

std::string_view get(std::string_view name) {
  const auto& t = table();
  auto it = t.find(name);
  if (it == t.end()) throw std::out_of_range("no such asset: " + std::string(name));
  return it->second;
}

std::string text(std::string_view name) {
  std::string s(get(name));
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace brainstorm::assets
