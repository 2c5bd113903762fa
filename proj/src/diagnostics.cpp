#include "tdforge/diagnostics.hpp"

#include <json.hpp>

namespace tdforge {

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  return std::string(file) + ":" + std::to_string(d.span.begin.line) + ":" +
         std::to_string(d.span.begin.column) + ": " + d.code + " " + d.message;
}

std::string diagnostics_to_json(const std::vector<Diagnostic>& diags, std::string_view file) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& d : diags) {
    out.push_back({
        {"severity", "error"},
        {"code", d.code},
        {"message", d.message},
        {"file", file},
        {"line", d.span.begin.line},
        {"column", d.span.begin.column},
        {"end_line", d.span.end.line},
        {"end_column", d.span.end.column},
        {"start_offset", d.span.begin.offset},
        {"end_offset", d.span.end.offset},
    });
  }
  return out.dump(2);
}

}  // namespace tdforge
