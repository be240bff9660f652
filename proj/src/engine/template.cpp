#include "micoach/engine/template.hpp"

#include "micoach/error.hpp"

namespace micoach::engine {

bool is_personal_binding(std::string_view path) { return path.starts_with("user."); }

std::string render_template(const dsl::Template& tmpl, const Bindings& bindings, Mode mode) {
  std::string out;
  for (const auto& part : tmpl.parts) {
    if (part.kind == dsl::TemplatePart::Kind::literal) {
      out += part.text;
      continue;
    }
    const auto bound = bindings.find(part.path);
    const bool tailored = mode != Mode::video;
    if (tailored && bound != bindings.end()) {
      out += bound->second;
    } else if (part.fallback) {
      out += *part.fallback;
    } else if (!tailored && !is_personal_binding(part.path) && bound != bindings.end()) {
      out += bound->second;
    } else {
      throw Error("MISSING_BINDING", "no binding or fallback for placeholder {" + part.path + "}");
    }
  }
  return out;
}

}  // namespace micoach::engine
