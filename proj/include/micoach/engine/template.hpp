#pragma once

#include <string>

#include "micoach/dsl/ast.hpp"
#include "micoach/engine/session.hpp"

namespace micoach::engine {

/// Paths under `user.` identify the trainee and are never rendered in video mode.
bool is_personal_binding(std::string_view path);

/// Renders a template. Tailored modes (didactic, roleplay) prefer the binding
/// and fall back to the `|fallback` text; video mode always uses the fallback
/// and only reads non-personal bindings. Throws Error MISSING_BINDING when a
/// placeholder cannot be resolved.
std::string render_template(const dsl::Template& tmpl, const Bindings& bindings, Mode mode);

}  // namespace micoach::engine
