#pragma once

#include <functional>
#include <string_view>

namespace entroute {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a warning through the installed sink (stderr by default). Thread-safe.
void warn(std::string_view message);

/// Replaces the warning sink and returns the previous one. Passing an empty
/// function restores the stderr default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace entroute
