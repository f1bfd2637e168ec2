#pragma once

#include <string>
#include <vector>

#include "simpletrack/tracker.hpp"

namespace simpletrack::config {

/// Parse a flat key=value document into a tracker configuration.
/// '#' starts a comment; blank lines are skipped. A `profile = <name>` line
/// applies the named profile first, with the remaining keys layered on top.
/// Per-class overrides use a `<key>.<class>` suffix, e.g.
/// `output_score.pedestrian = 0.5`. Throws ConfigError on unknown keys or
/// bad values.
tracker::TrackerConfig parse(const std::string& text);

/// Read and parse a config file. Throws IoError when unreadable.
tracker::TrackerConfig load(const std::string& path);

/// Built-in profiles: "wod", "nuscenes", "desk".
tracker::TrackerConfig profile(const std::string& name);

bool is_profile(const std::string& name);
std::vector<std::string> profile_names();

/// Canonical text form: every global key in fixed order, then per-class
/// overrides for fields that differ from the defaults. parse(serialize(c))
/// reproduces c.
std::string serialize(const tracker::TrackerConfig& config);

}  // namespace simpletrack::config
