#pragma once

#include <string>

namespace mlwave {

/// Shortest text that parses back to the same double: 17 significant digits.
std::string format_double(double v);

/// Writes `content` to `path` via a sibling temporary file and rename.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace mlwave
