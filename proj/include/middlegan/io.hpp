#pragma once

#include <filesystem>
#include <string_view>

namespace mgan::runner {

/// Writes `contents` to `path` + ".tmp", flushes, then renames over `path`,
/// so readers never observe a half-written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mgan::runner
