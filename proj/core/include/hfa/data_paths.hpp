#pragma once

#include <filesystem>
#include <string_view>

namespace hfa {

/// Directory holding the bundled taxonomy, lexicons, stopwords and synonyms.
/// Resolution order: $HFA_DATA_DIR, the source tree, the install prefix.
std::filesystem::path data_dir();

std::filesystem::path data_file(std::string_view name);

}  // namespace hfa
