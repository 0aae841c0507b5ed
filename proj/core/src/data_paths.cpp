#include "hfa/data_paths.hpp"

#include "hfa/error.hpp"

#include <cstdlib>

namespace hfa {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("HFA_DATA_DIR"); env && *env) return env;
    for (const char* candidate : {HFA_SOURCE_DATA_DIR, HFA_INSTALL_DATA_DIR}) {
        std::error_code ec;
        if (std::filesystem::is_directory(candidate, ec)) return candidate;
    }
    throw Error(ErrorCode::Io, "bundled data directory not found; set HFA_DATA_DIR");
}

std::filesystem::path data_file(std::string_view name) { return data_dir() / std::filesystem::path(name); }

}  // namespace hfa
