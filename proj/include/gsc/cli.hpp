#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gsc {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIngestion = 3;

// Entry point of the `gsc` tool: train, embed, eval, ot-dist, gen-synth.
// Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gsc
