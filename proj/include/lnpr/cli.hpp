#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lnpr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

struct RunFlags {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  bool quiet = false;
};

/// Names accepted by run_subcommand.
std::span<const std::string_view> subcommand_names();

/// Runs one pipeline, writes its CSV/JSON products and run_manifest.json
/// into the output directory and returns the process exit status.
int run_subcommand(std::string_view name, const RunFlags& flags);

std::string version_string();

}  // namespace lnpr
