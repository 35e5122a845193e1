#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "lnpr/material.hpp"

namespace lnpr::testing {

inline std::shared_ptr<const MaterialModel> lithium_niobate() {
  static const auto model =
      std::make_shared<const MaterialModel>(MaterialModel::lithium_niobate_default());
  return model;
}

inline PhotorefractionParams params_30c() { return {1.1e-3, 100.0, 0.2, 5.0, 1.0e4, 10.0, 30.0}; }
inline PhotorefractionParams params_60c() { return {4.0e-4, 100.0, 0.2, 5.0, 1.0e4, 10.0, 60.0}; }
inline PhotorefractionParams params_90c() { return {1.0e-6, 100.0, 0.2, 5.0, 1.0e4, 10.0, 90.0}; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lnpr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lnpr::testing
