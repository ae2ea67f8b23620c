#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcdal {

enum class DatasetSplit { kTrain, kVal, kTest };

constexpr std::string_view to_string(DatasetSplit s) {
  switch (s) {
    case DatasetSplit::kTrain: return "train";
    case DatasetSplit::kVal: return "val";
    case DatasetSplit::kTest: return "test";
  }
  return "unknown";
}

struct ManifestEntry {
  std::string id;
  std::optional<std::string> image_path;
  std::optional<std::string> stack_path;
  std::optional<std::string> label_path;
  nlohmann::json meta = nlohmann::json::object();
  /// Fields this version does not know about, kept verbatim on save.
  nlohmann::json extra = nlohmann::json::object();
};

struct Manifest {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;
  nlohmann::json extra = nlohmann::json::object();

  std::vector<ManifestEntry>& split(DatasetSplit s) {
    return s == DatasetSplit::kTrain ? train : s == DatasetSplit::kVal ? val : test;
  }
  const std::vector<ManifestEntry>& split(DatasetSplit s) const {
    return s == DatasetSplit::kTrain ? train : s == DatasetSplit::kVal ? val : test;
  }

  const ManifestEntry* find(std::string_view id) const {
    for (const auto* entries : {&train, &val, &test}) {
      for (const auto& e : *entries) {
        if (e.id == id) return &e;
      }
    }
    return nullptr;
  }

  std::vector<std::string> ids(DatasetSplit s) const {
    std::vector<std::string> out;
    for (const auto& e : split(s)) out.push_back(e.id);
    return out;
  }
};

}  // namespace mcdal
