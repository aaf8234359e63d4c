#pragma once

// Trained-model directories: manifest.json, normalizers.txt, network
// binaries and loss histories.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nbfrom/nbf.hpp"
#include "nbfrom/onet.hpp"

namespace nbfrom {

struct ArchiveInfo {
  std::string kind;  // "nbf" or "onet"
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t mesh_points = 0;
  std::string mesh_hash;
  std::vector<std::size_t> train_ids;
  std::size_t n_bf = 0;    // nbf only
  std::size_t epochs = 0;  // basis epochs for nbf, training epochs for onet
};

void save_nbf_archive(const std::filesystem::path& dir, const NbfModel& model, ArchiveInfo info,
                      const NbfTrainingLog* log = nullptr);
NbfModel load_nbf_archive(const std::filesystem::path& dir, ArchiveInfo* info = nullptr);

void save_onet_archive(const std::filesystem::path& dir, const OnetModel& model, ArchiveInfo info,
                       const OnetTrainingLog* log = nullptr);
OnetModel load_onet_archive(const std::filesystem::path& dir, ArchiveInfo* info = nullptr);

ArchiveInfo read_archive_info(const std::filesystem::path& dir);

}  // namespace nbfrom
