#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "stylekit/core_data.hpp"
#include "stylekit/features.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("stylekit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  fs::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// `per_feature` synthetic pairs for each of the first `n_features` registry
/// features. Pair ids are "<feature>-<k>" with k zero-padded.
inline std::vector<stylekit::ParallelPair> make_pairs(std::size_t n_features, std::size_t per_feature,
                                                      stylekit::Split split = stylekit::Split::train) {
  const auto ids = stylekit::default_registry().ids();
  std::vector<stylekit::ParallelPair> out;
  for (std::size_t f = 0; f < n_features; ++f)
    for (std::size_t k = 0; k < per_feature; ++k) {
      char num[32];
      std::snprintf(num, sizeof num, "%04zu", k);
      stylekit::ParallelPair p;
      p.pair_id = ids[f] + "-" + num;
      p.feature_id = ids[f];
      p.positive_text = "positive sentence " + std::to_string(k) + " for " + ids[f];
      p.negative_text = "negative sentence " + std::to_string(k) + " for " + ids[f];
      p.split = split;
      out.push_back(std::move(p));
    }
  return out;
}

inline std::string fixture(const std::string& name) { return std::string(STYLEKIT_FIXTURE_DIR) + "/" + name; }

}  // namespace testutil
