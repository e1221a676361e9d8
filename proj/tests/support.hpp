#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "millstone/model.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline const fs::path kFixtures{MILLSTONE_FIXTURES};
inline const std::string kCli{MILLSTONE_CLI};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("millstone-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline millstone::Document make_doc(const std::string& corpus, const std::string& id, const std::string& title,
                                    const std::string& abstract = "") {
  millstone::Document d;
  d.corpus = millstone::CorpusId(corpus);
  d.id = id;
  d.parts.push_back({millstone::PartKey::Title, title});
  if (!abstract.empty()) d.parts.push_back({millstone::PartKey::Abstract, abstract});
  return d;
}

}  // namespace testing_support
