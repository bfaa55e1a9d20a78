// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <string_view>

namespace streamtts {

// Output file that is written under `<path>.partial` and renamed into place
// on commit(). An uncommitted file keeps its .partial name.
class PartialFile {
 public:
  explicit PartialFile(std::string path);
  PartialFile(const PartialFile&) = delete;
  PartialFile& operator=(const PartialFile&) = delete;

  std::ofstream& stream() { return out_; }
  const std::string& final_path() const { return path_; }
  std::string partial_path() const { return path_ + ".partial"; }

  void commit();

 private:
  std::string path_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

}  // namespace streamtts
