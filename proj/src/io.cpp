// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/io.hpp"

#include <filesystem>
#include <sstream>
#include <system_error>

#include "streamtts/core.hpp"

namespace streamtts {

PartialFile::PartialFile(std::string path) : path_(std::move(path)) {
  out_.open(partial_path(), std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::Io, "cannot open " + partial_path() + " for writing");
}

void PartialFile::commit() {
  if (committed_) return;
  out_.flush();
  if (!out_) throw Error(ErrorCode::Io, "write failed for " + partial_path());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(partial_path(), path_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + partial_path() + ": " + ec.message());
  committed_ = true;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  PartialFile file(path);
  file.stream().write(content.data(), static_cast<std::streamsize>(content.size()));
  file.commit();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace streamtts
