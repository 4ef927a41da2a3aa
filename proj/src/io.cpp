// Copyright 2026 The ceis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ceis/io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "ceis/error.hpp"

namespace ceis {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(ErrorKind::kConfiguration, "cannot open " + path.string() + " for writing");
  }
  file.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!file) {
    throw Error(ErrorKind::kConfiguration, "failed writing " + path.string());
  }
}

}  // namespace ceis
