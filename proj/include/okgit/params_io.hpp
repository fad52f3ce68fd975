// Copyright 2026 The OKGIT Authors.
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

#ifndef OKGIT_PARAMS_IO_H_
#define OKGIT_PARAMS_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace okgit {

// One named tensor in the little-endian record stream:
//   u32 name length, UTF-8 name bytes, u32 rank, u32 dims[rank], f32 data.
// Data is laid out row-major in dims order.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

void write_params_file(const std::filesystem::path &path,
                       const std::vector<NamedTensor> &tensors);
std::vector<NamedTensor> read_params_file(const std::filesystem::path &path);

// Name-keyed view; duplicate names are an error.
std::map<std::string, NamedTensor> index_tensors(std::vector<NamedTensor> tensors);

}  // namespace okgit

#endif  // OKGIT_PARAMS_IO_H_
