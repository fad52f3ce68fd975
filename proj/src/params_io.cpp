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

#include "okgit/params_io.hpp"

#include <bit>
#include <fstream>

#include "okgit/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "record streams are little-endian; big-endian hosts unsupported");

namespace okgit {

namespace {

template <typename T>
void write_pod(std::ofstream &out, T value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream &in, const std::filesystem::path &path) {
  T value;
  in.read(reinterpret_cast<char *>(&value), sizeof(T));
  if (!in) throw IoError("truncated tensor stream: " + path.string());
  return value;
}

}  // namespace

std::size_t NamedTensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

void write_params_file(const std::filesystem::path &path,
                       const std::vector<NamedTensor> &tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const NamedTensor &t : tensors) {
    if (t.data.size() != t.element_count()) {
      throw Error("tensor '" + t.name + "' data size does not match dims");
    }
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) write_pod<std::uint32_t>(out, d);
    out.write(reinterpret_cast<const char *>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<NamedTensor> read_params_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  std::vector<NamedTensor> tensors;
  while (true) {
    std::uint32_t name_len;
    in.read(reinterpret_cast<char *>(&name_len), sizeof(name_len));
    if (in.eof()) break;
    if (!in) throw IoError("truncated tensor stream: " + path.string());
    NamedTensor t;
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    std::uint32_t rank = read_pod<std::uint32_t>(in, path);
    t.dims.resize(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.dims[i] = read_pod<std::uint32_t>(in, path);
    }
    t.data.resize(t.element_count());
    in.read(reinterpret_cast<char *>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw IoError("truncated tensor stream: " + path.string());
    tensors.push_back(std::move(t));
  }
  return tensors;
}

std::map<std::string, NamedTensor> index_tensors(
    std::vector<NamedTensor> tensors) {
  std::map<std::string, NamedTensor> index;
  for (NamedTensor &t : tensors) {
    std::string name = t.name;
    if (!index.emplace(name, std::move(t)).second) {
      throw Error("duplicate tensor name: " + name);
    }
  }
  return index;
}

}  // namespace okgit
