// Copyright 2026 The goalstack Authors
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

/// \file weights.hpp
/// \brief Flat name -> tensor container on disk.
///
/// Binary layout, all integers little-endian:
///
///     "GSWT"            4 bytes magic
///     u32 version       currently 1
///     u32 count         number of tensors
///     count x {
///       u32 name_len, name bytes (UTF-8, no terminator)
///       u32 ndim (always 2), u64 rows, u64 cols
///       rows*cols f32 values, row-major, IEEE-754 little-endian
///     }
///
/// A JSON manifest `<file>.json` lists {name, shape, offset} per tensor, where
/// offset is the byte position of the f32 payload.

#ifndef GOALSTACK__WEIGHTS_HPP_
#define GOALSTACK__WEIGHTS_HPP_

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "goalstack/common.hpp"

namespace goalstack
{

using TensorMap = std::map<std::string, Eigen::MatrixXd>;

namespace detail
{

template <class T>
void put_le(std::string & buf, T v)
{
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  buf.append(reinterpret_cast<const char *>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(const std::string & buf, std::size_t & pos)
{
  if (pos + sizeof(T) > buf.size()) {
    throw ConfigError("weights file truncated");
  }
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), buf.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  pos += sizeof(T);
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr char kWeightsMagic[4] = {'G', 'S', 'W', 'T'};
inline constexpr std::uint32_t kWeightsVersion = 1;

/// Serialize; also returns the manifest that `write_weights` stores next to it.
inline std::string encode_weights(const TensorMap & tensors, nlohmann::json * manifest = nullptr)
{
  std::string buf(kWeightsMagic, 4);
  detail::put_le<std::uint32_t>(buf, kWeightsVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(tensors.size()));
  nlohmann::json entries = nlohmann::json::array();
  for (const auto & [name, m] : tensors) {
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    detail::put_le<std::uint32_t>(buf, 2);
    detail::put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(m.rows()));
    detail::put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(m.cols()));
    entries.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", buf.size()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        detail::put_le<float>(buf, static_cast<float>(m(r, c)));
      }
    }
  }
  if (manifest != nullptr) {
    *manifest = {{"format", "goalstack-weights"}, {"version", kWeightsVersion}, {"tensors", entries}};
  }
  return buf;
}

inline TensorMap decode_weights(const std::string & buf)
{
  if (buf.size() < 12 || std::memcmp(buf.data(), kWeightsMagic, 4) != 0) {
    throw ConfigError("not a goalstack weights file (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(buf, pos);
  if (version != kWeightsVersion) {
    throw ConfigError("unsupported weights version " + std::to_string(version));
  }
  const auto count = detail::get_le<std::uint32_t>(buf, pos);
  TensorMap out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = detail::get_le<std::uint32_t>(buf, pos);
    if (pos + len > buf.size()) {
      throw ConfigError("weights file truncated in tensor name");
    }
    std::string name = buf.substr(pos, len);
    pos += len;
    const auto ndim = detail::get_le<std::uint32_t>(buf, pos);
    if (ndim != 2) {
      throw ConfigError("tensor '" + name + "' has unsupported rank " + std::to_string(ndim));
    }
    const auto rows = detail::get_le<std::uint64_t>(buf, pos);
    const auto cols = detail::get_le<std::uint64_t>(buf, pos);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = static_cast<double>(detail::get_le<float>(buf, pos));
      }
    }
    if (!out.emplace(std::move(name), std::move(m)).second) {
      throw ConfigError("duplicate tensor name in weights file");
    }
  }
  return out;
}

inline void write_weights(const std::string & path, const TensorMap & tensors)
{
  nlohmann::json manifest;
  const std::string buf = encode_weights(tensors, &manifest);
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw ConfigError("cannot write weights file " + path);
  }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  std::ofstream(path + ".json") << manifest.dump(2) << "\n";
}

inline TensorMap read_weights(const std::string & path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw ConfigError("cannot open weights file " + path);
  }
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_weights(buf);
}

/// Gather every tensor of a parameter tree that exposes `visit(prefix, f)`.
template <class P>
TensorMap collect_tensors(const P & params, const std::string & prefix)
{
  TensorMap out;
  params.visit(prefix, [&](const std::string & name, const Eigen::MatrixXd & m) { out[name] = m; });
  return out;
}

/// Load tensors into an already-shaped parameter tree. Shapes come from the
/// module config; any missing tensor or shape disagreement is a config error.
template <class P>
void assign_tensors(P & params, const TensorMap & tensors, const std::string & prefix)
{
  params.visit(prefix, [&](const std::string & name, Eigen::MatrixXd & m) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw ConfigError("weights file lacks tensor '" + name + "'");
    }
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw ConfigError(
        "tensor '" + name + "' has shape " + std::to_string(it->second.rows()) + "x" +
        std::to_string(it->second.cols()) + ", config expects " + std::to_string(m.rows()) + "x" +
        std::to_string(m.cols()));
    }
    m = it->second;
  });
}

}  // namespace goalstack

#endif  // GOALSTACK__WEIGHTS_HPP_
