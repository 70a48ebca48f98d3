// Copyright 2026 The sparsagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Upload bundles on disk, for replaying a round from files.
//
// One directory per client:
//   manifest.json  {"format": "sparsagg-upload/1", "client", "mode", "dim",
//                   "k", "servers": [{"server", "file", "sha256"}...]}
//   server{j}.bin  the bundle bytes as sent to server j

#ifndef SPARSAGG_BUNDLE_HPP_
#define SPARSAGG_BUNDLE_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsagg/errors.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/sparvecagg.hpp"

namespace sparsagg {

inline constexpr std::string_view kBundleFormat = "sparsagg-upload/1";

inline void write_bundle(const std::filesystem::path& dir, const ClientUpload& up) {
  std::filesystem::create_directories(dir);
  nlohmann::json m{{"format", std::string(kBundleFormat)},
                   {"client", up.client},
                   {"mode", std::string(to_string(up.mode))},
                   {"dim", up.dim},
                   {"k", up.k},
                   {"servers", nlohmann::json::array()}};
  for (int j = 0; j < 3; ++j) {
    const auto bytes = up.bundles[j].serialize();
    const std::string name = "server" + std::to_string(j) + ".bin";
    std::ofstream f(dir / name, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write_bundle: cannot write " + (dir / name).string());
    m["servers"].push_back({{"server", j}, {"file", name}, {"sha256", to_hex(sha256(bytes))}});
  }
  std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";
}

inline ClientUpload read_bundle(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw InvalidUpload("read_bundle: missing manifest in " + dir.string());
  const nlohmann::json m = nlohmann::json::parse(mf);
  if (m.value("format", "") != kBundleFormat) throw InvalidUpload("read_bundle: unknown format");
  ClientUpload up;
  up.client = m.at("client").get<std::uint32_t>();
  up.mode = parse_mode(m.at("mode").get<std::string>());
  up.dim = m.at("dim").get<std::size_t>();
  up.k = m.at("k").get<std::size_t>();
  const auto& servers = m.at("servers");
  if (servers.size() != 3) throw InvalidUpload("read_bundle: need three server entries");
  for (const auto& s : servers) {
    const int j = s.at("server").get<int>();
    if (j < 0 || j > 2) throw InvalidUpload("read_bundle: bad server index");
    std::ifstream f(dir / s.at("file").get<std::string>(), std::ios::binary);
    if (!f) throw InvalidUpload("read_bundle: missing blob for server " + std::to_string(j));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (s.contains("sha256") && s["sha256"].get<std::string>() != to_hex(sha256(bytes)))
      throw InvalidUpload("read_bundle: digest mismatch for server " + std::to_string(j));
    up.bundles[j] = ServerBundle::parse(bytes);
    if (up.bundles[j].server != j) throw InvalidUpload("read_bundle: blob belongs to another server");
  }
  return up;
}

/// All client bundles below `root`, ordered by client id.
inline std::vector<ClientUpload> read_bundle_dir(const std::filesystem::path& root) {
  std::vector<ClientUpload> out;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory() && std::filesystem::exists(e.path() / "manifest.json")) out.push_back(read_bundle(e.path()));
  std::sort(out.begin(), out.end(), [](const ClientUpload& a, const ClientUpload& b) { return a.client < b.client; });
  return out;
}

}  // namespace sparsagg

#endif  // SPARSAGG_BUNDLE_HPP_
