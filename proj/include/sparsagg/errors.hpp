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

#ifndef SPARSAGG_ERRORS_HPP_
#define SPARSAGG_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsagg {

enum class AbortReason { kNone, kMac, kHash, kNoiseKs, kOpenInconsistency };

inline std::string_view to_string(AbortReason r) {
  switch (r) {
    case AbortReason::kNone: return "none";
    case AbortReason::kMac: return "mac";
    case AbortReason::kHash: return "hash";
    case AbortReason::kNoiseKs: return "noise_ks";
    case AbortReason::kOpenInconsistency: return "open_inconsistency";
  }
  return "unknown";
}

/// Base of every detected-deviation abort. Servers stop the round.
class ProtocolAbort : public std::runtime_error {
 public:
  ProtocolAbort(AbortReason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
  AbortReason reason() const { return reason_; }

 private:
  AbortReason reason_;
};

/// Redundant copies of an opened share disagree.
class ConsistencyAbort : public ProtocolAbort {
 public:
  explicit ConsistencyAbort(const std::string& what) : ProtocolAbort(AbortReason::kOpenInconsistency, what) {}
};

class MacAbort : public ProtocolAbort {
 public:
  explicit MacAbort(const std::string& what) : ProtocolAbort(AbortReason::kMac, what) {}
};

class HashAbort : public ProtocolAbort {
 public:
  explicit HashAbort(const std::string& what) : ProtocolAbort(AbortReason::kHash, what) {}
};

class NoiseKsAbort : public ProtocolAbort {
 public:
  explicit NoiseKsAbort(const std::string& what) : ProtocolAbort(AbortReason::kNoiseKs, what) {}
};

/// A client upload failed validation and is dropped.
class InvalidUpload : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sparsagg

#endif  // SPARSAGG_ERRORS_HPP_
