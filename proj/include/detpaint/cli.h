/*
Copyright 2026 The detpaint Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

// Command-line front end: genmasks, train, infer, evaluate, visualize.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid flags or
// configuration, 3 unmet mask quota.

#ifndef DETPAINT_CLI_H_
#define DETPAINT_CLI_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "detpaint/training.h"

namespace detpaint::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitQuota = 3;

// Parses argv and runs one subcommand. Never throws.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

// Written to <out>/manifest.json before the first training step.
struct RunManifest {
  nlohmann::json config;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string start_time;  // UTC, ISO 8601
  std::filesystem::path out_dir;
};

nlohmann::json ManifestToJson(const RunManifest& manifest);

// Seed for mask `index` of `bucket` in a genmasks run.
std::uint64_t MaskSeed(std::uint64_t seed, int bucket, int index);

}  // namespace detpaint::cli

#endif  // DETPAINT_CLI_H_
