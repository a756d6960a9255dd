/* Copyright 2026 The Semod Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <iosfwd>

namespace semod::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // bad flags, config or input data
inline constexpr int kExitRuntime = 3;  // divergence and other runtime failures

// Environment variable naming the root for relative --out paths.
inline constexpr const char* kOutputRootEnv = "SEMOD_OUTPUT_ROOT";

// Entry point of the `semod` tool. Subcommands: generate, split, dedup, embed,
// train, infer, detect, eval. Messages go to `out`/`err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semod::cli
