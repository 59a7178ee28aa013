/* Copyright 2026 The growtrim Authors. All Rights Reserved.

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

// Command-line front end. Every subcommand is a thin wrapper over the
// library; results are JSON unless --format text is given.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#ifndef GROWTRIM_CLI_H_
#define GROWTRIM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace growtrim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace growtrim

#endif  // GROWTRIM_CLI_H_
