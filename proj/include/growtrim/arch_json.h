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

// Architecture file format (UTF-8 JSON):
//
//   {"version": 1,
//    "input_shape": {"height": 32, "width": 32, "channels": 3},
//    "channel_width": 64, "stem": true, "num_classes": 10,
//    "blocks": [{"stride": 1,
//                "cells": [{"i1": 1, "i2": 1, "op1": "conv3x3",
//                           "op2": "conv3x3",
//                           "combine": {"mode": "sum", "included": true}}]}]}
//
// i1/i2 are r-numbers: r1 is the block input and r(3c+1) the output of cell
// c, so the only legal values are 1, 4, 7, ...

#ifndef GROWTRIM_ARCH_JSON_H_
#define GROWTRIM_ARCH_JSON_H_

#include <filesystem>
#include <string>

#include "growtrim/arch.h"
#include "json.hpp"

namespace growtrim {

inline constexpr int kArchFormatVersion = 1;

inline int slot_to_rnumber(int slot) { return 3 * slot + 1; }
int rnumber_to_slot(int r);  // throws FormatError for layer-output r-numbers

nlohmann::json arch_to_json(const NetworkArch& arch);
NetworkArch arch_from_json(const nlohmann::json& j);  // throws FormatError

NetworkArch load_arch(const std::filesystem::path& path);
void save_arch(const NetworkArch& arch, const std::filesystem::path& path);

// Reads a whole file; throws FormatError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace growtrim

#endif  // GROWTRIM_ARCH_JSON_H_
