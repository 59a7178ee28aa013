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

#include "growtrim/arch_json.h"

#include <fstream>
#include <sstream>

#include "growtrim/errors.h"

namespace growtrim {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

int rnumber_to_slot(int r) {
  if (r < 1 || (r - 1) % 3 != 0) {
    throw FormatError("r" + std::to_string(r) +
                      " is not a block input or cell output");
  }
  return (r - 1) / 3;
}

json arch_to_json(const NetworkArch& arch) {
  json blocks = json::array();
  for (const Block& block : arch.blocks) {
    json cells = json::array();
    for (const Cell& cell : block.cells) {
      cells.push_back(
          {{"i1", slot_to_rnumber(cell.input1)},
           {"i2", slot_to_rnumber(cell.input2)},
           {"op1", std::string(op_name(cell.op1))},
           {"op2", std::string(op_name(cell.op2))},
           {"combine",
            {{"mode",
              cell.combine.mode == CombineMode::kSum ? "sum" : "concat"},
             {"included", cell.combine.included_in_block_output}}}});
    }
    blocks.push_back({{"stride", block.stride}, {"cells", std::move(cells)}});
  }
  return {{"version", kArchFormatVersion},
          {"input_shape",
           {{"height", arch.input_shape.height},
            {"width", arch.input_shape.width},
            {"channels", arch.input_shape.channels}}},
          {"channel_width", arch.channel_width},
          {"stem", arch.stem_enabled},
          {"num_classes", arch.num_classes},
          {"blocks", std::move(blocks)}};
}

NetworkArch arch_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("architecture must be a JSON object");
  const int version = optional_field<int>(j, "version", kArchFormatVersion);
  if (version != kArchFormatVersion) {
    throw FormatError("unsupported architecture version " +
                      std::to_string(version));
  }
  NetworkArch arch;
  if (j.contains("input_shape")) {
    const json& s = j.at("input_shape");
    arch.input_shape = {require<std::int64_t>(s, "height"),
                        require<std::int64_t>(s, "width"),
                        require<std::int64_t>(s, "channels")};
  }
  arch.channel_width = optional_field<int>(j, "channel_width", 64);
  arch.stem_enabled = optional_field<bool>(j, "stem", true);
  arch.num_classes = optional_field<int>(j, "num_classes", 10);
  const json blocks = require<json>(j, "blocks");
  if (!blocks.is_array()) throw FormatError("'blocks' must be an array");
  for (const json& jb : blocks) {
    Block block;
    block.stride = optional_field<int>(jb, "stride", 1);
    const json cells = require<json>(jb, "cells");
    if (!cells.is_array()) throw FormatError("'cells' must be an array");
    for (const json& jc : cells) {
      Cell cell;
      cell.input1 = rnumber_to_slot(require<int>(jc, "i1"));
      cell.input2 = rnumber_to_slot(require<int>(jc, "i2"));
      cell.op1 = op_from_name(require<std::string>(jc, "op1"));
      cell.op2 = op_from_name(require<std::string>(jc, "op2"));
      const json combine = require<json>(jc, "combine");
      const auto mode = require<std::string>(combine, "mode");
      if (mode == "sum") {
        cell.combine.mode = CombineMode::kSum;
      } else if (mode == "concat") {
        cell.combine.mode = CombineMode::kConcat;
      } else {
        throw FormatError("unknown combine mode '" + mode + "'");
      }
      cell.combine.included_in_block_output = require<bool>(combine, "included");
      block.cells.push_back(cell);
    }
    arch.blocks.push_back(std::move(block));
  }
  return arch;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << data;
  if (!out) throw FormatError("write failed for " + path.string());
}

json load_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

NetworkArch load_arch(const std::filesystem::path& path) {
  return arch_from_json(load_json(path));
}

void save_arch(const NetworkArch& arch, const std::filesystem::path& path) {
  write_file(path, arch_to_json(arch).dump(2) + "\n");
}

}  // namespace growtrim
