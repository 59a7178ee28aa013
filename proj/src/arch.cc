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

#include "growtrim/arch.h"

#include <cstdio>
#include <sstream>

#include "growtrim/errors.h"

namespace growtrim {

namespace {

constexpr std::array<std::string_view, kNumOpKinds> kOpNames = {
    "conv3x3",     "dw_conv3x3",  "dw_conv5x5",  "fac_conv1x7_7x1",
    "avg_pool3x3", "max_pool3x3", "dil_conv3x3", "identity"};

std::string one_hot(int index, int width) {
  std::string bits(static_cast<std::size_t>(width), '0');
  bits[static_cast<std::size_t>(width - 1 - index)] = '1';
  return bits;
}

// Returns the set bit positions of a binary string (MSB first).
std::vector<int> set_bits(std::string_view bits) {
  std::vector<int> out;
  const int width = static_cast<int>(bits.size());
  for (int i = 0; i < width; ++i) {
    const char c = bits[static_cast<std::size_t>(i)];
    if (c == '1') {
      out.push_back(width - 1 - i);
    } else if (c != '0') {
      throw MalformedVector("binary vector contains '" + std::string(1, c) +
                            "'");
    }
  }
  return out;
}

int decode_one_hot(std::string_view bits, const char* field) {
  if (bits.empty()) {
    throw MalformedVector(std::string(field) + " is empty");
  }
  const auto ones = set_bits(bits);
  if (ones.size() != 1) {
    throw MalformedVector(std::string(field) + " '" + std::string(bits) +
                          "' is not one-hot");
  }
  return ones.front();
}

TensorShape combine_shapes(const CombineSpec& combine, const TensorShape& a,
                           const TensorShape& b) {
  if (combine.mode == CombineMode::kSum) {
    if (a != b) {
      throw ShapeMismatch("sum of " + a.to_string() + " and " + b.to_string());
    }
    return a;
  }
  if (a.height != b.height || a.width != b.width) {
    throw ShapeMismatch("concat of " + a.to_string() + " and " +
                        b.to_string());
  }
  return {a.height, a.width, a.channels + b.channels};
}

void check_structure(const NetworkArch& arch,
                     std::vector<Violation>& violations) {
  auto add = [&](ViolationKind kind, int block, int cell, std::string msg) {
    violations.push_back({kind, block, cell, std::move(msg)});
  };
  if (arch.blocks.empty()) add(ViolationKind::kNoBlocks, -1, -1, "no blocks");
  if (arch.channel_width < 1) {
    add(ViolationKind::kInvalidChannelWidth, -1, -1,
        "channel_width must be >= 1");
  }
  if (arch.num_classes < 1) {
    add(ViolationKind::kInvalidNumClasses, -1, -1, "num_classes must be >= 1");
  }
  const auto& in = arch.input_shape;
  if (in.height < 1 || in.width < 1 || in.channels < 1) {
    add(ViolationKind::kInvalidShape, -1, -1,
        "input shape " + in.to_string() + " has a dimension < 1");
  }
  for (int b = 0; b < static_cast<int>(arch.blocks.size()); ++b) {
    const Block& block = arch.blocks[static_cast<std::size_t>(b)];
    if (block.stride != 1 && block.stride != 2) {
      add(ViolationKind::kInvalidStride, b, -1,
          "stride " + std::to_string(block.stride));
    }
    const int n = static_cast<int>(block.cells.size());
    std::vector<bool> consumed(static_cast<std::size_t>(n + 1), false);
    bool any_included = false;
    for (int c = 0; c < n; ++c) {
      const Cell& cell = block.cells[static_cast<std::size_t>(c)];
      for (int input : {cell.input1, cell.input2}) {
        // Cell c (0-based) may read slots 0..c.
        if (input < 0 || input > c) {
          add(ViolationKind::kForwardReference, b, c,
              "input slot " + std::to_string(input) +
                  " is not defined before cell " + std::to_string(c + 1));
        } else {
          consumed[static_cast<std::size_t>(input)] = true;
        }
      }
      any_included = any_included || cell.combine.included_in_block_output;
    }
    if (!any_included) {
      add(ViolationKind::kEmptyBlockOutput, b, -1,
          "no cell output is included in the block output");
    }
    for (int c = 0; c < n; ++c) {
      const Cell& cell = block.cells[static_cast<std::size_t>(c)];
      if (!cell.combine.included_in_block_output &&
          !consumed[static_cast<std::size_t>(c + 1)]) {
        add(ViolationKind::kDeadCell, b, c,
            "output of cell " + std::to_string(c + 1) + " feeds nothing");
      }
    }
  }
}

}  // namespace

std::string_view op_name(OpKind op) {
  return kOpNames[static_cast<std::size_t>(op)];
}

OpKind op_from_name(std::string_view name) {
  for (int i = 0; i < kNumOpKinds; ++i) {
    if (kOpNames[static_cast<std::size_t>(i)] == name) {
      return static_cast<OpKind>(i);
    }
  }
  throw FormatError("unknown op '" + std::string(name) + "'");
}

bool is_pooling(OpKind op) {
  return op == OpKind::kAvgPool3x3 || op == OpKind::kMaxPool3x3;
}

bool has_weights(OpKind op) {
  return !is_pooling(op) && op != OpKind::kIdentity;
}

std::uint8_t CombineSpec::code() const {
  std::uint8_t bits = mode == CombineMode::kSum ? 0b001 : 0b010;
  if (included_in_block_output) bits |= 0b100;
  return bits;
}

CombineSpec CombineSpec::from_code(std::uint8_t code) {
  const bool sum = (code & 0b001) != 0;
  const bool concat = (code & 0b010) != 0;
  if (code > 0b111 || sum == concat) {
    throw MalformedVector("combine code " + std::to_string(code) +
                          " must set exactly one of sum/concat");
  }
  return {sum ? CombineMode::kSum : CombineMode::kConcat, (code & 0b100) != 0};
}

std::string TensorShape::to_string() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" +
         std::to_string(channels);
}

std::string encode_op(OpKind op) {
  if (op == OpKind::kIdentity) return std::string(kOpVectorBits, '0');
  return one_hot(static_cast<int>(op), kOpVectorBits);
}

OpKind decode_op(std::string_view bits) {
  if (bits.size() != kOpVectorBits) {
    throw MalformedVector("layer vector must have 7 bits");
  }
  const auto ones = set_bits(bits);
  if (ones.empty()) return OpKind::kIdentity;
  if (ones.size() > 1) {
    throw MalformedVector("layer vector '" + std::string(bits) +
                          "' has more than one bit set");
  }
  return static_cast<OpKind>(ones.front());
}

CellTuple encode_tuple(const Cell& cell, int context_size) {
  for (int input : {cell.input1, cell.input2}) {
    if (input < 0 || input >= context_size) {
      throw InvalidContext("input slot " + std::to_string(input) +
                           " outside a context of " +
                           std::to_string(context_size));
    }
  }
  CellTuple tuple;
  tuple.input1 = one_hot(cell.input1, context_size);
  tuple.input2 = one_hot(cell.input2, context_size);
  tuple.op1 = encode_op(cell.op1);
  tuple.op2 = encode_op(cell.op2);
  const std::uint8_t code = cell.combine.code();
  tuple.combine = {static_cast<char>('0' + ((code >> 2) & 1)),
                   static_cast<char>('0' + ((code >> 1) & 1)),
                   static_cast<char>('0' + (code & 1))};
  return tuple;
}

Cell decode_tuple(const CellTuple& tuple) {
  if (tuple.input1.size() != tuple.input2.size()) {
    throw MalformedVector("input vectors differ in length");
  }
  Cell cell;
  cell.input1 = decode_one_hot(tuple.input1, "I1");
  cell.input2 = decode_one_hot(tuple.input2, "I2");
  cell.op1 = decode_op(tuple.op1);
  cell.op2 = decode_op(tuple.op2);
  if (tuple.combine.size() != 3) {
    throw MalformedVector("combine vector must have 3 bits");
  }
  std::uint8_t code = 0;
  for (int bit : set_bits(tuple.combine)) code |= static_cast<std::uint8_t>(1u << bit);
  cell.combine = CombineSpec::from_code(code);
  return cell;
}

TensorShape layer_output_shape(OpKind op, const TensorShape& in, int stride,
                               int channel_width) {
  TensorShape out;
  // Same padding: ceil(dim / stride).
  out.height = (in.height + stride - 1) / stride;
  out.width = (in.width + stride - 1) / stride;
  out.channels = has_weights(op) ? channel_width : in.channels;
  return out;
}

const TensorShape& BlockShapes::slot(int s) const {
  if (s == 0) return input;
  return cells.at(static_cast<std::size_t>(s - 1)).output;
}

const TensorShape& BlockShapes::representation(int r) const {
  if (r == 1) return input;
  if (r < 1) throw InvalidArgument("representation numbers start at r1");
  const int cell = (r + 1) / 3;  // r2,r3,r4 -> cell 1
  const CellShapes& shapes = cells.at(static_cast<std::size_t>(cell - 1));
  switch ((r - 2) % 3) {
    case 0:
      return shapes.layer1;
    case 1:
      return shapes.layer2;
    default:
      return shapes.output;
  }
}

ShapeMap infer_shapes(const NetworkArch& arch) {
  std::vector<Violation> structural;
  check_structure(arch, structural);
  for (const auto& v : structural) {
    // Dead cells do not prevent shape inference.
    if (v.kind != ViolationKind::kDeadCell) {
      throw InvalidArchitecture(std::string(violation_name(v.kind)) + ": " +
                                v.message);
    }
  }

  ShapeMap map;
  map.stem_output = arch.input_shape;
  if (arch.stem_enabled) map.stem_output.channels = arch.channel_width;

  TensorShape current = map.stem_output;
  for (const Block& block : arch.blocks) {
    BlockShapes shapes;
    shapes.input = current;
    shapes.cells.reserve(block.cells.size());
    for (const Cell& cell : block.cells) {
      CellShapes cs;
      cs.layer1 = layer_output_shape(cell.op1, shapes.slot(cell.input1),
                                     layer_stride(block.stride, cell.input1),
                                     arch.channel_width);
      cs.layer2 = layer_output_shape(cell.op2, shapes.slot(cell.input2),
                                     layer_stride(block.stride, cell.input2),
                                     arch.channel_width);
      cs.output = combine_shapes(cell.combine, cs.layer1, cs.layer2);
      shapes.cells.push_back(cs);
    }
    bool first = true;
    for (std::size_t c = 0; c < block.cells.size(); ++c) {
      if (!block.cells[c].combine.included_in_block_output) continue;
      const TensorShape& out = shapes.cells[c].output;
      if (first) {
        shapes.output = out;
        first = false;
      } else {
        shapes.output = combine_shapes({CombineMode::kConcat, true},
                                       shapes.output, out);
      }
    }
    current = shapes.output;
    map.blocks.push_back(std::move(shapes));
  }
  return map;
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNoBlocks:
      return "NoBlocks";
    case ViolationKind::kInvalidChannelWidth:
      return "InvalidChannelWidth";
    case ViolationKind::kInvalidNumClasses:
      return "InvalidNumClasses";
    case ViolationKind::kInvalidShape:
      return "InvalidShape";
    case ViolationKind::kInvalidStride:
      return "InvalidStride";
    case ViolationKind::kForwardReference:
      return "ForwardReference";
    case ViolationKind::kEmptyBlockOutput:
      return "EmptyBlockOutput";
    case ViolationKind::kDeadCell:
      return "DeadCell";
    case ViolationKind::kShapeMismatch:
      return "ShapeMismatch";
  }
  return "Unknown";
}

std::vector<Violation> validate(const NetworkArch& arch) {
  std::vector<Violation> violations;
  check_structure(arch, violations);
  for (const auto& v : violations) {
    if (v.kind != ViolationKind::kDeadCell) return violations;
  }
  try {
    infer_shapes(arch);
  } catch (const ShapeMismatch& e) {
    violations.push_back({ViolationKind::kShapeMismatch, -1, -1, e.what()});
  }
  return violations;
}

std::string canonical_key(const NetworkArch& arch) {
  std::ostringstream os;
  os << "gt1;in=" << arch.input_shape.to_string() << ";w=" << arch.channel_width
     << ";stem=" << (arch.stem_enabled ? 1 : 0) << ";cls=" << arch.num_classes
     << ";";
  for (const Block& block : arch.blocks) {
    os << "B" << block.stride << "[";
    for (const Cell& cell : block.cells) {
      os << "(" << cell.input1 << "," << cell.input2 << ","
         << static_cast<int>(cell.op1) << "," << static_cast<int>(cell.op2)
         << "," << static_cast<int>(cell.combine.code()) << ")";
    }
    os << "]";
  }
  return os.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t canonical_hash(const NetworkArch& arch) {
  return fnv1a64(canonical_key(arch));
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

NetworkArch make_initial_arch(const TemplateOptions& options) {
  if (options.num_blocks < 1) throw InvalidArgument("num_blocks must be >= 1");
  if (static_cast<int>(options.strides.size()) != options.num_blocks) {
    throw InvalidArgument("stride pattern length must equal num_blocks");
  }
  NetworkArch arch;
  arch.channel_width = options.channel_width;
  arch.input_shape = options.input_shape;
  arch.stem_enabled = options.stem_enabled;
  arch.num_classes = options.num_classes;
  for (int stride : options.strides) {
    Block block;
    block.stride = stride;
    block.cells.push_back(Cell{0, 0, OpKind::kConv3x3, OpKind::kConv3x3,
                               {CombineMode::kSum, true}});
    arch.blocks.push_back(std::move(block));
  }
  return arch;
}

OpCensus op_census(const NetworkArch& arch) {
  OpCensus census;
  for (const Block& block : arch.blocks) {
    for (const Cell& cell : block.cells) {
      for (OpKind op : {cell.op1, cell.op2}) {
        ++census.total_layers;
        if (has_weights(op)) {
          ++census.weighted_layers;
        } else {
          ++census.pooling_or_identity;
        }
      }
    }
  }
  return census;
}

}  // namespace growtrim
