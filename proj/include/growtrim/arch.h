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

// Architecture intermediate representation for the cell-based template
// network: a network is a chain of blocks, a block is an ordered list of
// cells, and a cell is two parallel operation layers plus a combining layer.
//
// Representation slots. Inside a block, slot 0 is the block input and slot c
// (1-based) is the combined output of cell c. A cell may read any slot that
// precedes it. Slot s corresponds to representation r(3s+1) in the r1..rn
// numbering used by architecture files: cell c owns r(3c-1) and r(3c) for its
// two layer outputs and r(3c+1) for its combined output.

#ifndef GROWTRIM_ARCH_H_
#define GROWTRIM_ARCH_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace growtrim {

enum class OpKind : std::uint8_t {
  kConv3x3 = 0,
  kDepthwiseConv3x3,
  kDepthwiseConv5x5,
  kFactorized1x7_7x1,
  kAvgPool3x3,
  kMaxPool3x3,
  kDilatedConv3x3,
  kIdentity,
};

inline constexpr int kNumOpKinds = 8;
// Width of the one-hot layer vector. Identity has no bit of its own.
inline constexpr int kOpVectorBits = 7;

inline constexpr std::array<OpKind, 7> kGrowableOps = {
    OpKind::kConv3x3,          OpKind::kDepthwiseConv3x3,
    OpKind::kDepthwiseConv5x5, OpKind::kFactorized1x7_7x1,
    OpKind::kAvgPool3x3,       OpKind::kMaxPool3x3,
    OpKind::kDilatedConv3x3};

std::string_view op_name(OpKind op);
OpKind op_from_name(std::string_view name);  // throws FormatError
bool is_pooling(OpKind op);
bool has_weights(OpKind op);

enum class CombineMode : std::uint8_t { kSum, kConcat };

struct CombineSpec {
  CombineMode mode = CombineMode::kSum;
  bool included_in_block_output = false;

  // Bit 2 = included, bit 1 = concat, bit 0 = sum.
  std::uint8_t code() const;
  static CombineSpec from_code(std::uint8_t code);  // throws MalformedVector

  friend bool operator==(const CombineSpec&, const CombineSpec&) = default;
};

// The four admitted combine codes, in ascending code order (001, 010, 101,
// 110).
inline constexpr std::array<std::uint8_t, 4> kCombineCodes = {0b001, 0b010,
                                                              0b101, 0b110};

struct Cell {
  int input1 = 0;  // slot index
  int input2 = 0;
  OpKind op1 = OpKind::kConv3x3;
  OpKind op2 = OpKind::kConv3x3;
  CombineSpec combine;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct TensorShape {
  std::int64_t height = 1;
  std::int64_t width = 1;
  std::int64_t channels = 1;

  std::int64_t elements() const { return height * width * channels; }
  std::string to_string() const;

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct Block {
  std::vector<Cell> cells;
  int stride = 1;

  // Number of representation slots a new cell appended to this block can
  // read from.
  int available_slots() const { return static_cast<int>(cells.size()) + 1; }

  friend bool operator==(const Block&, const Block&) = default;
};

struct NetworkArch {
  std::vector<Block> blocks;
  int channel_width = 64;
  TensorShape input_shape{32, 32, 3};
  bool stem_enabled = true;
  int num_classes = 10;

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

// ---------------------------------------------------------------------------
// Tuple encoding.

// Binary vectors are stored most-significant bit first, so the string
// "0010" has bit 1 set and denotes slot 1.
struct CellTuple {
  std::string input1;
  std::string input2;
  std::string op1;
  std::string op2;
  std::string combine;

  friend bool operator==(const CellTuple&, const CellTuple&) = default;
};

CellTuple encode_tuple(const Cell& cell, int context_size);
Cell decode_tuple(const CellTuple& tuple);

std::string encode_op(OpKind op);
OpKind decode_op(std::string_view bits);

// ---------------------------------------------------------------------------
// Shapes.

struct CellShapes {
  TensorShape layer1;
  TensorShape layer2;
  TensorShape output;
};

struct BlockShapes {
  TensorShape input;
  std::vector<CellShapes> cells;
  TensorShape output;

  const TensorShape& slot(int s) const;
  // r-number lookup (1-based, r1 is the block input).
  const TensorShape& representation(int r) const;
};

struct ShapeMap {
  TensorShape stem_output;
  std::vector<BlockShapes> blocks;
};

// Throws ShapeMismatch on an illegal combine, InvalidArchitecture on any
// other structural problem.
ShapeMap infer_shapes(const NetworkArch& arch);

// Stride a layer reading `slot` applies inside a block with `block_stride`.
inline int layer_stride(int block_stride, int slot) {
  return slot == 0 ? block_stride : 1;
}
TensorShape layer_output_shape(OpKind op, const TensorShape& in, int stride,
                               int channel_width);

// ---------------------------------------------------------------------------
// Validation.

enum class ViolationKind {
  kNoBlocks,
  kInvalidChannelWidth,
  kInvalidNumClasses,
  kInvalidShape,
  kInvalidStride,
  kForwardReference,
  kEmptyBlockOutput,
  kDeadCell,
  kShapeMismatch,
};

std::string_view violation_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int block = -1;
  int cell = -1;
  std::string message;
};

std::vector<Violation> validate(const NetworkArch& arch);
inline bool is_valid(const NetworkArch& arch) { return validate(arch).empty(); }

// ---------------------------------------------------------------------------
// Canonical identity.

// Byte string that is equal for two architectures iff they are structurally
// equal.
std::string canonical_key(const NetworkArch& arch);
std::uint64_t canonical_hash(const NetworkArch& arch);  // FNV-1a of the key
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t hash);

// ---------------------------------------------------------------------------
// Construction helpers.

struct TemplateOptions {
  int num_blocks = 5;
  std::vector<int> strides = {1, 2, 1, 2, 1};
  int channel_width = 64;
  TensorShape input_shape{32, 32, 3};
  bool stem_enabled = true;
  int num_classes = 10;
};

// One cell per block: Conv3x3 on r1 twice, summed, included in the output.
NetworkArch make_initial_arch(const TemplateOptions& options = {});

// Counts over all cells of the network.
struct OpCensus {
  int total_layers = 0;
  int weighted_layers = 0;  // neither pooling nor identity
  int pooling_or_identity = 0;
};
OpCensus op_census(const NetworkArch& arch);

}  // namespace growtrim

#endif  // GROWTRIM_ARCH_H_
