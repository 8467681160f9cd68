#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairexec/bytes.hpp"
#include "fairexec/crypto.hpp"

namespace fairexec {

inline constexpr std::size_t kSchemaTagSize = 16;

// A program state. The blob layout belongs to the workload named by schema_tag.
struct MState {
  std::string schema_tag;
  Bytes blob;

  std::size_t size_bytes() const { return blob.size(); }
  bool operator==(const MState&) const = default;
};

// 16-byte zero-padded tag, u32 length, blob.
Bytes serialize(const MState& s);
MState deserialize_state(ByteView data);

// Output messages in emission order. Concatenation across rounds preserves order.
struct OutBuffer {
  std::vector<Bytes> messages;

  void append(Bytes m) { messages.push_back(std::move(m)); }
  void extend(const OutBuffer& other) {
    messages.insert(messages.end(), other.messages.begin(), other.messages.end());
  }
  bool empty() const { return messages.empty(); }
  bool operator==(const OutBuffer&) const = default;
};

Bytes serialize(const OutBuffer& out);
OutBuffer deserialize_out(ByteView data);

struct StepResult {
  MState new_state;
  OutBuffer out;
  std::uint64_t cycles_done = 0;
  bool terminal = false;
};

// A pluggable, deterministic function run by the executor. One cycle is
// whatever the workload says it is.
class Program {
 public:
  virtual ~Program() = default;

  virtual std::string_view schema_tag() const = 0;
  // Hashed into the enclave measurement.
  virtual std::string code_identity() const = 0;
  virtual bool is_terminal(const MState& s) const = 0;
  virtual std::uint64_t working_set_bytes(const MState& s) const { return 2 * s.size_bytes(); }

  // Runs at most `cycles` cycles on a non-terminal state with a matching tag.
  // Callers go through step(), which handles the zero-cycle and terminal cases.
  virtual StepResult advance(const MState& s, std::uint64_t cycles) const = 0;
};

StepResult step(const Program& p, const MState& s, std::uint64_t cycles);

// Runs (a then b) and (a + b) and compares state, concatenated output and
// summed cycles.
bool compose_check(const Program& p, const MState& s0, std::uint64_t a, std::uint64_t b);

struct DiffOp {
  enum class Kind : std::uint8_t { Remove = 0, Replace = 1, Insert = 2 };

  Kind kind = Kind::Replace;
  std::uint32_t offset = 0;  // position in the base blob
  std::uint32_t length = 0;  // bytes removed/replaced/inserted
  Bytes payload;             // empty for Remove

  bool operator==(const DiffOp&) const = default;
};

struct StateDiff {
  crypto::Digest base_digest;
  std::vector<DiffOp> ops;

  bool empty() const { return ops.empty(); }
  bool removal_only() const;
  bool operator==(const StateDiff&) const = default;
};

Bytes serialize(const StateDiff& d);
StateDiff deserialize_diff(ByteView data);

StateDiff gen_diff(const MState& s, const MState& s2);
// Throws BaseMismatch when s is not the state the diff was generated from.
MState apply_diff(const MState& s, const StateDiff& sd);

}  // namespace fairexec
