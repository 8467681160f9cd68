#include "fairexec/exec_model.hpp"

#include <algorithm>

namespace fairexec {
namespace {

// Runs separated by fewer bytes than an op header are cheaper merged.
constexpr std::size_t kMergeGap = 9;

void require_same_schema(const MState& a, const MState& b) {
  if (a.schema_tag != b.schema_tag) {
    throw Error(ErrorCode::SchemaMismatch, a.schema_tag + " vs " + b.schema_tag);
  }
}

}  // namespace

Bytes serialize(const MState& s) {
  if (s.schema_tag.size() > kSchemaTagSize) {
    throw Error(ErrorCode::SchemaMismatch, "schema tag longer than 16 bytes");
  }
  ByteWriter w;
  std::array<std::uint8_t, kSchemaTagSize> tag{};
  std::copy(s.schema_tag.begin(), s.schema_tag.end(), tag.begin());
  w.raw(tag);
  w.blob(s.blob);
  return std::move(w).take();
}

MState deserialize_state(ByteView data) {
  ByteReader r(data);
  auto tag = r.fixed<kSchemaTagSize>();
  MState s;
  auto end = std::find(tag.begin(), tag.end(), 0);
  s.schema_tag.assign(tag.begin(), end);
  s.blob = r.blob();
  r.expect_done();
  return s;
}

Bytes serialize(const OutBuffer& out) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(out.messages.size()));
  for (const auto& m : out.messages) w.blob(m);
  return std::move(w).take();
}

OutBuffer deserialize_out(ByteView data) {
  ByteReader r(data);
  OutBuffer out;
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) out.messages.push_back(r.blob());
  r.expect_done();
  return out;
}

StepResult step(const Program& p, const MState& s, std::uint64_t cycles) {
  if (s.schema_tag != p.schema_tag()) {
    throw Error(ErrorCode::SchemaMismatch,
                "state is " + s.schema_tag + ", program expects " + std::string(p.schema_tag()));
  }
  bool terminal = p.is_terminal(s);
  if (cycles == 0 || terminal) return StepResult{s, {}, 0, terminal};
  auto r = p.advance(s, cycles);
  if (r.cycles_done > cycles) {
    throw std::logic_error("program reported more cycles than requested");
  }
  return r;
}

bool compose_check(const Program& p, const MState& s0, std::uint64_t a, std::uint64_t b) {
  auto first = step(p, s0, a);
  auto second = step(p, first.new_state, b);
  auto whole = step(p, s0, a + b);

  OutBuffer joined = first.out;
  joined.extend(second.out);
  return second.new_state == whole.new_state && joined == whole.out &&
         first.cycles_done + second.cycles_done == whole.cycles_done &&
         second.terminal == whole.terminal;
}

bool StateDiff::removal_only() const {
  return std::all_of(ops.begin(), ops.end(),
                     [](const DiffOp& op) { return op.kind == DiffOp::Kind::Remove; });
}

Bytes serialize(const StateDiff& d) {
  ByteWriter w;
  w.raw(d.base_digest.bytes);
  w.u32(static_cast<std::uint32_t>(d.ops.size()));
  for (const auto& op : d.ops) {
    w.u32(op.offset);
    w.u32(op.length);
    w.u8(static_cast<std::uint8_t>(op.kind));
    if (op.kind != DiffOp::Kind::Remove) w.raw(op.payload);
  }
  return std::move(w).take();
}

StateDiff deserialize_diff(ByteView data) {
  ByteReader r(data);
  StateDiff d;
  d.base_digest.bytes = r.fixed<crypto::kDigestSize>();
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    DiffOp op;
    op.offset = r.u32();
    op.length = r.u32();
    auto kind = r.u8();
    if (kind > 2) throw Error(ErrorCode::DecodeError, "unknown diff op kind");
    op.kind = static_cast<DiffOp::Kind>(kind);
    if (op.kind != DiffOp::Kind::Remove) {
      auto p = r.raw(op.length);
      op.payload.assign(p.begin(), p.end());
    }
    d.ops.push_back(std::move(op));
  }
  r.expect_done();
  return d;
}

// Common prefix and suffix are skipped; the overlapping middle is covered by
// merged replace runs, and any length difference becomes a single trailing
// remove or insert. A contiguous deletion therefore yields one Remove op.
StateDiff gen_diff(const MState& s, const MState& s2) {
  require_same_schema(s, s2);
  StateDiff d;
  d.base_digest = crypto::hash(s.blob);

  const auto& a = s.blob;
  const auto& b = s2.blob;
  std::size_t n = a.size(), m = b.size();
  std::size_t prefix = 0;
  while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
  if (prefix == n && prefix == m) return d;
  std::size_t suffix = 0;
  while (suffix < n - prefix && suffix < m - prefix && a[n - 1 - suffix] == b[m - 1 - suffix]) {
    ++suffix;
  }
  std::size_t mid_a = n - prefix - suffix;
  std::size_t mid_b = m - prefix - suffix;
  std::size_t common = std::min(mid_a, mid_b);

  std::size_t i = 0;
  while (i < common) {
    if (a[prefix + i] == b[prefix + i]) {
      ++i;
      continue;
    }
    std::size_t start = i;
    std::size_t last_diff = i;
    for (std::size_t j = i; j < common && j - last_diff <= kMergeGap; ++j) {
      if (a[prefix + j] != b[prefix + j]) last_diff = j;
    }
    std::size_t end = last_diff + 1;
    DiffOp op;
    op.kind = DiffOp::Kind::Replace;
    op.offset = static_cast<std::uint32_t>(prefix + start);
    op.length = static_cast<std::uint32_t>(end - start);
    op.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(prefix + start),
                      b.begin() + static_cast<std::ptrdiff_t>(prefix + end));
    d.ops.push_back(std::move(op));
    i = end;
  }
  if (mid_a > common) {
    d.ops.push_back(DiffOp{DiffOp::Kind::Remove, static_cast<std::uint32_t>(prefix + common),
                           static_cast<std::uint32_t>(mid_a - common), {}});
  } else if (mid_b > common) {
    DiffOp op;
    op.kind = DiffOp::Kind::Insert;
    op.offset = static_cast<std::uint32_t>(prefix + common);
    op.length = static_cast<std::uint32_t>(mid_b - common);
    op.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(prefix + common),
                      b.begin() + static_cast<std::ptrdiff_t>(prefix + mid_b));
    d.ops.push_back(std::move(op));
  }
  return d;
}

MState apply_diff(const MState& s, const StateDiff& sd) {
  if (crypto::hash(s.blob) != sd.base_digest) {
    throw Error(ErrorCode::BaseMismatch, "diff was generated against a different state");
  }
  MState out;
  out.schema_tag = s.schema_tag;
  const auto& a = s.blob;
  std::size_t cursor = 0;
  for (const auto& op : sd.ops) {
    if (op.offset < cursor || op.offset > a.size()) {
      throw Error(ErrorCode::DecodeError, "diff ops out of order or out of range");
    }
    out.blob.insert(out.blob.end(), a.begin() + static_cast<std::ptrdiff_t>(cursor),
                    a.begin() + op.offset);
    cursor = op.offset;
    switch (op.kind) {
      case DiffOp::Kind::Insert:
        out.blob.insert(out.blob.end(), op.payload.begin(), op.payload.end());
        break;
      case DiffOp::Kind::Replace:
      case DiffOp::Kind::Remove:
        if (cursor + op.length > a.size()) {
          throw Error(ErrorCode::DecodeError, "diff op exceeds base state");
        }
        if (op.kind == DiffOp::Kind::Replace) {
          out.blob.insert(out.blob.end(), op.payload.begin(), op.payload.end());
        }
        cursor += op.length;
        break;
    }
  }
  out.blob.insert(out.blob.end(), a.begin() + static_cast<std::ptrdiff_t>(cursor), a.end());
  return out;
}

}  // namespace fairexec
