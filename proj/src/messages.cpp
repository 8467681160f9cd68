#include "fairexec/messages.hpp"

namespace fairexec::protocol {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Request: return "Request";
    case Variant::Accept: return "Accept";
    case Variant::Reject: return "Reject";
    case Variant::RoundResult: return "RoundResult";
    case Variant::Update: return "Update";
    case Variant::KeyReveal: return "KeyReveal";
    case Variant::Continue: return "Continue";
    case Variant::Terminate: return "Terminate";
  }
  return "Unknown";
}

Variant Message::variant() const { return static_cast<Variant>(body.index() + 1); }

namespace {

struct BodyWriter {
  ByteWriter& w;

  void operator()(const Request& b) {
    w.str(b.function_id);
    w.blob(serialize(b.state));
    w.u64(b.total_cycles);
    w.u64(b.rate);
    w.u8(static_cast<std::uint8_t>(b.mode));
  }
  void operator()(const Accept& b) {
    w.raw(b.executor.bytes);
    w.raw(b.attestation.expected_measurement.bytes);
    w.raw(b.attestation.attestation_address.bytes);
  }
  void operator()(const Reject& b) { w.str(b.reason); }
  void operator()(const RoundResult& b) {
    w.u64(b.round_id);
    w.u64(b.cycles_requested);
    tee::encode(w, b.result);
  }
  void operator()(const Update& b) {
    w.raw(b.update.id.bytes);
    w.u64(b.update.v);
    w.raw(b.update.key_hash.bytes);
    w.blob(b.update.sig.bytes);
  }
  void operator()(const KeyReveal& b) {
    w.u64(b.round_id);
    w.raw(b.key.bytes);
  }
  void operator()(const Continue& b) { w.u64(b.cycles); }
  void operator()(const Terminate&) {}
};

Body read_body(Variant v, ByteReader& r) {
  switch (v) {
    case Variant::Request: {
      Request b;
      b.function_id = r.str();
      b.state = deserialize_state(r.blob());
      b.total_cycles = r.u64();
      b.rate = r.u64();
      auto mode = r.u8();
      if (mode > 1) throw Error(ErrorCode::DecodeError, "unknown result mode");
      b.mode = static_cast<tee::ResultMode>(mode);
      return b;
    }
    case Variant::Accept: {
      Accept b;
      b.executor.bytes = r.fixed<crypto::kAddressSize>();
      b.attestation.expected_measurement.bytes = r.fixed<crypto::kDigestSize>();
      b.attestation.attestation_address.bytes = r.fixed<crypto::kAddressSize>();
      return b;
    }
    case Variant::Reject: return Reject{r.str()};
    case Variant::RoundResult: {
      RoundResult b;
      b.round_id = r.u64();
      b.cycles_requested = r.u64();
      b.result = tee::decode_wrapped(r);
      return b;
    }
    case Variant::Update: {
      Update b;
      b.update.id.bytes = r.fixed<crypto::kDigestSize>();
      b.update.v = r.u64();
      b.update.key_hash.bytes = r.fixed<crypto::kDigestSize>();
      b.update.sig.bytes = r.blob();
      return b;
    }
    case Variant::KeyReveal: {
      KeyReveal b;
      b.round_id = r.u64();
      b.key.bytes = r.fixed<crypto::kKeySize>();
      return b;
    }
    case Variant::Continue: return Continue{r.u64()};
    case Variant::Terminate: return Terminate{};
  }
  throw Error(ErrorCode::DecodeError, "unknown message variant");
}

}  // namespace

Bytes encode(const Message& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.variant()));
  w.raw(m.sender.bytes);
  w.u64(m.seq);
  w.raw(m.contract.bytes);
  std::visit(BodyWriter{w}, m.body);
  return std::move(w).take();
}

Message decode(ByteView data) {
  ByteReader r(data);
  auto v = r.u8();
  if (v < 1 || v > 8) throw Error(ErrorCode::DecodeError, "unknown message variant " + std::to_string(v));
  Message m;
  m.sender.bytes = r.fixed<crypto::kAddressSize>();
  m.seq = r.u64();
  m.contract.bytes = r.fixed<crypto::kDigestSize>();
  m.body = read_body(static_cast<Variant>(v), r);
  r.expect_done();
  return m;
}

}  // namespace fairexec::protocol
