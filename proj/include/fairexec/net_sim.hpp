#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "fairexec/bytes.hpp"

namespace fairexec::net {

using Tick = std::uint64_t;
using ActorId = std::uint32_t;

inline constexpr ActorId kNoActor = 0xffffffff;

// delivery = send + latency + ceil((size + overhead) / bytes_per_tick)
struct LinkModel {
  Tick latency = 3000;
  std::uint64_t bytes_per_tick = 10;
  std::uint64_t overhead_bytes = 0;

  Tick delivery(Tick send, std::size_t size) const;
};

// Runs callbacks in (tick, insertion order). Callbacks may schedule more.
class Simulator {
 public:
  Tick now() const { return now_; }
  std::uint64_t events_run() const { return events_run_; }
  bool idle() const { return queue_.empty(); }
  std::optional<Tick> next_tick() const;

  void at(Tick t, std::function<void()> fn);
  void after(Tick delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); }

  // Throws TickLimitExceeded if an event is due past `tick_limit`.
  void run_until_quiescent(Tick tick_limit);

 private:
  struct Event {
    Tick tick;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
    }
  };

  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t events_run_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

struct Envelope {
  ActorId from = kNoActor;
  ActorId to = kNoActor;
  std::uint8_t variant = 0;
  std::uint64_t index = 0;  // per (from, variant), counting from 0
  Bytes bytes;
};

enum class FaultAction : std::uint8_t { Drop, Tamper, Replay, Delay, Partition };

// Matches the index-th message of `variant` sent by `from` (any index when
// unset). Tamper rewrites the bytes; Replay delivers the original and then a
// copy `delay` ticks later; Delay holds the message back by `delay` ticks;
// Partition loses the message and cuts the link for the next `delay` ticks.
struct FaultDirective {
  ActorId from = kNoActor;
  std::optional<std::uint8_t> variant;
  std::optional<std::uint64_t> index;
  FaultAction action = FaultAction::Drop;
  std::function<Bytes(const Bytes&)> mutate;
  Tick delay = 0;
  std::string label;

  bool matches(const Envelope& e) const;
};

// Every message between a and b (either direction) sent in [start, end) is lost.
struct Partition {
  ActorId a = kNoActor;
  ActorId b = kNoActor;
  Tick start = 0;
  Tick end = 0;
};

struct FaultScript {
  std::vector<FaultDirective> directives;
  std::vector<Partition> partitions;

  bool empty() const { return directives.empty() && partitions.empty(); }
};

enum class TraceKind : std::uint8_t { Send, Deliver, Drop, Note };

struct TraceRecord {
  Tick tick = 0;
  ActorId actor = kNoActor;
  TraceKind kind = TraceKind::Send;
  ActorId peer = kNoActor;
  std::string what;  // message variant name or note text
  std::size_t size = 0;
};

struct TrafficCounters {
  std::uint64_t sent_messages = 0;
  std::uint64_t sent_bytes = 0;
  std::uint64_t delivered_messages = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t dropped_messages = 0;
};

class Network {
 public:
  using Handler = std::function<void(const Envelope&)>;
  using VariantNamer = std::function<std::string(std::uint8_t)>;

  Network(Simulator& sim, LinkModel link, FaultScript faults = {});

  ActorId add_actor(std::string name, Handler handler);
  void set_handler(ActorId id, Handler handler);
  const std::string& name(ActorId id) const { return names_.at(id); }
  std::size_t actor_count() const { return names_.size(); }
  void set_variant_namer(VariantNamer namer) { namer_ = std::move(namer); }

  void send(ActorId from, ActorId to, std::uint8_t variant, Bytes bytes);
  void note(ActorId actor, std::string text);

  const LinkModel& link() const { return link_; }
  const TrafficCounters& traffic(ActorId from, ActorId to) const;
  TrafficCounters totals() const;
  std::uint64_t in_flight() const { return in_flight_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }

  // tick, actor, direction, peer, variant, size; tab separated, one per line.
  std::string format_trace() const;

 private:
  void schedule_delivery(Envelope env, Tick at);
  bool partitioned(ActorId a, ActorId b, Tick t) const;
  std::string variant_name(std::uint8_t v) const;

  Simulator& sim_;
  LinkModel link_;
  FaultScript faults_;
  VariantNamer namer_;
  std::vector<std::string> names_;
  std::vector<Handler> handlers_;
  std::map<std::pair<ActorId, std::uint8_t>, std::uint64_t> counters_;
  std::map<std::pair<ActorId, ActorId>, TrafficCounters> traffic_;
  std::uint64_t in_flight_ = 0;
  std::vector<TraceRecord> trace_;
};

}  // namespace fairexec::net
