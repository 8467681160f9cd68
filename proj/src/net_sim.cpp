#include "fairexec/net_sim.hpp"

#include <sstream>

#include "fairexec/error.hpp"

namespace fairexec::net {

Tick LinkModel::delivery(Tick send, std::size_t size) const {
  std::uint64_t total = size + overhead_bytes;
  Tick transfer = bytes_per_tick == 0 ? 0 : (total + bytes_per_tick - 1) / bytes_per_tick;
  return send + latency + transfer;
}

std::optional<Tick> Simulator::next_tick() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().tick;
}

void Simulator::at(Tick t, std::function<void()> fn) {
  if (t < now_) t = now_;
  queue_.push(Event{t, next_seq_++, std::move(fn)});
}

void Simulator::run_until_quiescent(Tick tick_limit) {
  while (!queue_.empty()) {
    if (queue_.top().tick > tick_limit) {
      throw Error(ErrorCode::TickLimitExceeded,
                  "event pending at tick " + std::to_string(queue_.top().tick) + " beyond limit " +
                      std::to_string(tick_limit));
    }
    // priority_queue::top is const; the event is copied out before popping.
    Event e = queue_.top();
    queue_.pop();
    now_ = e.tick;
    ++events_run_;
    e.fn();
  }
}

bool FaultDirective::matches(const Envelope& e) const {
  if (from != kNoActor && from != e.from) return false;
  if (variant && *variant != e.variant) return false;
  if (index && *index != e.index) return false;
  return true;
}

Network::Network(Simulator& sim, LinkModel link, FaultScript faults)
    : sim_(sim), link_(link), faults_(std::move(faults)) {}

ActorId Network::add_actor(std::string name, Handler handler) {
  names_.push_back(std::move(name));
  handlers_.push_back(std::move(handler));
  return static_cast<ActorId>(names_.size() - 1);
}

void Network::set_handler(ActorId id, Handler handler) { handlers_.at(id) = std::move(handler); }

std::string Network::variant_name(std::uint8_t v) const {
  return namer_ ? namer_(v) : std::to_string(v);
}

bool Network::partitioned(ActorId a, ActorId b, Tick t) const {
  for (const auto& p : faults_.partitions) {
    bool pair = (p.a == a && p.b == b) || (p.a == b && p.b == a);
    if (pair && t >= p.start && t < p.end) return true;
  }
  return false;
}

void Network::send(ActorId from, ActorId to, std::uint8_t variant, Bytes bytes) {
  Envelope env{from, to, variant, counters_[{from, variant}]++, std::move(bytes)};
  auto& tc = traffic_[{from, to}];
  ++tc.sent_messages;
  tc.sent_bytes += env.bytes.size();
  trace_.push_back({sim_.now(), from, TraceKind::Send, to, variant_name(variant), env.bytes.size()});

  auto drop = [&](const std::string& why) {
    ++tc.dropped_messages;
    trace_.push_back({sim_.now(), from, TraceKind::Drop, to, variant_name(variant) + " " + why,
                      env.bytes.size()});
  };
  if (partitioned(from, to, sim_.now())) return drop("partition");

  Tick extra = 0;
  std::optional<Tick> replay_after;
  for (const auto& d : faults_.directives) {
    if (!d.matches(env)) continue;
    switch (d.action) {
      case FaultAction::Drop:
        return drop(d.label.empty() ? "drop" : d.label);
      case FaultAction::Tamper:
        if (d.mutate) env.bytes = d.mutate(env.bytes);
        break;
      case FaultAction::Replay:
        replay_after = d.delay;
        break;
      case FaultAction::Delay:
        extra += d.delay;
        break;
      case FaultAction::Partition:
        faults_.partitions.push_back({from, to, sim_.now(), sim_.now() + d.delay});
        return drop("partition");
    }
  }
  Tick at = link_.delivery(sim_.now(), env.bytes.size()) + extra;
  if (replay_after) schedule_delivery(env, at + *replay_after);
  schedule_delivery(std::move(env), at);
}

void Network::schedule_delivery(Envelope env, Tick at) {
  ++in_flight_;
  sim_.at(at, [this, env = std::move(env)] {
    --in_flight_;
    auto& tc = traffic_[{env.from, env.to}];
    ++tc.delivered_messages;
    tc.delivered_bytes += env.bytes.size();
    trace_.push_back({sim_.now(), env.to, TraceKind::Deliver, env.from, variant_name(env.variant),
                      env.bytes.size()});
    if (env.to < handlers_.size() && handlers_[env.to]) handlers_[env.to](env);
  });
}

void Network::note(ActorId actor, std::string text) {
  trace_.push_back({sim_.now(), actor, TraceKind::Note, kNoActor, std::move(text), 0});
}

const TrafficCounters& Network::traffic(ActorId from, ActorId to) const {
  static const TrafficCounters kEmpty;
  auto it = traffic_.find({from, to});
  return it == traffic_.end() ? kEmpty : it->second;
}

TrafficCounters Network::totals() const {
  TrafficCounters t;
  for (const auto& [_, c] : traffic_) {
    t.sent_messages += c.sent_messages;
    t.sent_bytes += c.sent_bytes;
    t.delivered_messages += c.delivered_messages;
    t.delivered_bytes += c.delivered_bytes;
    t.dropped_messages += c.dropped_messages;
  }
  return t;
}

std::string Network::format_trace() const {
  std::ostringstream os;
  for (const auto& r : trace_) {
    const char* dir = "note";
    switch (r.kind) {
      case TraceKind::Send: dir = "send"; break;
      case TraceKind::Deliver: dir = "recv"; break;
      case TraceKind::Drop: dir = "drop"; break;
      case TraceKind::Note: break;
    }
    os << r.tick << '\t' << (r.actor < names_.size() ? names_[r.actor] : "-") << '\t' << dir << '\t'
       << (r.peer < names_.size() ? names_[r.peer] : "-") << '\t' << r.what << '\t' << r.size << '\n';
  }
  return os.str();
}

}  // namespace fairexec::net
