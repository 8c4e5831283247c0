#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphfill/abp.hpp"
#include "graphfill/colors.hpp"
#include "graphfill/graph.hpp"
#include "graphfill/memory.hpp"
#include "graphfill/protocol.hpp"
#include "graphfill/snapshot.hpp"

namespace graphfill {

enum class Protocol : uint8_t { Pack, Block, Priority, PackAbp };

inline std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Pack: return "pack";
        case Protocol::Block: return "block";
        case Protocol::Priority: return "priority";
        case Protocol::PackAbp: return "pack-abp";
    }
    return "?";
}

inline std::optional<Protocol> protocol_from_name(const std::string& s) {
    if (s == "pack") return Protocol::Pack;
    if (s == "block") return Protocol::Block;
    if (s == "priority") return Protocol::Priority;
    if (s == "pack-abp") return Protocol::PackAbp;
    return std::nullopt;
}

inline int protocol_radius(Protocol p) {
    return (p == Protocol::Block || p == Protocol::Priority) ? 2 : 1;
}

struct Violation {
    std::string monitor;
    long long event = 0;
    std::string detail;
};

struct Metrics {
    long long rounds = 0;
    long long activations = 0;
    long long moves = 0;
    long long leadership_handovers = 0;
    long long target_changes = 0;
    std::set<int> palette_usage;
    int peak_memory_bits = 0;
    std::vector<Violation> violations;
};

struct TraceEvent {
    enum class Phase : uint8_t { Look, Commit, Spawn, Finish };
    long long num = 0;
    int robot = 0;
    Phase phase = Phase::Look;
    int vertex = 0;
    int color_code = 0;
    int target = -1;  // move commits pending/applied; -1 when absent
};

inline std::string phase_name(TraceEvent::Phase p) {
    switch (p) {
        case TraceEvent::Phase::Look: return "LOOK";
        case TraceEvent::Phase::Commit: return "COMMIT";
        case TraceEvent::Phase::Spawn: return "SPAWN";
        case TraceEvent::Phase::Finish: return "FINISH";
    }
    return "?";
}

inline void write_trace(const std::vector<TraceEvent>& trace, std::ostream& os) {
    for (const auto& e : trace) {
        os << "E " << e.num << " " << e.robot << " " << phase_name(e.phase) << " " << e.vertex
           << " " << e.color_code;
        if (e.target >= 0) os << " " << e.target;
        os << "\n";
    }
}

inline std::vector<TraceEvent> read_trace(std::istream& is) {
    std::vector<TraceEvent> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag, phase;
        TraceEvent e;
        if (!(ls >> tag >> e.num >> e.robot >> phase >> e.vertex >> e.color_code) || tag != "E")
            throw std::runtime_error("trace: malformed line: " + line);
        if (!(ls >> e.target)) e.target = -1;
        if (phase == "LOOK") e.phase = TraceEvent::Phase::Look;
        else if (phase == "COMMIT") e.phase = TraceEvent::Phase::Commit;
        else if (phase == "SPAWN") e.phase = TraceEvent::Phase::Spawn;
        else if (phase == "FINISH") e.phase = TraceEvent::Phase::Finish;
        else throw std::runtime_error("trace: unknown phase " + phase);
        out.push_back(e);
    }
    return out;
}

// Asynchronous rounds of an event log: a round closes at the earliest
// event by which every robot alive at the round's start has looked at
// least once since the round began.
inline long long round_boundaries(const std::vector<TraceEvent>& log) {
    std::set<int> alive;
    std::set<int> need;
    std::set<int> seen;
    size_t missing = 0;
    long long rounds = 0;
    bool round_open = false;
    auto close_if_done = [&] {
        if (round_open && missing == 0) {
            ++rounds;
            round_open = false;
        }
    };
    for (const auto& e : log) {
        if (e.phase == TraceEvent::Phase::Spawn) {
            alive.insert(e.robot);
        } else if (e.phase == TraceEvent::Phase::Finish) {
            alive.erase(e.robot);
            if (round_open && need.count(e.robot)) {
                if (!seen.count(e.robot)) --missing;
                need.erase(e.robot);
                seen.erase(e.robot);
                close_if_done();
            }
        } else if (e.phase == TraceEvent::Phase::Look) {
            if (!round_open) {
                need = alive;
                seen.clear();
                missing = need.size();
                round_open = true;
            }
            if (need.count(e.robot) && seen.insert(e.robot).second) --missing;
            close_if_done();
        }
    }
    return rounds;
}

struct PolicyConfig {
    enum class Kind : uint8_t { Fsync, RoundRobin, RandomAsync, Trace };
    enum class Phase : uint8_t { Atomic, Split };
    Kind kind = Kind::Fsync;
    Phase phase = Phase::Atomic;
    uint64_t seed = 0;
    int max_stutter = 2;
    std::vector<TraceEvent> replay;  // Kind::Trace

    static PolicyConfig fsync() { return {}; }
    static PolicyConfig round_robin() {
        PolicyConfig p;
        p.kind = Kind::RoundRobin;
        return p;
    }
    static PolicyConfig random_async(uint64_t seed, Phase phase = Phase::Atomic, int stutter = 2) {
        PolicyConfig p;
        p.kind = Kind::RandomAsync;
        p.phase = phase;
        p.seed = seed;
        p.max_stutter = stutter;
        return p;
    }
};

struct RunLimits {
    double cap_mult = 4.0;
    bool record_trace = false;
};

inline long long pack_round_bound(int n) { return 2LL * n * n + 5LL * n; }
inline long long block_round_bound(int n) { return 10LL * n; }

struct RunResult {
    Metrics metrics;
    bool all_finished = false;
    bool filled = false;
    bool cap_exceeded = false;
    bool aborted = false;
    std::vector<TraceEvent> trace;
    std::vector<int> final_position;       // robot -> vertex
    std::vector<RobotState> final_state;   // robot -> state
    std::vector<int> robot_moves;          // robot -> move count

    bool ok() const { return all_finished && filled && metrics.violations.empty(); }
};

// One world plus the machinery to drive it. A simulation is sequential;
// run independent instances for parallel sweeps.
class Simulation {
  public:
    // Test hook: replaces the protocol transition function.
    using StepFn = std::function<StepOutput(const Snapshot&, const RobotMemory&, int, int)>;

    Simulation(const Graph& g, Protocol proto, const RunLimits& limits = {})
        : g_(&g), proto_(proto), limits_(limits) {
        k_ = static_cast<int>(g.doors.size());
        if (k_ < 1) throw std::invalid_argument("simulation: graph has no doors");
        if (proto == Protocol::PackAbp && k_ != 1)
            throw std::invalid_argument("simulation: pack-abp requires a single door");
        occupant_.assign(static_cast<size_t>(g.n()), -1);
        visited_.assign(static_cast<size_t>(g.n()), false);
        metrics_.peak_memory_bits = memory_footprint_bits(RobotMemory{}, g.delta, k_);
        spawn_if_door_empty();
    }

    void set_step_override(StepFn fn) { step_override_ = std::move(fn); }

    struct Robot {
        int vertex = 0;
        std::optional<int> entry_vertex;
        RobotMemory mem;
        Color shown = Color::off();
        TransportColor shown_transport = TransportColor::idle();
        int door_rank = 1;
        bool in_flight = false;
        int pending_target = -1;
        int moves = 0;
        std::unordered_map<int, std::pair<int, Color>> inbox;  // vertex -> (sender robot, delivered color)
    };

    const Graph& graph() const { return *g_; }
    Protocol protocol() const { return proto_; }
    int num_robots() const { return static_cast<int>(robots_.size()); }
    const Robot& robot(int rid) const { return robots_.at(static_cast<size_t>(rid)); }
    const Metrics& metrics() const { return metrics_; }
    const std::vector<TraceEvent>& trace() const { return trace_; }
    bool all_finished() const {
        return spawned_ == g_->n() && finished_count_ == spawned_;
    }
    bool stalled() const { return finished_count_ == spawned_ && !all_finished(); }
    bool aborted() const { return aborted_; }

    // Every vertex holds exactly one Finished robot.
    bool check_filled() const {
        if (static_cast<int>(robots_.size()) != g_->n()) return false;
        for (int v = 0; v < g_->n(); ++v)
            if (occupant_[static_cast<size_t>(v)] < 0) return false;
        for (const auto& r : robots_)
            if (r.mem.state != RobotState::Finished) return false;
        return true;
    }

    // --- FSYNC ---------------------------------------------------------
    // All robots look against the cycle-start state; colors, memories and
    // moves commit together afterwards. Returns false once nothing is
    // left to activate.
    bool fsync_cycle() {
        std::vector<int> alive = alive_robots();
        if (alive.empty() || aborted_) return false;
        if (proto_ == Protocol::PackAbp) return fsync_cycle_abp(alive);
        struct Decision {
            int rid;
            StepOutput out;
            int target_vertex = -1;
        };
        std::vector<Decision> decisions;
        decisions.reserve(alive.size());
        for (int rid : alive) {
            Snapshot snap;
            std::vector<int> frame;
            make_snapshot(rid, snap, frame);
            StepOutput out = run_step(snap, robots_[static_cast<size_t>(rid)].mem);
            Decision d{rid, out, -1};
            if (out.move) d.target_vertex = frame[*out.move];
            decisions.push_back(std::move(d));
        }
        for (auto& d : decisions) commit_look(d.rid, d.out, d.target_vertex);
        for (auto& d : decisions) {
            if (d.target_vertex >= 0 && !aborted_) {
                robots_[static_cast<size_t>(d.rid)].pending_target = d.target_vertex;
                commit_move(d.rid);
            }
        }
        if (!aborted_) spawn_if_door_empty();
        return !aborted_;
    }

    // --- event-driven activation ----------------------------------------
    // One atomic LCM cycle: look, compute, commit color and memory, and
    // commit the move unless split mode defers it.
    void activate(int rid, bool split) {
        Robot& r = robots_[static_cast<size_t>(rid)];
        if (r.mem.state == RobotState::Finished)
            throw std::invalid_argument("activate: robot " + std::to_string(rid) + " is Finished");
        if (r.in_flight)
            throw std::invalid_argument("activate: robot " + std::to_string(rid) + " has a move in flight");
        if (proto_ == Protocol::PackAbp) {
            abp_activate(rid, split);
            return;
        }
        Snapshot snap;
        std::vector<int> frame;
        make_snapshot(rid, snap, frame);
        StepOutput out = run_step(snap, r.mem);
        int tv = out.move ? frame[*out.move] : -1;
        commit_look(rid, out, tv);
        if (tv >= 0 && !aborted_) {
            r.pending_target = tv;
            if (split) {
                r.in_flight = true;
            } else {
                commit_move(rid);
                if (!aborted_) spawn_if_door_empty();
            }
        }
    }

    void commit_pending_move(int rid) {
        Robot& r = robots_[static_cast<size_t>(rid)];
        if (!r.in_flight) throw std::invalid_argument("commit: robot has no move in flight");
        commit_move(rid);
        if (!aborted_) spawn_if_door_empty();
    }

    std::vector<int> alive_robots() const {
        std::vector<int> out;
        for (int i = 0; i < num_robots(); ++i)
            if (robots_[static_cast<size_t>(i)].mem.state != RobotState::Finished &&
                !robots_[static_cast<size_t>(i)].in_flight)
                out.push_back(i);
        return out;
    }

    long long rounds() const { return metrics_.rounds; }

    void record_violation(const std::string& monitor, const std::string& detail) {
        metrics_.violations.push_back({monitor, event_num_, detail});
    }

  private:
    StepOutput run_step(const Snapshot& snap, const RobotMemory& mem) {
        if (step_override_) return step_override_(snap, mem, g_->delta, k_);
        switch (proto_) {
            case Protocol::Pack:
            case Protocol::PackAbp: return pack_step(snap, mem, g_->delta);
            case Protocol::Block: return block_step(snap, mem, g_->delta);
            case Protocol::Priority: return priority_step(snap, mem, g_->delta, k_);
        }
        throw std::logic_error("run_step: bad protocol");
    }

    const std::vector<int>& frame_of(int vertex, std::optional<int> entry) {
        int64_t key = static_cast<int64_t>(vertex) * (g_->n() + 1) + (entry ? *entry + 1 : 0);
        auto it = frame_cache_.find(key);
        if (it != frame_cache_.end()) return it->second;
        return frame_cache_.emplace(key, linear_order(*g_, vertex, entry)).first->second;
    }

    void make_snapshot(int rid, Snapshot& snap, std::vector<int>& frame) {
        const Robot& r = robots_[static_cast<size_t>(rid)];
        frame = frame_of(r.vertex, r.entry_vertex);
        snap.radius = protocol_radius(proto_);
        snap.own_color = r.shown;
        snap.has_entry = r.entry_vertex.has_value();
        snap.entry_occupied = false;
        snap.entry_color = Color::off();
        if (snap.has_entry) {
            int occ = occupant_[static_cast<size_t>(*r.entry_vertex)];
            if (occ >= 0) {
                snap.entry_occupied = true;
                snap.entry_color = robots_[static_cast<size_t>(occ)].shown;
            }
        }
        snap.slots.assign(frame.size(), Snapshot::Slot{});
        for (size_t i = 0; i < frame.size(); ++i) {
            auto& slot = snap.slots[i];
            int u = frame[i];
            int occ = occupant_[static_cast<size_t>(u)];
            slot.occupied = occ >= 0;
            slot.color = occ >= 0 ? robots_[static_cast<size_t>(occ)].shown : Color::off();
            slot.is_door = g_->is_door(u);
            if (snap.radius == 2) {
                const auto& nb = g_->adj[static_cast<size_t>(u)];
                slot.around.assign(nb.size(), Snapshot::Around{});
                for (size_t j = 0; j < nb.size(); ++j) {
                    int w = nb[j];
                    auto& a = slot.around[j];
                    a.is_back = (w == r.vertex);
                    int o2 = occupant_[static_cast<size_t>(w)];
                    a.occupied = o2 >= 0;
                    a.color = o2 >= 0 ? robots_[static_cast<size_t>(o2)].shown : Color::off();
                }
            }
        }
    }

    void log_event(int rid, TraceEvent::Phase phase, int vertex, int code, int target = -1) {
        ++event_num_;
        if (limits_.record_trace) trace_.push_back({event_num_, rid, phase, vertex, code, target});
    }

    // The requirement set freezes at the first look after the previous
    // close, so robots spawned between rounds join the next requirement.
    void note_look_for_round(int rid) {
        if (!round_open_) {
            round_need_.clear();
            round_seen_.clear();
            for (int i = 0; i < num_robots(); ++i)
                if (robots_[static_cast<size_t>(i)].mem.state != RobotState::Finished)
                    round_need_.insert(i);
            round_missing_ = round_need_.size();
            round_open_ = true;
        }
        if (round_need_.count(rid) && round_seen_.insert(rid).second) --round_missing_;
        close_round_if_done();
    }

    void note_finish_for_round(int rid) {
        if (!round_open_) return;
        if (round_need_.count(rid)) {
            if (!round_seen_.count(rid)) --round_missing_;
            round_need_.erase(rid);
            round_seen_.erase(rid);
        }
        close_round_if_done();
    }

    void close_round_if_done() {
        if (round_open_ && round_missing_ == 0) {
            ++metrics_.rounds;
            round_open_ = false;
            check_round_cap();
        }
    }

    void check_round_cap() {
        long long cap = static_cast<long long>(limits_.cap_mult * pack_round_bound(g_->n())) + 1;
        if (metrics_.rounds > cap) {
            record_violation("round-cap", "rounds " + std::to_string(metrics_.rounds) +
                                              " exceed cap " + std::to_string(cap));
            aborted_ = true;
            cap_exceeded_ = true;
        }
    }

    void commit_look(int rid, const StepOutput& out, int target_vertex) {
        Robot& r = robots_[static_cast<size_t>(rid)];
        ++metrics_.activations;
        const RobotState before = r.mem.state;
        if (before == RobotState::Follower && out.memory.state == RobotState::Leader)
            ++metrics_.leadership_handovers;
        if (r.mem.target && out.memory.target && *r.mem.target != *out.memory.target)
            ++metrics_.target_changes;
        if (before != RobotState::Leader && out.memory.state == RobotState::Leader) ++leader_count_;
        if (before == RobotState::Leader && out.memory.state == RobotState::Finished) --leader_count_;
        r.mem = out.memory;
        r.shown = out.color;
        metrics_.palette_usage.insert(color_code(out.color, g_->delta));
        log_event(rid, TraceEvent::Phase::Look, r.vertex, color_code(out.color, g_->delta), target_vertex);
        note_look_for_round(rid);
        if (out.memory.state == RobotState::Finished && before != RobotState::Finished) {
            ++finished_count_;
            log_event(rid, TraceEvent::Phase::Finish, r.vertex, color_code(out.color, g_->delta));
            note_finish_for_round(rid);
        }
        check_single_leader();
    }

    void check_single_leader() {
        int allowed = std::max(1, k_);
        if (leader_count_ > allowed)
            record_violation("single-leader", std::to_string(leader_count_) + " concurrent leaders");
    }

    void commit_move(int rid) {
        Robot& r = robots_[static_cast<size_t>(rid)];
        int tv = r.pending_target;
        r.in_flight = false;
        r.pending_target = -1;
        if (tv < 0) throw std::logic_error("commit_move: no target");
        if (r.mem.state == RobotState::Finished)
            record_violation("finished-immobile", "robot " + std::to_string(rid) + " moved after finishing");
        if (occupant_[static_cast<size_t>(tv)] >= 0) {
            record_violation("collision", "robots " + std::to_string(rid) + " and " +
                                              std::to_string(occupant_[static_cast<size_t>(tv)]) +
                                              " at vertex " + std::to_string(tv));
            aborted_ = true;
            return;
        }
        if (r.mem.state == RobotState::Leader && visited_[static_cast<size_t>(tv)])
            record_violation("leader-unvisited", "leader " + std::to_string(rid) +
                                                     " entered visited vertex " + std::to_string(tv));
        occupant_[static_cast<size_t>(r.vertex)] = -1;
        r.entry_vertex = r.vertex;
        r.vertex = tv;
        occupant_[static_cast<size_t>(tv)] = rid;
        visited_[static_cast<size_t>(tv)] = true;
        r.mem.entry = static_cast<uint8_t>(g_->degree(tv) - 1);
        ++r.moves;
        ++metrics_.moves;
        if (proto_ == Protocol::PackAbp) {
            r.inbox.clear();
            abp_[static_cast<size_t>(rid)].in.reset();
        }
        log_event(rid, TraceEvent::Phase::Commit, tv, shown_code(rid));
    }

    int shown_code(int rid) const {
        const Robot& r = robots_[static_cast<size_t>(rid)];
        return proto_ == Protocol::PackAbp ? transport_code(r.shown_transport)
                                           : color_code(r.shown, g_->delta);
    }

    void spawn_if_door_empty() {
        for (size_t i = 0; i < g_->doors.size(); ++i) {
            int d = g_->doors[i];
            if (occupant_[static_cast<size_t>(d)] < 0 && spawned_ < g_->n()) {
                Robot r;
                r.vertex = d;
                r.door_rank = static_cast<int>(i) + 1;
                r.mem.door_id = static_cast<uint8_t>(i + 1);
                int rid = num_robots();
                robots_.push_back(std::move(r));
                if (proto_ == Protocol::PackAbp) abp_.emplace_back();
                occupant_[static_cast<size_t>(d)] = rid;
                visited_[static_cast<size_t>(d)] = true;
                ++spawned_;
                log_event(rid, TraceEvent::Phase::Spawn, d, 0);
            }
        }
    }

    // --- ABP runner ------------------------------------------------------
    // Each activation performs one transport action, or one wrapped
    // protocol step when the transport is quiescent. Details in
    // docs/protocol-notes.md.

    bool fsync_cycle_abp(const std::vector<int>& alive) {
        std::vector<TransportColor> shown_before(robots_.size());
        for (size_t i = 0; i < robots_.size(); ++i) shown_before[i] = robots_[i].shown_transport;
        std::vector<int> movers;
        for (int rid : alive) {
            if (abp_one_action(rid, &shown_before)) movers.push_back(rid);
        }
        for (int rid : movers)
            if (!aborted_) commit_move(rid);
        if (!aborted_) spawn_if_door_empty();
        return !aborted_;
    }

    void abp_activate(int rid, bool split) {
        if (split) throw std::invalid_argument("pack-abp does not support split phases");
        if (abp_one_action(rid, nullptr)) {
            commit_move(rid);
            if (!aborted_) spawn_if_door_empty();
        }
    }

    TransportColor observed_transport(int vertex, const std::vector<TransportColor>* frozen) const {
        int occ = occupant_[static_cast<size_t>(vertex)];
        if (occ < 0) return TransportColor::idle();
        return frozen ? (*frozen)[static_cast<size_t>(occ)]
                      : robots_[static_cast<size_t>(occ)].shown_transport;
    }

    // Returns true when a move must commit (the caller handles batching).
    bool abp_one_action(int rid, const std::vector<TransportColor>* frozen) {
        Robot& r = robots_[static_cast<size_t>(rid)];
        AbpRobot& a = abp_[static_cast<size_t>(rid)];
        ++metrics_.activations;
        auto look = [&](int pending_commit_vertex = -1) {
            metrics_.palette_usage.insert(transport_code(r.shown_transport));
            log_event(rid, TraceEvent::Phase::Look, r.vertex, transport_code(r.shown_transport),
                      pending_commit_vertex);
            note_look_for_round(rid);
        };

        // 1. Active reception: consume the designated sender's light.
        if (a.in) {
            int occ = occupant_[static_cast<size_t>(a.in->sender_vertex)];
            if (occ != a.in->sender_robot) {
                a.in.reset();
                r.shown_transport = TransportColor::idle();
                look();
                return false;
            }
            TransportColor pc = frozen ? (*frozen)[static_cast<size_t>(occ)]
                                       : robots_[static_cast<size_t>(occ)].shown_transport;
            if (pc.kind == TransportColor::Kind::Send) {
                if (!a.in->draining && pc.seq == a.in->expect) {
                    a.in->bits.push_back(pc.bit);
                    a.in->expect ^= 1;
                    a.in->last_ack = pc.seq;
                    if (static_cast<int>(a.in->bits.size()) >= payload_width(g_->delta)) {
                        Color c = decode_color(a.in->bits, g_->delta, k_);
                        r.inbox[a.in->sender_vertex] = {a.in->sender_robot, c};
                        a.in->draining = true;
                    }
                } else {
                    a.in->last_ack = pc.seq;  // duplicate or stale: re-acknowledge
                }
                r.shown_transport = TransportColor::ack(a.in->last_ack);
            } else if (a.in->draining) {
                a.in.reset();
                r.shown_transport = TransportColor::idle();
            }
            look();
            return false;
        }

        // 2. Active send: advance on the reader's acknowledgement.
        if (a.out) {
            int occ = occupant_[static_cast<size_t>(a.out->reader_vertex)];
            if (occ != a.out->reader_robot) {
                // Reader changed underneath: restart the transfer for the
                // new occupant (or keep sending into the vacancy).
                a.out->cursor = 0;
                a.out->seq = 0;
                a.out->reader_robot = occ;
            }
            TransportColor pc = observed_transport(a.out->reader_vertex, frozen);
            if (pc.kind == TransportColor::Kind::Ack && pc.seq == a.out->seq) {
                ++a.out->cursor;
                a.out->seq ^= 1;
                if (a.out->cursor >= a.out->bits.size()) {
                    a.out.reset();
                    r.shown_transport = TransportColor::idle();  // session boundary
                    look();
                    return false;
                }
            }
            r.shown_transport = TransportColor::send(a.out->bits[a.out->cursor], a.out->seq);
            look();
            return false;
        }

        // 3. Become the designated reader of an incoming transfer.
        for (int u : g_->adj[static_cast<size_t>(r.vertex)]) {
            int occ = occupant_[static_cast<size_t>(u)];
            if (occ < 0) continue;
            const AbpRobot& peer = abp_[static_cast<size_t>(occ)];
            if (!peer.out || peer.out->reader_vertex != r.vertex) continue;
            TransportColor pc = frozen ? (*frozen)[static_cast<size_t>(occ)]
                                       : robots_[static_cast<size_t>(occ)].shown_transport;
            if (pc.kind != TransportColor::Kind::Send) continue;
            AbpRobot::Incoming in;
            in.sender_vertex = u;
            in.sender_robot = occ;
            if (pc.seq == 0) {
                in.bits.push_back(pc.bit);
                in.expect = 1;
                in.last_ack = 0;
                if (static_cast<int>(in.bits.size()) >= payload_width(g_->delta)) {
                    Color c = decode_color(in.bits, g_->delta, k_);
                    r.inbox[u] = {occ, c};
                    in.draining = true;
                }
                r.shown_transport = TransportColor::ack(0);
            } else {
                in.expect = 0;
                in.last_ack = pc.seq;
                r.shown_transport = TransportColor::ack(pc.seq);
            }
            a.in = in;
            look();
            return false;
        }

        // 4. Start the next queued transfer once the reader side is quiet.
        if (!a.queue.empty()) {
            const AbpRobot::Pending& p = a.queue.front();
            int rv = p.reader_vertex;
            int occ = occupant_[static_cast<size_t>(rv)];
            TransportColor pc = observed_transport(rv, frozen);
            if (occ < 0 || pc.kind == TransportColor::Kind::Idle) {
                AbpRobot::Outgoing o;
                o.bits = encode_color(p.color, g_->delta, k_);
                o.reader_vertex = rv;
                o.reader_robot = occ;
                a.out = o;
                a.queue.pop_front();
                r.shown_transport = TransportColor::send(a.out->bits[0], 0);
            }
            look();
            return false;
        }

        // 5. Held move: all writes delivered, the move may commit.
        if (a.held_move) {
            r.pending_target = a.held_move_vertex;
            a.held_move.reset();
            a.held_move_vertex = -1;
            r.shown_transport = TransportColor::idle();
            look(r.pending_target);
            return true;
        }

        // 6. Transport quiescent: run the wrapped protocol step on the
        //    delivered view of the neighborhood.
        Snapshot snap;
        std::vector<int> frame;
        make_logical_snapshot(rid, snap, frame);
        StepOutput out = run_step(snap, a.inner);
        const RobotState before = a.inner.state;
        if (before == RobotState::Follower && out.memory.state == RobotState::Leader)
            ++metrics_.leadership_handovers;
        if (a.inner.target && out.memory.target && *a.inner.target != *out.memory.target)
            ++metrics_.target_changes;
        if (before != RobotState::Leader && out.memory.state == RobotState::Leader) ++leader_count_;
        if (before == RobotState::Leader && out.memory.state == RobotState::Finished) --leader_count_;
        a.inner = out.memory;
        r.mem = out.memory;  // mirrored so monitors and reports see one truth
        if (out.color != a.latched) {
            a.latched = out.color;
            std::optional<int> reader;
            if (out.color.is_dir() || out.color == Color::mov()) {
                if (r.entry_vertex) reader = *r.entry_vertex;  // successor side
            } else if (out.color.is_conf_family()) {
                if (out.memory.target && *out.memory.target < frame.size())
                    reader = frame[*out.memory.target];  // predecessor side
            }
            if (reader) {
                if (a.queue.size() >= kAbpQueueLimit)
                    throw std::logic_error("abp: transfer queue overflow (protocol bug)");
                a.queue.push_back({out.color, *reader});
            }
        }
        bool move_now = false;
        if (out.move) {
            a.held_move = out.move;
            a.held_move_vertex = frame[*out.move];
            if (a.queue.empty() && !a.out) {
                // Nothing to deliver first (door start): commit at once.
                r.pending_target = a.held_move_vertex;
                a.held_move.reset();
                a.held_move_vertex = -1;
                move_now = true;
            }
        }
        look(move_now ? r.pending_target : -1);
        if (out.memory.state == RobotState::Finished && before != RobotState::Finished) {
            ++finished_count_;
            log_event(rid, TraceEvent::Phase::Finish, r.vertex, transport_code(r.shown_transport));
            note_finish_for_round(rid);
        }
        check_single_leader();
        return move_now;
    }

    // The wrapped protocol sees real occupancy but only delivered colors.
    void make_logical_snapshot(int rid, Snapshot& snap, std::vector<int>& frame) {
        const Robot& r = robots_[static_cast<size_t>(rid)];
        frame = frame_of(r.vertex, r.entry_vertex);
        snap.radius = 1;
        snap.own_color = abp_[static_cast<size_t>(rid)].latched;
        snap.has_entry = r.entry_vertex.has_value();
        snap.entry_occupied = false;
        snap.entry_color = Color::off();
        auto delivered = [&](int vertex, int occ) -> Color {
            auto it = r.inbox.find(vertex);
            if (it != r.inbox.end() && it->second.first == occ) return it->second.second;
            return Color::off();
        };
        if (snap.has_entry) {
            int occ = occupant_[static_cast<size_t>(*r.entry_vertex)];
            if (occ >= 0) {
                snap.entry_occupied = true;
                snap.entry_color = delivered(*r.entry_vertex, occ);
            }
        }
        snap.slots.assign(frame.size(), Snapshot::Slot{});
        for (size_t i = 0; i < frame.size(); ++i) {
            int u = frame[i];
            int occ = occupant_[static_cast<size_t>(u)];
            snap.slots[i].occupied = occ >= 0;
            snap.slots[i].color = occ >= 0 ? delivered(u, occ) : Color::off();
            snap.slots[i].is_door = g_->is_door(u);
        }
    }

    const Graph* g_;
    Protocol proto_;
    RunLimits limits_;
    int k_ = 1;
    std::vector<Robot> robots_;
    std::vector<AbpRobot> abp_;
    std::vector<int> occupant_;
    std::vector<bool> visited_;
    int spawned_ = 0;
    int finished_count_ = 0;
    int leader_count_ = 0;
    bool aborted_ = false;
    bool cap_exceeded_ = false;
    Metrics metrics_;
    std::vector<TraceEvent> trace_;
    long long event_num_ = 0;
    std::set<int> round_need_;
    std::set<int> round_seen_;
    bool round_open_ = false;
    size_t round_missing_ = 0;
    std::unordered_map<int64_t, std::vector<int>> frame_cache_;
    StepFn step_override_;

    friend RunResult run_simulation(Simulation& sim, const PolicyConfig& policy);

  public:
    bool cap_exceeded() const { return cap_exceeded_; }
};

namespace detail {

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline size_t bounded(std::mt19937_64& rng, size_t n) { return static_cast<size_t>(rng() % n); }

}  // namespace detail

inline RunResult run_simulation(Simulation& sim, const PolicyConfig& policy) {
    using Kind = PolicyConfig::Kind;
    const bool split = policy.phase == PolicyConfig::Phase::Split;
    std::mt19937_64 rng(policy.seed);

    if (policy.kind == Kind::Fsync) {
        while (!sim.all_finished() && !sim.stalled() && !sim.aborted()) {
            if (!sim.fsync_cycle()) break;
        }
    } else if (policy.kind == Kind::Trace) {
        for (const auto& e : policy.replay) {
            if (sim.aborted()) break;
            if (e.phase == TraceEvent::Phase::Look) {
                if (e.robot >= sim.num_robots())
                    throw std::runtime_error("trace replay: robot not spawned yet");
                const auto& r = sim.robot(e.robot);
                if (r.mem.state == RobotState::Finished || r.in_flight)
                    throw std::runtime_error("trace replay: robot not activatable");
                sim.activate(e.robot, true);
            } else if (e.phase == TraceEvent::Phase::Commit) {
                if (sim.robot(e.robot).in_flight) sim.commit_pending_move(e.robot);
            }
        }
    } else {
        while (!sim.all_finished() && !sim.stalled() && !sim.aborted()) {
            std::vector<int> alive = sim.alive_robots();
            if (alive.empty()) break;
            std::vector<int> order = alive;
            if (policy.kind == Kind::RandomAsync) {
                for (size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[detail::bounded(rng, i)]);
                int extra = policy.max_stutter > 0
                                ? static_cast<int>(detail::bounded(rng, static_cast<size_t>(policy.max_stutter) + 1))
                                : 0;
                for (int s = 0; s < extra; ++s) {
                    int victim = alive[detail::bounded(rng, alive.size())];
                    order.insert(order.begin() + static_cast<long>(detail::bounded(rng, order.size() + 1)), victim);
                }
            }
            std::vector<int> pending;
            for (int rid : order) {
                if (sim.aborted()) break;
                const auto& r = sim.robot(rid);
                if (r.mem.state == RobotState::Finished) continue;  // finished by a stutter visit
                if (r.in_flight) continue;                          // stutter hit a mover
                sim.activate(rid, split);
                if (sim.robot(rid).in_flight) pending.push_back(rid);
                // Split mode: randomly flush some committed moves mid-round.
                while (split && !pending.empty() && (rng() & 1)) {
                    size_t pick = detail::bounded(rng, pending.size());
                    int mover = pending[pick];
                    pending.erase(pending.begin() + static_cast<long>(pick));
                    if (!sim.aborted()) sim.commit_pending_move(mover);
                }
            }
            while (!pending.empty() && !sim.aborted()) {
                size_t pick = detail::bounded(rng, pending.size());
                int mover = pending[pick];
                pending.erase(pending.begin() + static_cast<long>(pick));
                sim.commit_pending_move(mover);
            }
        }
    }

    RunResult res;
    res.all_finished = sim.all_finished();
    res.cap_exceeded = sim.cap_exceeded();
    res.aborted = sim.aborted();
    res.filled = sim.check_filled();
    if (res.all_finished && !res.filled) sim.record_violation("filled", "termination left vertices unoccupied");
    if (!res.all_finished && !res.aborted)
        sim.record_violation("filled", "run stalled before covering the graph");
    if (res.all_finished) {
        long long bound = 0;
        switch (sim.protocol()) {
            case Protocol::Pack: bound = pack_round_bound(sim.graph().n()); break;
            case Protocol::Block:
            case Protocol::Priority: bound = block_round_bound(sim.graph().n()); break;
            case Protocol::PackAbp: bound = 0; break;
        }
        if (bound > 0 && sim.rounds() > bound)
            sim.record_violation("round-bound", "rounds " + std::to_string(sim.rounds()) +
                                                    " exceed bound " + std::to_string(bound));
    }
    res.metrics = sim.metrics();
    res.trace = sim.trace();
    res.final_position.resize(static_cast<size_t>(sim.num_robots()));
    res.final_state.resize(static_cast<size_t>(sim.num_robots()));
    res.robot_moves.resize(static_cast<size_t>(sim.num_robots()));
    for (int i = 0; i < sim.num_robots(); ++i) {
        res.final_position[static_cast<size_t>(i)] = sim.robot(i).vertex;
        res.final_state[static_cast<size_t>(i)] = sim.robot(i).mem.state;
        res.robot_moves[static_cast<size_t>(i)] = sim.robot(i).moves;
    }
    return res;
}

inline RunResult run(const Graph& g, Protocol proto, const PolicyConfig& policy,
                     const RunLimits& limits = {}) {
    Simulation sim(g, proto, limits);
    return run_simulation(sim, policy);
}

inline void write_run_report(const RunResult& r, int delta, int k, std::ostream& os) {
    os << "rounds: " << r.metrics.rounds << "\n";
    os << "activations: " << r.metrics.activations << "\n";
    os << "moves: " << r.metrics.moves << "\n";
    os << "leadership_handovers: " << r.metrics.leadership_handovers << "\n";
    os << "target_changes: " << r.metrics.target_changes << "\n";
    os << "palette_usage:";
    for (int c : r.metrics.palette_usage) os << " " << c;
    os << "\n";
    os << "palette_limit: " << (delta + 4 + (k >= 2 ? k : 0)) << "\n";
    os << "peak_memory_bits: " << r.metrics.peak_memory_bits << "\n";
    os << "filled: " << (r.filled ? "yes" : "no") << "\n";
    os << "violations: " << r.metrics.violations.size() << "\n";
    for (const auto& v : r.metrics.violations)
        os << "violation: " << v.monitor << " at event " << v.event << " (" << v.detail << ")\n";
}

}  // namespace graphfill
