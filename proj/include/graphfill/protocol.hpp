#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "graphfill/colors.hpp"
#include "graphfill/memory.hpp"
#include "graphfill/snapshot.hpp"

namespace graphfill {

// Outcome of one Look-Compute: the updated memory, the light to commit,
// and an optional move into a frame direction. A set move always comes
// with the in-transit color (MOV, or the mover's priority color in the
// multi-door protocol) and always names a slot seen unoccupied.
struct StepOutput {
    RobotMemory memory;
    Color color;
    std::optional<uint8_t> move;

    bool operator==(const StepOutput& o) const {
        return memory == o.memory && color == o.color && move == o.move;
    }
};

namespace detail {

inline void check_step_pre(const Snapshot& snap, const RobotMemory& mem, int radius) {
    if (mem.state == RobotState::Finished)
        throw std::invalid_argument("step: robot is already Finished");
    if (snap.radius != radius)
        throw std::invalid_argument("step: snapshot radius mismatch");
    // next_target is an index into the frame of the vertex ahead, so only
    // target can be validated against this snapshot.
    if (mem.target && *mem.target >= snap.slots.size() && !(snap.slots.empty() && mem.state == RobotState::None))
        throw std::invalid_argument("step: target outside snapshot frame");
}

inline std::optional<uint8_t> first_unoccupied(const Snapshot& snap) {
    for (size_t i = 0; i < snap.slots.size(); ++i)
        if (!snap.slots[i].occupied) return static_cast<uint8_t>(i);
    return std::nullopt;
}

inline bool successor_confirmed(const Snapshot& snap) {
    return snap.entry_occupied && snap.entry_color.is_conf_family();
}

inline void become_leader(RobotMemory& m) {
    m.state = RobotState::Leader;
    m.target.reset();
    m.next_target.reset();
    m.wait_mode = WaitMode::NotWaiting;
}

inline void finish(StepOutput& out, int delta) {
    out.memory.state = RobotState::Finished;
    out.memory.wait_mode = WaitMode::NotWaiting;
    out.memory.target.reset();
    out.memory.next_target.reset();
    out.color = Color::dir(delta);
}

}  // namespace detail

// True when some robot around the (unoccupied) slot shows a light other
// than OFF or the handover color DIR(delta). The edge back to the
// observer is skipped; a robot never blocks its own choices.
inline bool is_blocked(const Snapshot& snap, int direction, int delta) {
    if (snap.radius != 2) throw std::invalid_argument("is_blocked: needs a radius-2 snapshot");
    if (direction < 0 || static_cast<size_t>(direction) >= snap.slots.size())
        throw std::invalid_argument("is_blocked: direction out of range");
    for (const auto& a : snap.slots[static_cast<size_t>(direction)].around) {
        if (a.is_back || !a.occupied) continue;
        if (!a.color.is_off() && !a.color.is_handover(delta)) return true;
    }
    return false;
}

// Multi-door blocking: direction colors (except DIR(delta)), CONF, CONF2
// and MOV always block; a priority color blocks only when it outranks
// the observer (rank 1 is highest).
inline bool is_blocked_priority(const Snapshot& snap, int direction, int delta, int own_rank) {
    if (snap.radius != 2) throw std::invalid_argument("is_blocked_priority: needs a radius-2 snapshot");
    if (direction < 0 || static_cast<size_t>(direction) >= snap.slots.size())
        throw std::invalid_argument("is_blocked_priority: direction out of range");
    for (const auto& a : snap.slots[static_cast<size_t>(direction)].around) {
        if (a.is_back || !a.occupied) continue;
        switch (a.color.kind) {
            case Color::Kind::Off:
                break;
            case Color::Kind::Dir:
                if (a.color.index != delta) return true;
                break;
            case Color::Kind::Conf:
            case Color::Kind::Conf2:
            case Color::Kind::Mov:
                return true;
            case Color::Kind::Priority:
                if (a.color.index < own_rank) return true;
                break;
        }
    }
    return false;
}

// One Look-Compute of the 1-hop protocol. The whole decision procedure:
//
// None      at the door, the sole neighbor decides the role; an empty
//           neighbor makes the robot the leader and it moves at once
//           (no successor can exist yet), otherwise it follows.
// Follower  mirrors the handshake: capture the predecessor's shown
//           direction, confirm it once the own successor has confirmed,
//           move when the predecessor's vertex empties. A CONF2 issued
//           for a direction change is held until that move resolves.
// Leader    announces a target, waits for the successor's confirmation,
//           re-checks the target and either moves, announces a swap
//           (confirmed by CONF2), or hands leadership over with
//           DIR(delta) and stops.
inline StepOutput pack_step(const Snapshot& snap, const RobotMemory& mem, int delta) {
    detail::check_step_pre(snap, mem, 1);
    StepOutput out{mem, snap.own_color, std::nullopt};

    switch (mem.state) {
        case RobotState::None: {
            if (snap.slots.empty()) {
                // One-vertex graph: the spawn fills it.
                out.memory.state = RobotState::Leader;
                detail::finish(out, delta);
                return out;
            }
            if (!snap.slots[0].occupied) {
                out.memory.state = RobotState::Leader;
                out.color = Color::mov();
                out.move = 0;
            } else {
                out.memory.state = RobotState::Follower;
                out.memory.target = 0;
            }
            return out;
        }

        case RobotState::Follower: {
            if (snap.own_color == Color::mov()) {
                // Just arrived: show the direction of the stored target.
                out.color = Color::dir(*mem.target + 1);
                return out;
            }
            const bool pred_visible = mem.target && snap.slots[*mem.target].occupied;
            const Color pred = pred_visible ? snap.slots[*mem.target].color : Color::off();
            if (!mem.next_target) {
                if (pred_visible && pred.is_dir()) {
                    if (pred.is_handover(delta))
                        detail::become_leader(out.memory);
                    else
                        out.memory.next_target = static_cast<uint8_t>(pred.index - 1);
                }
                return out;
            }
            const bool target_free = mem.target && !snap.slots[*mem.target].occupied;
            const bool conf_gate = !snap.has_entry || detail::successor_confirmed(snap);
            if (!snap.own_color.is_conf_family()) {
                if (conf_gate) out.color = Color::conf();
            } else if (snap.own_color == Color::conf2() && target_free) {
                // The held CONF2 has served its purpose once the confirmed
                // mover left; drop back to CONF before following.
                if (conf_gate) out.color = Color::conf();
            } else if (snap.own_color == Color::conf() && target_free) {
                out.color = Color::mov();
                out.move = mem.target;
                out.memory.target = mem.next_target;
                out.memory.next_target.reset();
            } else if (pred_visible && pred.is_handover(delta)) {
                detail::become_leader(out.memory);
            } else if (pred_visible && pred.is_dir() && pred.index - 1 != *mem.next_target) {
                out.memory.next_target = static_cast<uint8_t>(pred.index - 1);
                out.color = Color::conf2();
            }
            return out;
        }

        case RobotState::Leader: {
            if (!mem.target) {
                auto pick = detail::first_unoccupied(snap);
                if (!pick) {
                    detail::finish(out, delta);
                } else {
                    out.memory.target = pick;
                    out.memory.wait_mode = WaitMode::WaitingConf;
                    out.color = Color::dir(*pick + 1);
                }
                return out;
            }
            if (mem.wait_mode == WaitMode::WaitingConf) {
                if (!snap.has_entry) {
                    // Still at the door: no successor exists, move freely.
                    auto pick = detail::first_unoccupied(snap);
                    if (!pick) {
                        detail::finish(out, delta);
                    } else {
                        out.color = Color::mov();
                        out.move = pick;
                        out.memory.target.reset();
                        out.memory.wait_mode = WaitMode::NotWaiting;
                    }
                } else if (detail::successor_confirmed(snap)) {
                    if (!snap.slots[*mem.target].occupied) {
                        out.color = Color::mov();
                        out.move = mem.target;
                        out.memory.target.reset();
                        out.memory.wait_mode = WaitMode::NotWaiting;
                    } else if (auto pick = detail::first_unoccupied(snap)) {
                        out.memory.target = pick;
                        out.memory.wait_mode = WaitMode::WaitingConf2;
                        out.color = Color::dir(*pick + 1);
                    } else {
                        detail::finish(out, delta);
                    }
                }
                return out;
            }
            // WaitingConf2: only the fresh confirmation releases the move.
            if (snap.entry_occupied && snap.entry_color == Color::conf2() &&
                !snap.slots[*mem.target].occupied) {
                out.color = Color::mov();
                out.move = mem.target;
                out.memory.target.reset();
                out.memory.wait_mode = WaitMode::NotWaiting;
            }
            return out;
        }

        case RobotState::Finished:
            break;
    }
    throw std::logic_error("pack_step: unreachable");
}

namespace detail {

// Shared body of the 2-hop protocols. priority_rank is 0 for the plain
// single-door variant; a positive rank enables the multi-door rules
// (priority blocking, priority colors on leader moves, the two-phase
// door claim).
inline StepOutput block_like_step(const Snapshot& snap, const RobotMemory& mem, int delta, int k,
                                  int priority_rank) {
    check_step_pre(snap, mem, 2);
    const bool multi = priority_rank > 0;
    if (multi && (mem.door_id < 1 || mem.door_id > k))
        throw std::invalid_argument("priority_step: door id out of range");
    StepOutput out{mem, snap.own_color, std::nullopt};

    auto blocked = [&](int dir) {
        return multi ? is_blocked_priority(snap, dir, delta, priority_rank)
                     : is_blocked(snap, dir, delta);
    };
    auto pick_free = [&]() -> std::optional<uint8_t> {
        for (size_t i = 0; i < snap.slots.size(); ++i)
            if (!snap.slots[i].occupied && !blocked(static_cast<int>(i)))
                return static_cast<uint8_t>(i);
        return std::nullopt;
    };
    const Color leader_transit = multi ? Color::priority(priority_rank) : Color::mov();

    switch (mem.state) {
        case RobotState::None: {
            if (snap.slots.empty()) {
                out.memory.state = RobotState::Leader;
                finish(out, delta);
                return out;
            }
            if (snap.slots[0].occupied) {
                out.memory.state = RobotState::Follower;
                out.memory.target = 0;
                return out;
            }
            if (multi) {
                // Claim the move first: opposing leaders activated at the
                // same instant must see this priority color before anyone
                // commits to the shared neighbor.
                out.memory.state = RobotState::Leader;
                out.memory.target = 0;
                out.memory.wait_mode = WaitMode::WaitingConf;
                out.color = Color::priority(priority_rank);
            } else {
                out.memory.state = RobotState::Leader;
                out.color = Color::mov();
                out.move = 0;
            }
            return out;
        }

        case RobotState::Follower: {
            if (snap.own_color == Color::mov()) {
                out.color = Color::dir(*mem.target + 1);
                return out;
            }
            const bool pred_visible = mem.target && snap.slots[*mem.target].occupied;
            const Color pred = pred_visible ? snap.slots[*mem.target].color : Color::off();
            auto take_leadership = [&]() {
                become_leader(out.memory);
                if (multi) out.color = Color::priority(priority_rank);
            };
            if (!mem.next_target) {
                if (pred_visible && pred.is_dir()) {
                    if (pred.is_handover(delta)) {
                        take_leadership();
                    } else {
                        out.memory.next_target = static_cast<uint8_t>(pred.index - 1);
                        out.color = Color::conf();
                    }
                }
                return out;
            }
            const bool target_free = mem.target && !snap.slots[*mem.target].occupied;
            if (snap.own_color.is_conf_family()) {
                if (target_free) {
                    // Announce the move; the lit direction blocks every
                    // unoccupied neighbor, the target included.
                    out.color = Color::dir(*mem.target + 1);
                } else if (pred_visible && pred.is_handover(delta)) {
                    take_leadership();
                } else if (pred_visible && pred.is_dir() && pred.index - 1 != *mem.next_target) {
                    out.memory.next_target = static_cast<uint8_t>(pred.index - 1);
                    out.color = Color::conf2();
                }
            } else {
                if ((!snap.has_entry || successor_confirmed(snap)) && target_free) {
                    out.color = Color::mov();
                    out.move = mem.target;
                    out.memory.target = mem.next_target;
                    out.memory.next_target.reset();
                } else if (pred_visible && pred.is_handover(delta)) {
                    take_leadership();
                }
            }
            return out;
        }

        case RobotState::Leader: {
            if (!mem.target) {
                auto pick = pick_free();
                if (!pick) {
                    finish(out, delta);
                } else {
                    out.memory.target = pick;
                    out.memory.wait_mode = WaitMode::WaitingConf;
                    out.color = Color::dir(*pick + 1);
                }
                return out;
            }
            if (mem.wait_mode == WaitMode::WaitingConf) {
                if (!snap.has_entry) {
                    auto pick = pick_free();
                    if (!pick) {
                        finish(out, delta);
                    } else {
                        out.color = leader_transit;
                        out.move = pick;
                        out.memory.target.reset();
                        out.memory.wait_mode = WaitMode::NotWaiting;
                    }
                } else if (successor_confirmed(snap)) {
                    if (snap.slots[*mem.target].occupied) {
                        auto pick = pick_free();
                        if (!pick) {
                            finish(out, delta);
                        } else {
                            out.memory.target = pick;
                            out.memory.wait_mode = WaitMode::WaitingConf2;
                            out.color = Color::dir(*pick + 1);
                        }
                    } else {
                        out.color = leader_transit;
                        out.move = mem.target;
                        out.memory.target.reset();
                        out.memory.wait_mode = WaitMode::NotWaiting;
                    }
                } else if (snap.entry_occupied) {
                    // Successor present but silent: keep the pick fresh.
                    auto pick = pick_free();
                    if (!pick) {
                        finish(out, delta);
                    } else {
                        out.memory.target = pick;
                        out.color = Color::dir(*pick + 1);
                    }
                }
                return out;
            }
            if (snap.entry_occupied && snap.entry_color == Color::conf2() &&
                !snap.slots[*mem.target].occupied) {
                out.color = leader_transit;
                out.move = mem.target;
                out.memory.target.reset();
                out.memory.wait_mode = WaitMode::NotWaiting;
            }
            return out;
        }

        case RobotState::Finished:
            break;
    }
    throw std::logic_error("block_like_step: unreachable");
}

}  // namespace detail

// The 2-hop single-door protocol: the leader avoids blocked vertices and
// followers block their surroundings by lighting direction colors.
inline StepOutput block_step(const Snapshot& snap, const RobotMemory& mem, int delta) {
    return detail::block_like_step(snap, mem, delta, 1, 0);
}

// The k-door extension. With k == 1 it decides exactly like block_step;
// with k >= 2 moving leaders show their door's priority color and ties
// between doors resolve by rank.
inline StepOutput priority_step(const Snapshot& snap, const RobotMemory& mem, int delta, int k) {
    if (k < 1) throw std::invalid_argument("priority_step: k must be >= 1");
    return detail::block_like_step(snap, mem, delta, k, k >= 2 ? mem.door_id : 0);
}

}  // namespace graphfill
