#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "graphfill/colors.hpp"
#include "graphfill/memory.hpp"

namespace graphfill {

// Transport palette: 7 values regardless of delta. SEND carries one
// payload bit and the alternating sequence number, ACK echoes the
// sequence number just accepted. IDLE doubles as lights-off.
// Trace codes: IDLE=0, SEND(b,s)=1+2s+b, ACK(s)=5+s.
struct TransportColor {
    enum class Kind : uint8_t { Idle, Send, Ack };
    Kind kind = Kind::Idle;
    uint8_t bit = 0;
    uint8_t seq = 0;

    bool operator==(const TransportColor& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::Send) return bit == o.bit && seq == o.seq;
        if (kind == Kind::Ack) return seq == o.seq;
        return true;
    }
    bool operator!=(const TransportColor& o) const { return !(*this == o); }

    static TransportColor idle() { return {Kind::Idle, 0, 0}; }
    static TransportColor send(int b, int s) {
        return {Kind::Send, static_cast<uint8_t>(b), static_cast<uint8_t>(s)};
    }
    static TransportColor ack(int s) { return {Kind::Ack, 0, static_cast<uint8_t>(s)}; }
};

inline int transport_code(const TransportColor& c) {
    switch (c.kind) {
        case TransportColor::Kind::Idle: return 0;
        case TransportColor::Kind::Send: return 1 + 2 * c.seq + c.bit;
        case TransportColor::Kind::Ack: return 5 + c.seq;
    }
    return 0;
}

inline int payload_width(int delta) { return ceil_log2(delta + 4); }

// MSB-first fixed-width encoding of a color's stable integer code.
inline std::vector<uint8_t> encode_color(const Color& c, int delta, int k) {
    const int code = color_code(c, delta);
    const int limit = delta + 4 + (k >= 2 ? k : 0);
    if (code >= limit) throw std::invalid_argument("encode_color: color outside palette");
    const int w = payload_width(delta);
    std::vector<uint8_t> bits(static_cast<size_t>(w));
    for (int i = 0; i < w; ++i) bits[static_cast<size_t>(i)] = (code >> (w - 1 - i)) & 1;
    return bits;
}

inline Color decode_color(const std::vector<uint8_t>& bits, int delta, int k) {
    const int w = payload_width(delta);
    if (static_cast<int>(bits.size()) != w) throw std::invalid_argument("decode_color: wrong width");
    int code = 0;
    for (uint8_t b : bits) code = (code << 1) | (b & 1);
    if (code >= delta + 4 + (k >= 2 ? k : 0))
        throw std::invalid_argument("decode_color: code out of range");
    return color_from_code(code, delta, k);
}

enum class SessionRole : uint8_t { Idle, SenderActive, ReceiverActive };

// One stop-and-wait transfer. The sender walks the payload showing
// SEND(bit, seq); the receiver accepts bits with alternating sequence
// numbers, re-acknowledging duplicates without storing them.
struct SessionState {
    SessionRole role = SessionRole::Idle;
    std::vector<uint8_t> payload;  // sender: bits to push; receiver: bits accepted
    size_t cursor = 0;             // sender: next bit index
    uint8_t seq = 0;               // sender: current sequence number
    uint8_t expect = 0;            // receiver: awaited sequence number
    int width = 0;                 // receiver: bits per transfer
    int peer_direction = -1;

    static SessionState sender(std::vector<uint8_t> bits, int peer_dir) {
        SessionState s;
        s.role = SessionRole::SenderActive;
        s.payload = std::move(bits);
        s.peer_direction = peer_dir;
        return s;
    }
    static SessionState receiver(int width, int peer_dir) {
        SessionState s;
        s.role = SessionRole::ReceiverActive;
        s.width = width;
        s.peer_direction = peer_dir;
        return s;
    }
};

// Advances the sender against the peer's currently shown color. Returns
// the light to show; the session completes (role Idle) once every bit
// is acknowledged. Unexpected peer colors are ignored.
inline TransportColor sender_step(SessionState& s, const TransportColor& observed) {
    if (s.role != SessionRole::SenderActive)
        throw std::invalid_argument("sender_step: session is not sending");
    if (observed.kind == TransportColor::Kind::Ack && observed.seq == s.seq) {
        ++s.cursor;
        s.seq ^= 1;
        if (s.cursor >= s.payload.size()) {
            s.role = SessionRole::Idle;
            return TransportColor::idle();
        }
    }
    return TransportColor::send(s.payload[s.cursor], s.seq);
}

// Advances the receiver. Returns the light to show plus the decoded
// color once the final bit lands.
inline std::pair<TransportColor, std::optional<Color>> receiver_step(SessionState& s,
                                                                     const TransportColor& observed,
                                                                     int delta, int k) {
    if (s.role != SessionRole::ReceiverActive)
        throw std::invalid_argument("receiver_step: session is not receiving");
    if (observed.kind != TransportColor::Kind::Send)
        return {TransportColor::ack(s.expect ^ 1), std::nullopt};
    if (observed.seq != s.expect)  // duplicate: re-acknowledge, do not store
        return {TransportColor::ack(observed.seq), std::nullopt};
    s.payload.push_back(observed.bit);
    s.expect ^= 1;
    TransportColor shown = TransportColor::ack(observed.seq);
    if (static_cast<int>(s.payload.size()) >= s.width) {
        Color c = decode_color(s.payload, delta, k);
        s.role = SessionRole::Idle;
        return {shown, c};
    }
    return {shown, std::nullopt};
}

// Per-robot transport machinery the engine drives around the wrapped
// 1-hop protocol. At most one transfer is live per robot; queued writes
// wait their turn and a decided move holds until the queue drains.
struct AbpRobot {
    RobotMemory inner;
    Color latched = Color::off();  // last logical color, never shown

    struct Outgoing {
        std::vector<uint8_t> bits;
        size_t cursor = 0;
        uint8_t seq = 0;
        int reader_vertex = -1;
        int reader_robot = -1;  // -1 while sending into a vacant vertex
    };
    struct Incoming {
        int sender_vertex = -1;
        int sender_robot = -1;
        uint8_t expect = 0;
        std::vector<uint8_t> bits;
        uint8_t last_ack = 0;
        bool draining = false;  // payload complete, holding the final ack
    };
    struct Pending {
        Color color;
        int reader_vertex = -1;  // resolved when the write happens
    };

    std::optional<Outgoing> out;
    std::optional<Incoming> in;
    std::deque<Pending> queue;
    std::optional<uint8_t> held_move;  // frame direction decided by the inner step
    int held_move_vertex = -1;
    TransportColor shown = TransportColor::idle();
};

constexpr size_t kAbpQueueLimit = 4;

}  // namespace graphfill
