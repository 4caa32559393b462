#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <vector>

namespace hetaccess::sic {

/// One replica as seen by the receiver in one slot. Replicas of the same
/// packet share `packet`; a broadband slot carries its own packet id.
struct SlotTransmission {
    int user = 0;
    int packet = 0;
    double gain_power = 0.0;  // |h|^2 P
    double sinr_threshold = 0.0;
};

struct FrameSignalLog {
    std::vector<std::vector<SlotTransmission>> slots;  // uplink slots of one frame
    double noise_power = 0.0;                          // of the sub-band
};

struct DecodeEvent {
    int packet = 0;
    int slot = 0;  // index into FrameSignalLog::slots
    bool operator==(const DecodeEvent&) const = default;
};

struct DecodeOutcome {
    std::vector<DecodeEvent> decoded;  // ordered by packet id
    std::vector<int> undecoded;        // ascending
    int iterations = 0;                // sweeps that decoded something

    /// Slot of first successful reception, or -1.
    int slot_of(int packet) const {
        auto it = std::lower_bound(decoded.begin(), decoded.end(), packet,
                                   [](const DecodeEvent& e, int p) { return e.packet < p; });
        return it != decoded.end() && it->packet == packet ? it->slot : -1;
    }
};

/// Capture with intra-slot SIC. Transmissions are tried strongest first; any
/// one that clears its threshold is decoded and cancelled and the pass
/// restarts from the strongest survivor. Weaker signals are still tried after
/// a stronger one fails since thresholds are per user. `slot` is left holding
/// the undecoded transmissions; the returned packets are in decode order.
inline std::vector<int> slot_capture_pass(std::vector<SlotTransmission>& slot, double noise) {
    std::vector<int> events;
    std::stable_sort(slot.begin(), slot.end(),
                     [](const SlotTransmission& a, const SlotTransmission& b) { return a.gain_power > b.gain_power; });
    double total = 0.0;
    for (const auto& t : slot) total += t.gain_power;
    bool progress = true;
    while (progress && !slot.empty()) {
        progress = false;
        for (auto it = slot.begin(); it != slot.end(); ++it) {
            const double interference = std::max(0.0, total - it->gain_power);
            if (it->gain_power >= it->sinr_threshold * (interference + noise)) {
                events.push_back(it->packet);
                total -= it->gain_power;
                slot.erase(it);
                progress = true;
                break;
            }
        }
        // re-sum to keep cancellation exact
        if (progress) {
            total = 0.0;
            for (const auto& t : slot) total += t.gain_power;
        }
    }
    return events;
}

/// Iterative frame decoder: capture passes over the slots in ascending order,
/// each decode cancelling the packet's replicas in every slot, repeated until
/// a full sweep decodes nothing new.
inline DecodeOutcome decode_frame(FrameSignalLog log) {
    std::map<int, int> first_slot;  // packet -> slot
    std::vector<int> all_packets;
    for (const auto& slot : log.slots)
        for (const auto& t : slot) all_packets.push_back(t.packet);
    std::sort(all_packets.begin(), all_packets.end());
    all_packets.erase(std::unique(all_packets.begin(), all_packets.end()), all_packets.end());

    DecodeOutcome out;
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t s = 0; s < log.slots.size(); ++s) {
            auto& slot = log.slots[s];
            if (slot.empty()) continue;
            const auto events = slot_capture_pass(slot, log.noise_power);
            for (int packet : events) {
                first_slot.emplace(packet, static_cast<int>(s));
                for (auto& other : log.slots) {
                    std::erase_if(other, [packet](const SlotTransmission& t) { return t.packet == packet; });
                }
                progress = true;
            }
        }
        if (progress) ++out.iterations;
    }

    out.decoded.reserve(first_slot.size());
    for (const auto& [packet, slot] : first_slot) out.decoded.push_back({packet, slot});
    for (int p : all_packets)
        if (!first_slot.contains(p)) out.undecoded.push_back(p);
    return out;
}

}  // namespace hetaccess::sic
