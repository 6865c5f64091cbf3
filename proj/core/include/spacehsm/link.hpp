// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_LINK_HPP
#define SPACEHSM_LINK_HPP

/// \file
/// Bandwidth-constrained satellite link model over the AX.25 framing.
///
/// Times are integer microseconds throughout; every quantity here is exact
/// integer arithmetic so runs replay bit-identically. Visibility is a square
/// wave: the satellite is reachable for pass_duration_s at the start of each
/// orbit_period_s, shifted per ground station by its pass offset. A frame is
/// delivered only if its entire serialization interval fits inside a
/// visibility window and it survives an independent per-frame loss draw.
///
/// The downlink transmitter is duty-cycle limited. Airtime credit refills at
/// tx_duty_permille/1000 seconds per second and is capped at one maximum
/// frame's airtime, so the transmitter can burst a single frame but over any
/// sliding window its active fraction stays within the duty cycle plus at
/// most one frame of slack.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "spacehsm/ax25.hpp"

namespace spacehsm {

constexpr uint64_t kMicrosPerSecond = 1'000'000;

struct LinkConfig {
    uint32_t uplink_bps = 1200;
    uint32_t downlink_bps = 2400;
    uint32_t tx_duty_permille = 300; // downlink duty cycle, 1000 = unlimited
    uint32_t pass_duration_s = 600;
    uint32_t orbit_period_s = 5400;
    double loss_probability = 0.0; // per delivered frame, per receiver
    uint32_t duty_window_s = 60;   // informational; see Transmitter

    bool operator==(const LinkConfig&) const = default;
};

/// Serialization time of `encoded_size` bytes at `bps`, rounded up.
uint64_t airtime_us(size_t encoded_size, uint32_t bps);

/// Total airtime of a payload fragmented over AX.25: per-frame overhead plus
/// the actual (variable) final frame length.
uint64_t payload_airtime_us(size_t payload_size, uint32_t bps);

/// True iff t falls inside the visibility window of a ground site whose
/// windows start at offset_us + k * orbit_period.
bool pass_visible(const LinkConfig& config, uint64_t t_us, uint64_t offset_us = 0);

/// True iff [start_us, end_us] lies inside one visibility window.
bool interval_visible(const LinkConfig& config, uint64_t start_us, uint64_t end_us,
                      uint64_t offset_us = 0);

/// Start of the first visibility window beginning at or after t
/// (t itself if already visible).
uint64_t next_pass_start(const LinkConfig& config, uint64_t t_us,
                         uint64_t offset_us = 0);

/// End of the visibility window containing t. Precondition: pass_visible(t).
uint64_t pass_end(const LinkConfig& config, uint64_t t_us, uint64_t offset_us = 0);

/// Orbit index of time t relative to a site's window schedule.
uint64_t pass_index(const LinkConfig& config, uint64_t t_us, uint64_t offset_us = 0);

/// Wall-clock deadline by which `grace_us` of cumulative *visible* time has
/// elapsed after start_us, over the union of the given site offsets. Clocks
/// that only advance during passes let in-flight checks tolerate the gap
/// between passes without tolerating suppression within one.
uint64_t visible_deadline(const LinkConfig& config,
                          const std::vector<uint64_t>& offsets_us,
                          uint64_t start_us, uint64_t grace_us);

/// One radio: serializes frames back to back and, when duty-limited,
/// paces them with an airtime credit bucket.
class Transmitter {
public:
    Transmitter() = default;
    Transmitter(uint32_t bps, uint32_t duty_permille);

    /// Earliest start at or after ready_us honoring serialization order and
    /// the duty budget for a frame of the given airtime.
    uint64_t earliest_start(uint64_t ready_us, uint64_t frame_airtime_us) const;

    /// Commits the transmission; start_us must honor earliest_start.
    /// Returns the end-of-serialization (arrival) time.
    uint64_t transmit(uint64_t start_us, uint64_t frame_airtime_us);

    uint32_t bps() const { return bps_; }
    uint64_t next_free_us() const { return next_free_us_; }
    uint64_t airtime_total_us() const { return airtime_total_us_; }

private:
    uint64_t credit_at(uint64_t t_us) const;

    uint32_t bps_ = 1200;
    uint32_t duty_permille_ = 1000;
    uint64_t credit_cap_ = 0;    // millimicroseconds of airtime
    uint64_t credit_ = 0;        // at credit_time_us_
    uint64_t credit_time_us_ = 0;
    uint64_t next_free_us_ = 0;
    uint64_t airtime_total_us_ = 0;
};

enum class Direction : uint8_t { Uplink = 1, Downlink = 2 };

enum class DropReason : uint8_t { None = 0, OutsidePass = 1, Loss = 2 };

struct TransmitOutcome {
    Ax25Frame frame;
    uint64_t start_us = 0;
    uint64_t end_us = 0; // arrival when delivered
    bool delivered = false;
    DropReason reason = DropReason::None;
};

/// Batch transmission of a frame sequence starting no earlier than start_us.
/// The transmitter stays busy for every frame (the radio does not know who
/// is listening); delivery requires the whole frame inside a visibility
/// window and surviving the loss draw.
std::vector<TransmitOutcome> transmit(const LinkConfig& config,
                                      const std::vector<Ax25Frame>& frames,
                                      Direction direction, uint64_t start_us,
                                      std::mt19937_64& rng,
                                      uint64_t visibility_offset_us = 0);

/// Deterministic Bernoulli: true with probability p, consuming one draw.
bool loss_draw(std::mt19937_64& rng, double p);

/// Adversary hook on the shared channel. Observe taps see every delivered
/// frame; inject taps enqueue adversary frames through the normal
/// transmitter; suppress taps may veto a delivery. Taps run synchronously in
/// registration order.
struct ChannelTap {
    enum class Mode : uint8_t { Observe = 0, Inject = 1, Suppress = 2 };
    Mode mode = Mode::Observe;
    std::string owner;
    /// For Observe: return value ignored. For Suppress: return true to drop.
    std::function<bool(const Ax25Frame& frame, uint64_t t_us, Direction dir)> on_frame;
};

} // namespace spacehsm

#endif
