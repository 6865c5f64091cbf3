// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/link.hpp"

#include <algorithm>
#include <stdexcept>

namespace spacehsm {

namespace {

uint64_t period_us(const LinkConfig& c) {
    return static_cast<uint64_t>(c.orbit_period_s) * kMicrosPerSecond;
}

uint64_t pass_us(const LinkConfig& c) {
    return static_cast<uint64_t>(c.pass_duration_s) * kMicrosPerSecond;
}

/// Time since the start of the current orbit window schedule, in [0, period).
uint64_t phase_us(const LinkConfig& c, uint64_t t_us, uint64_t offset_us) {
    uint64_t period = period_us(c);
    return (t_us % period + period - offset_us % period) % period;
}

} // namespace

uint64_t airtime_us(size_t encoded_size, uint32_t bps) {
    if (bps == 0) throw std::invalid_argument("airtime_us: zero bit rate");
    uint64_t bits = static_cast<uint64_t>(encoded_size) * 8;
    return (bits * kMicrosPerSecond + bps - 1) / bps;
}

uint64_t payload_airtime_us(size_t payload_size, uint32_t bps) {
    size_t count = payload_size == 0
                       ? 1
                       : (payload_size + kMaxFrameData - 1) / kMaxFrameData;
    size_t last_data = payload_size - (count - 1) * kMaxFrameData;
    uint64_t total = (count - 1) * airtime_us(kAx25Overhead + kAx25MaxInfo, bps);
    total += airtime_us(kAx25Overhead + kMessageHeaderSize + last_data, bps);
    return total;
}

bool pass_visible(const LinkConfig& config, uint64_t t_us, uint64_t offset_us) {
    return phase_us(config, t_us, offset_us) < pass_us(config);
}

bool interval_visible(const LinkConfig& config, uint64_t start_us, uint64_t end_us,
                      uint64_t offset_us) {
    if (end_us < start_us) return false;
    uint64_t phase = phase_us(config, start_us, offset_us);
    if (phase >= pass_us(config)) return false;
    return end_us - start_us <= pass_us(config) - phase;
}

uint64_t next_pass_start(const LinkConfig& config, uint64_t t_us,
                         uint64_t offset_us) {
    uint64_t phase = phase_us(config, t_us, offset_us);
    if (phase < pass_us(config)) return t_us;
    return t_us + (period_us(config) - phase);
}

uint64_t pass_end(const LinkConfig& config, uint64_t t_us, uint64_t offset_us) {
    uint64_t phase = phase_us(config, t_us, offset_us);
    if (phase >= pass_us(config)) {
        throw std::invalid_argument("pass_end: time is not inside a pass");
    }
    return t_us - phase + pass_us(config);
}

uint64_t pass_index(const LinkConfig& config, uint64_t t_us, uint64_t offset_us) {
    uint64_t offset = offset_us % period_us(config);
    if (t_us < offset) return 0;
    return (t_us - offset) / period_us(config);
}

uint64_t visible_deadline(const LinkConfig& config,
                          const std::vector<uint64_t>& offsets_us,
                          uint64_t start_us, uint64_t grace_us) {
    if (offsets_us.empty()) return start_us + grace_us;
    uint64_t t = start_us;
    uint64_t remaining = grace_us;
    for (int guard = 0; guard < 1'000'000; ++guard) {
        // Furthest visibility end among windows containing t; overlapping
        // windows from different sites chain through repeated iterations.
        uint64_t window_end = 0;
        bool visible = false;
        uint64_t next_start = UINT64_MAX;
        for (uint64_t offset : offsets_us) {
            uint64_t phase = phase_us(config, t, offset);
            if (phase < pass_us(config)) {
                visible = true;
                window_end = std::max(window_end, t + (pass_us(config) - phase));
            } else {
                next_start = std::min(next_start, t + (period_us(config) - phase));
            }
        }
        if (visible) {
            uint64_t available = window_end - t;
            if (available >= remaining) return t + remaining;
            remaining -= available;
            t = window_end;
        } else {
            t = next_start;
        }
    }
    return t + remaining; // unreachable for sane configs
}

Transmitter::Transmitter(uint32_t bps, uint32_t duty_permille)
    : bps_(bps), duty_permille_(duty_permille == 0 ? 1 : duty_permille) {
    credit_cap_ = airtime_us(kAx25Overhead + kAx25MaxInfo, bps_) * 1000;
    credit_ = credit_cap_;
}

uint64_t Transmitter::credit_at(uint64_t t_us) const {
    uint64_t accrued = credit_ + duty_permille_ * (t_us - credit_time_us_);
    return std::min(credit_cap_, accrued);
}

uint64_t Transmitter::earliest_start(uint64_t ready_us,
                                     uint64_t frame_airtime_us) const {
    uint64_t t = std::max(ready_us, next_free_us_);
    if (duty_permille_ >= 1000) return t;
    uint64_t need = frame_airtime_us * 1000;
    uint64_t have = credit_at(t);
    if (have >= need) return t;
    return t + (need - have + duty_permille_ - 1) / duty_permille_;
}

uint64_t Transmitter::transmit(uint64_t start_us, uint64_t frame_airtime_us) {
    if (duty_permille_ < 1000) {
        uint64_t have = credit_at(start_us);
        uint64_t need = frame_airtime_us * 1000;
        credit_ = have >= need ? have - need : 0;
        credit_time_us_ = start_us;
    }
    next_free_us_ = start_us + frame_airtime_us;
    airtime_total_us_ += frame_airtime_us;
    return next_free_us_;
}

bool loss_draw(std::mt19937_64& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) {
        rng();
        return true;
    }
    // 53-bit threshold comparison keeps the draw deterministic across
    // platforms (no floating-point accumulation).
    auto threshold = static_cast<uint64_t>(p * 9007199254740992.0); // p * 2^53
    return (rng() >> 11) < threshold;
}

std::vector<TransmitOutcome> transmit(const LinkConfig& config,
                                      const std::vector<Ax25Frame>& frames,
                                      Direction direction, uint64_t start_us,
                                      std::mt19937_64& rng,
                                      uint64_t visibility_offset_us) {
    Transmitter tx(direction == Direction::Uplink ? config.uplink_bps
                                                  : config.downlink_bps,
                   direction == Direction::Downlink ? config.tx_duty_permille
                                                    : 1000);
    std::vector<TransmitOutcome> outcomes;
    outcomes.reserve(frames.size());
    for (const auto& frame : frames) {
        uint64_t air = airtime_us(frame.encoded_size(), tx.bps());
        uint64_t start = tx.earliest_start(start_us, air);
        uint64_t end = tx.transmit(start, air);

        TransmitOutcome outcome;
        outcome.frame = frame;
        outcome.start_us = start;
        outcome.end_us = end;
        if (!interval_visible(config, start, end, visibility_offset_us)) {
            outcome.delivered = false;
            outcome.reason = DropReason::OutsidePass;
        } else if (loss_draw(rng, config.loss_probability)) {
            outcome.delivered = false;
            outcome.reason = DropReason::Loss;
        } else {
            outcome.delivered = true;
        }
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

} // namespace spacehsm
