// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SPACEHSM_POWER_HPP
#define SPACEHSM_POWER_HPP

/// \file
/// Day/eclipse power budget and battery model.
///
/// All bookkeeping is exact integer arithmetic: power in milliwatts, energy
/// in milliwatt-seconds (1 Wh = 3,600,000 mW·s). With the default budget the
/// numbers work out exactly: the transceiver averages 650 mW at a 30% duty
/// cycle, total daylight consumption is 1700 mW, a 2700 s eclipse draws
/// 2,295,000 mW·s (0.6375 Wh) from the battery, and the 850 mW daylight
/// recharge restores exactly that much over the following 2700 s of sun.
///
/// The orbit is a square wave: daylight for daylight_s from each orbit
/// start, then eclipse. Recharge is a daylight-only line item; eclipse draw
/// is the OBC plus the duty-averaged transceiver.

#include <cstdint>
#include <stdexcept>

namespace spacehsm {

constexpr uint64_t kMilliwattSecondsPerWh = 3'600'000;

struct PowerConfig {
    uint32_t solar_input_mw = 3820;
    uint32_t obc_mw = 200;
    uint32_t tx_mw = 1700;
    uint32_t rx_mw = 200;
    uint32_t tx_duty_permille = 300;
    uint32_t recharge_mw = 850;
    uint64_t battery_mws = 10 * kMilliwattSecondsPerWh;
    uint32_t daylight_s = 2700;
    uint32_t eclipse_s = 2700;

    uint32_t orbit_period_s() const { return daylight_s + eclipse_s; }

    bool operator==(const PowerConfig&) const = default;
};

struct BatteryState {
    uint64_t charge_mws = 0;
    uint64_t min_charge_mws = 0;

    static BatteryState full(const PowerConfig& config) {
        return BatteryState{config.battery_mws, config.battery_mws};
    }
};

/// Raised when a step would drive the battery below zero; the simulation
/// halts the satellite actor rather than modeling undervoltage behavior.
struct BrownoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Duty-cycle-averaged transceiver draw: duty * tx + (1 - duty) * rx.
uint32_t transceiver_avg_mw(const PowerConfig& config);

/// Average daylight consumption: OBC + transceiver average + recharge.
/// Defaults give exactly 1700 mW, 44.5% of the 3820 mW solar input.
uint32_t average_consumption_mw(const PowerConfig& config);

/// Eclipse battery draw: OBC + transceiver average (no recharge at night).
uint32_t night_consumption_mw(const PowerConfig& config);

/// True iff t (microseconds) falls in the daylight part of its orbit.
bool daylight_at(const PowerConfig& config, uint64_t t_us);

/// Advances the battery by dt_s in one phase. Daylight recharges (clamped
/// at capacity); eclipse draws night consumption and updates the running
/// minimum. Throws BrownoutError if the draw exceeds the remaining charge.
BatteryState step(BatteryState state, const PowerConfig& config, uint32_t dt_s,
                  bool daylight);

/// Depth of discharge in percent implied by a running minimum charge.
double dod_percent(const PowerConfig& config, const BatteryState& state);

} // namespace spacehsm

#endif
