// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/power.hpp"

#include <algorithm>

namespace spacehsm {

uint32_t transceiver_avg_mw(const PowerConfig& config) {
    uint64_t weighted = static_cast<uint64_t>(config.tx_duty_permille) * config.tx_mw +
                        static_cast<uint64_t>(1000 - config.tx_duty_permille) * config.rx_mw;
    return static_cast<uint32_t>(weighted / 1000);
}

uint32_t average_consumption_mw(const PowerConfig& config) {
    return config.obc_mw + transceiver_avg_mw(config) + config.recharge_mw;
}

uint32_t night_consumption_mw(const PowerConfig& config) {
    return config.obc_mw + transceiver_avg_mw(config);
}

bool daylight_at(const PowerConfig& config, uint64_t t_us) {
    uint64_t period_us = static_cast<uint64_t>(config.orbit_period_s()) * 1'000'000;
    uint64_t daylight_us = static_cast<uint64_t>(config.daylight_s) * 1'000'000;
    return (t_us % period_us) < daylight_us;
}

BatteryState step(BatteryState state, const PowerConfig& config, uint32_t dt_s,
                  bool daylight) {
    if (daylight) {
        uint64_t gained = static_cast<uint64_t>(config.recharge_mw) * dt_s;
        state.charge_mws = std::min(config.battery_mws, state.charge_mws + gained);
    } else {
        uint64_t drawn = static_cast<uint64_t>(night_consumption_mw(config)) * dt_s;
        if (drawn > state.charge_mws) {
            throw BrownoutError("battery depleted during eclipse");
        }
        state.charge_mws -= drawn;
        state.min_charge_mws = std::min(state.min_charge_mws, state.charge_mws);
    }
    return state;
}

double dod_percent(const PowerConfig& config, const BatteryState& state) {
    if (config.battery_mws == 0) return 0.0;
    uint64_t discharged = config.battery_mws - state.min_charge_mws;
    return 100.0 * static_cast<double>(discharged) /
           static_cast<double>(config.battery_mws);
}

} // namespace spacehsm
