#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace difsim {

// Abstract energy prices. Defaults are illustrative configuration values,
// not measurements.
struct EnergyParams {
    double e_wake = 1.0;  // per sample-generation wakeup
    double e_tx = 50.0;   // per transmitted packet
    double e_rx = 20.0;   // per feedback reception
    double battery_capacity = std::numeric_limits<double>::infinity();

    void validate() const {
        if (e_wake < 0.0 || e_tx < 0.0 || e_rx < 0.0 || battery_capacity < 0.0)
            throw std::invalid_argument("energy: all parameters must be >= 0");
    }
};

// Per-node running account. The identity
//   consumed == wake*e_wake + tx*e_tx + rx*e_rx
// holds exactly at every tick because consumed is only ever advanced by the
// three charge calls below.
struct EnergyLedger {
    double consumed = 0.0;
    std::uint64_t wake_events = 0;
    std::uint64_t tx_events = 0;
    std::uint64_t rx_events = 0;

    void charge_wake(const EnergyParams& p) {
        consumed += p.e_wake;
        ++wake_events;
    }
    void charge_tx(const EnergyParams& p) {
        consumed += p.e_tx;
        ++tx_events;
    }
    void charge_rx(const EnergyParams& p) {
        consumed += p.e_rx;
        ++rx_events;
    }

    bool depleted(const EnergyParams& p) const { return consumed >= p.battery_capacity; }
};

}  // namespace difsim
