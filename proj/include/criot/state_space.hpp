#pragma once

#include <cstddef>
#include <string>

#include "criot/params.hpp"

namespace criot {

/// Slot-start state: packets in the buffer, primary phase, committed action.
struct State {
    int queue = 0;
    Phase phase = Phase::Off;
    Action action = Action::Idle;

    friend bool operator==(const State&, const State&) = default;
};

inline bool is_valid(const State& s, int capacity) noexcept {
    if (s.queue < 0 || s.queue > capacity) return false;
    return !(s.queue == 0 && s.action == Action::Serve);
}

inline std::string to_string(const State& s) {
    return "(" + std::to_string(s.queue) + "," + std::to_string(to_int(s.phase)) + "," +
           std::to_string(to_int(s.action)) + ")";
}

/// Dense indexing of the 6K+4 valid states. The empty-queue block comes first
/// as (0,0,0),(0,0,2),(0,1,0),(0,1,2); every later queue length contributes six
/// states ordered by phase, then action.
class StateSpace {
public:
    explicit StateSpace(int capacity) : capacity_(capacity) {
        if (capacity < 1) throw InvalidParameter("buffer capacity must be at least 1");
    }

    int capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(6 * capacity_ + 4); }

    std::size_t index(const State& s) const {
        if (!is_valid(s, capacity_)) throw InvalidParameter("invalid state " + to_string(s));
        const int phase = to_int(s.phase);
        const int action = to_int(s.action);
        if (s.queue == 0) return static_cast<std::size_t>(2 * phase + (action == 0 ? 0 : 1));
        return static_cast<std::size_t>(4 + 6 * (s.queue - 1) + 3 * phase + action);
    }

    State state(std::size_t idx) const {
        if (idx >= size()) throw InvalidParameter("state index out of range");
        const int k = static_cast<int>(idx);
        if (k < 4) {
            return {0, static_cast<Phase>(k / 2), k % 2 == 0 ? Action::Idle : Action::Charge};
        }
        const int r = k - 4;
        return {1 + r / 6, static_cast<Phase>((r % 6) / 3), static_cast<Action>(r % 3)};
    }

private:
    int capacity_;
};

}  // namespace criot
