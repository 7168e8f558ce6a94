#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "criot/parallel.hpp"
#include "criot/params.hpp"
#include "criot/rng.hpp"
#include "criot/state_space.hpp"

namespace criot {

/// Monte Carlo replay of the cell: a continuous-time alternating exponential
/// ON/OFF process sensed at slot boundaries, Poisson arrivals with timestamps,
/// a FIFO buffer of K packets and one clearing attempt per serve slot. Nothing
/// here reuses the analytic chain, so it can serve as its oracle.
struct SimConfig {
    SystemParams params;
    std::int64_t horizon_slots = 1'000'000;
    std::int64_t warmup_slots = 100'000;
    std::uint64_t seed = 1;
    int replications = 1;
    int batches = 20;  // batch-means blocks for per-replication standard errors
};

inline void validate(const SimConfig& c) {
    validate(c.params);
    detail::require(c.warmup_slots >= 0, "warmup_slots must be non-negative");
    detail::require(c.horizon_slots > c.warmup_slots, "horizon_slots must exceed warmup_slots");
    detail::require(c.replications >= 1, "replications must be at least 1");
    detail::require(c.batches >= 2, "batches must be at least 2");
    detail::require(c.horizon_slots - c.warmup_slots >= c.batches,
                    "measured window must hold at least one slot per batch");
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct SimCounts {
    std::uint64_t generated = 0;
    std::uint64_t admitted = 0;
    std::uint64_t dropped = 0;
    std::uint64_t served = 0;  // admitted in the window and cleared in the window
};

struct SimResult {
    std::uint64_t seed = 0;
    int replication = -1;  // -1 marks a pooled result
    std::int64_t measured_slots = 0;

    Estimate drop_prob;
    Estimate mean_sojourn;  // seconds, arrival to end of the clearing slot
    Estimate interference;
    Estimate on_fraction;
    double carried_load = 0.0;     // service completions per slot
    double charge_fraction = 0.0;  // slots committed to charging
    std::vector<double> slot_state_histogram;
    std::vector<double> post_departure_histogram;
    SimCounts counts;

    // Raw tallies kept for pooling.
    std::uint64_t completions = 0;
    std::uint64_t interference_slots = 0;
    std::uint64_t charge_slots = 0;
    std::uint64_t on_slots = 0;
    double sojourn_sum = 0.0;
    std::vector<std::uint64_t> state_counts;
    std::vector<std::uint64_t> departure_counts;
};

struct SimulationReport {
    std::vector<SimResult> replications;
    SimResult pooled;
    std::string generator = Xoshiro256::kName;
};

namespace sim_detail {

// Sensing then policy, exactly as the access point runs it.
inline Action sample_action(Xoshiro256& rng, Phase phase, bool queue_nonempty,
                            const SensingModel& sensing, const PolicyModel& policy) {
    const bool sensed_busy =
        phase == Phase::On ? rng.bernoulli(sensing.p_detect) : rng.bernoulli(sensing.p_false_alarm);
    if (sensed_busy) return Action::Idle;
    if (rng.bernoulli(policy.theta_idle)) return Action::Idle;
    if (rng.bernoulli(policy.xi_charge)) return Action::Charge;
    return queue_nonempty ? Action::Serve : Action::Idle;
}

inline double holding_rate(const PnpModel& pnp, Phase phase) noexcept {
    return phase == Phase::On ? pnp.mu_on : pnp.mu_off;
}

inline Phase flip(Phase p) noexcept { return p == Phase::On ? Phase::Off : Phase::On; }

// Runs the phase process across one slot given the residual time r of the
// current period; returns the end phase and leaves r relative to slot end.
inline Phase advance_phase(Xoshiro256& rng, const PnpModel& pnp, Phase phase, double& r, double d) {
    while (r < d) {
        phase = flip(phase);
        r += rng.exponential(holding_rate(pnp, phase));
    }
    r -= d;
    return phase;
}

inline std::vector<double> normalize(const std::vector<std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    std::vector<double> out(counts.size(), 0.0);
    if (total == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    }
    return out;
}

// Standard error of the mean of per-batch values.
inline double batch_std_error(const std::vector<double>& values) {
    const auto n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

struct Batch {
    std::uint64_t slots = 0;
    std::uint64_t generated = 0;
    std::uint64_t dropped = 0;
    std::uint64_t interference = 0;
    std::uint64_t on = 0;
    std::uint64_t sojourns = 0;
    double sojourn_sum = 0.0;
};

struct Packet {
    std::int64_t slot;
    double offset;
    bool counted;
};

}  // namespace sim_detail

/// One replication. Identical inputs give bit-identical results.
inline SimResult simulate_replication(const SystemParams& params, std::int64_t horizon_slots,
                                      std::int64_t warmup_slots, std::uint64_t seed, int batches = 20) {
    using namespace sim_detail;
    const auto& pnp = params.pnp;
    const auto& traffic = params.traffic;
    const int cap = traffic.capacity;
    const double d = traffic.slot;
    const double arrival_rate = traffic.aggregate_rate();
    const StateSpace space(cap);
    const std::int64_t measured = horizon_slots - warmup_slots;

    Xoshiro256 rng(seed);
    SimResult out;
    out.seed = seed;
    out.measured_slots = measured;
    out.state_counts.assign(space.size(), 0);
    out.departure_counts.assign(static_cast<std::size_t>(cap), 0);
    std::vector<Batch> batch(static_cast<std::size_t>(batches));

    const double beta = pnp.mu_off / (pnp.mu_on + pnp.mu_off);
    Phase phase = rng.bernoulli(beta) ? Phase::On : Phase::Off;
    double residual = rng.exponential(holding_rate(pnp, phase));
    double next_arrival = rng.exponential(arrival_rate);
    std::deque<Packet> queue;

    for (std::int64_t s = 0; s < horizon_slots; ++s) {
        const bool in_window = s >= warmup_slots;
        Batch* b = in_window
                       ? &batch[static_cast<std::size_t>((s - warmup_slots) * batches / measured)]
                       : nullptr;

        const Phase start_phase = phase;
        const Action action =
            sample_action(rng, start_phase, !queue.empty(), params.sensing, params.policy);
        if (b) {
            ++b->slots;
            ++out.state_counts[space.index({static_cast<int>(queue.size()), start_phase, action})];
            if (start_phase == Phase::On) {
                ++out.on_slots;
                ++b->on;
                if (action != Action::Idle) {
                    ++out.interference_slots;
                    ++b->interference;
                }
            }
            if (action == Action::Charge) ++out.charge_slots;
        }

        while (next_arrival < d) {
            if (b) {
                ++out.counts.generated;
                ++b->generated;
            }
            if (static_cast<int>(queue.size()) < cap) {
                queue.push_back({s, next_arrival, in_window});
                if (b) ++out.counts.admitted;
            } else if (b) {
                ++out.counts.dropped;
                ++b->dropped;
            }
            next_arrival += rng.exponential(arrival_rate);
        }
        next_arrival -= d;

        const bool cleared = action == Action::Serve && start_phase == Phase::Off && residual >= d;
        phase = advance_phase(rng, pnp, phase, residual, d);

        if (cleared) {
            const Packet done = queue.front();
            queue.pop_front();
            if (b) {
                ++out.completions;
                ++out.departure_counts[queue.size()];
                if (done.counted) {
                    const double sojourn = static_cast<double>(s - done.slot + 1) * d - done.offset;
                    ++out.counts.served;
                    out.sojourn_sum += sojourn;
                    ++b->sojourns;
                    b->sojourn_sum += sojourn;
                }
            }
        }
    }

    const auto m = static_cast<double>(measured);
    std::vector<double> drop_b, sojourn_b, interf_b, on_b;
    for (const auto& bb : batch) {
        if (bb.generated > 0) drop_b.push_back(static_cast<double>(bb.dropped) / static_cast<double>(bb.generated));
        if (bb.sojourns > 0) sojourn_b.push_back(bb.sojourn_sum / static_cast<double>(bb.sojourns));
        if (bb.slots > 0) {
            interf_b.push_back(static_cast<double>(bb.interference) / static_cast<double>(bb.slots));
            on_b.push_back(static_cast<double>(bb.on) / static_cast<double>(bb.slots));
        }
    }
    const auto& c = out.counts;
    out.drop_prob = {c.generated ? static_cast<double>(c.dropped) / static_cast<double>(c.generated) : 0.0,
                     batch_std_error(drop_b)};
    out.mean_sojourn = {c.served ? out.sojourn_sum / static_cast<double>(c.served) : NAN,
                        batch_std_error(sojourn_b)};
    out.interference = {static_cast<double>(out.interference_slots) / m, batch_std_error(interf_b)};
    out.on_fraction = {static_cast<double>(out.on_slots) / m, batch_std_error(on_b)};
    out.carried_load = static_cast<double>(out.completions) / m;
    out.charge_fraction = static_cast<double>(out.charge_slots) / m;
    out.slot_state_histogram = normalize(out.state_counts);
    out.post_departure_histogram = normalize(out.departure_counts);
    return out;
}

namespace sim_detail {


template <typename Get>
double across_std_error(const std::vector<SimResult>& reps, Get get) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& r : reps) v.push_back(get(r));
    return batch_std_error(v);
}

inline SimResult pool(const std::vector<SimResult>& reps) {
    SimResult p = reps.front();
    p.replication = -1;
    if (reps.size() == 1) return p;

    p.measured_slots = 0;
    p.counts = {};
    p.completions = p.interference_slots = p.charge_slots = p.on_slots = 0;
    p.sojourn_sum = 0.0;
    std::fill(p.state_counts.begin(), p.state_counts.end(), 0);
    std::fill(p.departure_counts.begin(), p.departure_counts.end(), 0);
    for (const auto& r : reps) {
        p.measured_slots += r.measured_slots;
        p.counts.generated += r.counts.generated;
        p.counts.admitted += r.counts.admitted;
        p.counts.dropped += r.counts.dropped;
        p.counts.served += r.counts.served;
        p.completions += r.completions;
        p.interference_slots += r.interference_slots;
        p.charge_slots += r.charge_slots;
        p.on_slots += r.on_slots;
        p.sojourn_sum += r.sojourn_sum;
        for (std::size_t i = 0; i < p.state_counts.size(); ++i) p.state_counts[i] += r.state_counts[i];
        for (std::size_t i = 0; i < p.departure_counts.size(); ++i) p.departure_counts[i] += r.departure_counts[i];
    }
    const auto m = static_cast<double>(p.measured_slots);
    const auto& c = p.counts;
    // Pooled point estimates come from summed tallies; their standard errors
    // from the spread of the replication estimates.
    p.drop_prob = {c.generated ? static_cast<double>(c.dropped) / static_cast<double>(c.generated) : 0.0,
                   across_std_error(reps, [](const SimResult& r) { return r.drop_prob.value; })};
    p.mean_sojourn = {c.served ? p.sojourn_sum / static_cast<double>(c.served) : NAN,
                      across_std_error(reps, [](const SimResult& r) { return r.mean_sojourn.value; })};
    p.interference = {static_cast<double>(p.interference_slots) / m,
                      across_std_error(reps, [](const SimResult& r) { return r.interference.value; })};
    p.on_fraction = {static_cast<double>(p.on_slots) / m,
                     across_std_error(reps, [](const SimResult& r) { return r.on_fraction.value; })};
    p.carried_load = static_cast<double>(p.completions) / m;
    p.charge_fraction = static_cast<double>(p.charge_slots) / m;
    p.slot_state_histogram = normalize(p.state_counts);
    p.post_departure_histogram = normalize(p.departure_counts);
    return p;
}

}  // namespace sim_detail

/// Runs all replications (concurrently, seeds derived from (seed, index))
/// and pools them in index order.
inline SimulationReport run_simulation(const SimConfig& config, unsigned workers = default_workers()) {
    validate(config);
    SimulationReport report;
    report.replications.resize(static_cast<std::size_t>(config.replications));
    parallel_for(report.replications.size(), workers, [&](std::size_t r) {
        auto res = simulate_replication(config.params, config.horizon_slots, config.warmup_slots,
                                        derive_seed(config.seed, r), config.batches);
        res.replication = static_cast<int>(r);
        report.replications[r] = std::move(res);
    });
    report.pooled = sim_detail::pool(report.replications);
    return report;
}

/// Empirical slot kernel with binomial standard errors.
struct EmpiricalKernel {
    Estimate a00, a01, a10, a11, off_persist, on_persist;
    std::int64_t trials = 0;
};

/// Starts the renewal process in each phase (the residual period is a fresh
/// exponential by memorylessness), runs it for one slot and tallies end
/// phases and whole-slot persistence.
inline EmpiricalKernel estimate_slot_kernel(const PnpModel& pnp, double slot_d, std::int64_t trials,
                                            std::uint64_t seed) {
    validate(pnp);
    detail::require(trials >= 1, "trials must be at least 1");
    detail::require(slot_d >= 0.0, "slot duration must be non-negative");
    Xoshiro256 rng(seed);
    std::int64_t off_end_off = 0, off_persist = 0, on_end_on = 0, on_persist = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        for (Phase start : {Phase::Off, Phase::On}) {
            double r = rng.exponential(sim_detail::holding_rate(pnp, start));
            const bool persisted = r >= slot_d;
            const Phase end = sim_detail::advance_phase(rng, pnp, start, r, slot_d);
            if (start == Phase::Off) {
                off_end_off += end == Phase::Off;
                off_persist += persisted;
            } else {
                on_end_on += end == Phase::On;
                on_persist += persisted;
            }
        }
    }
    const auto n = static_cast<double>(trials);
    auto est = [n](std::int64_t hits) {
        const double p = static_cast<double>(hits) / n;
        return Estimate{p, std::sqrt(p * (1.0 - p) / n)};
    };
    EmpiricalKernel k;
    k.trials = trials;
    k.a00 = est(off_end_off);
    k.a01 = est(trials - off_end_off);
    k.a11 = est(on_end_on);
    k.a10 = est(trials - on_end_on);
    k.off_persist = est(off_persist);
    k.on_persist = est(on_persist);
    return k;
}

/// Destination tallies of one-slot experiments from a fixed source state.
struct EmpiricalRow {
    std::vector<std::uint64_t> counts;
    std::int64_t trials = 0;

    double pmf(std::size_t idx) const {
        return static_cast<double>(counts.at(idx)) / static_cast<double>(trials);
    }
};

/// Plays one slot from `source` (phase at slot start, i packets, committed
/// action), then senses and decides at the slot end, `trials` times.
inline EmpiricalRow estimate_transition_row(const SystemParams& params, const State& source,
                                            std::int64_t trials, std::uint64_t seed) {
    validate(params);
    const auto& traffic = params.traffic;
    const int cap = traffic.capacity;
    if (!is_valid(source, cap)) throw InvalidParameter("invalid source state " + to_string(source));
    detail::require(trials >= 1, "trials must be at least 1");
    const StateSpace space(cap);
    const double d = traffic.slot;
    const double rate = traffic.aggregate_rate();

    Xoshiro256 rng(seed);
    EmpiricalRow row;
    row.trials = trials;
    row.counts.assign(space.size(), 0);
    for (std::int64_t t = 0; t < trials; ++t) {
        double r = rng.exponential(sim_detail::holding_rate(params.pnp, source.phase));
        const bool cleared = source.action == Action::Serve && source.phase == Phase::Off && r >= d;
        const Phase end = sim_detail::advance_phase(rng, params.pnp, source.phase, r, d);
        int queue = source.queue;
        for (double a = rng.exponential(rate); a < d; a += rng.exponential(rate)) {
            if (queue < cap) ++queue;
        }
        if (cleared) --queue;
        const Action next = sim_detail::sample_action(rng, end, queue > 0, params.sensing, params.policy);
        ++row.counts[space.index({queue, end, next})];
    }
    return row;
}

}  // namespace criot
