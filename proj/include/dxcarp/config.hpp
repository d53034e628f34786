#pragma once

#include <cstdint>
#include <limits>

namespace dxcarp {

enum class Variant : std::uint8_t { Improved, Plain };

// Solver parameters. Distances are meters, times are minutes.
struct SolverConfig {
    double capacity = 20000.0;         // Q, tank capacity in water units
    double sprinkling_speed_kmh = 10.0; // v_R
    double deadhead_speed_kmh = 30.0;   // v_N
    double max_work_spread = 15.0;      // T_dif, minutes
    double removal_fraction = 0.10;     // Gamma
    double lateness_weight = 5.0;       // delta
    double penalty_unit_scale = 1.0;    // meters per minute^2 of lateness
    int stagnation_threshold = 200;     // Phi_1
    int shake_period = 100;             // Phi_2
    int max_non_improving = 1500;       // M_1
    int max_iterations = 3000;          // M_2
    int weight_phase = 100;             // psi
    double weight_min = 1.0;            // a_min
    double weight_max = 3.0;            // a_max
    double score_accepted = 0.0;        // sco_1
    double score_improved = 0.02;       // sco_2
    double score_best = 0.05;           // sco_3
    double weight_decay = 0.8;          // tau
    double noise_scale = 0.1;           // mu
    double shake_fraction = 0.20;       // Gamma_shake
    double accel_ratio = 2.0;
    double recency = 30.0;              // minutes; recently sprinkled links are skipped
    double window_length = 30.0;        // minutes
    double balance_weight = 10000.0;    // W_bal, meters per minute of excess spread
    double worse_accept_fraction = 0.05; // T_0 accepts this relative worsening w.p. 1/2
    double cooling_rate = 0.9997;
    double temperature_floor = 1e-6;    // fraction of T_0
    int tabu_capacity = 5000;
    int recompute_period = 500;         // accepted moves between cache rebuilds
    int max_balance_iters = 0;          // 0: 10 x number of demand links
    double time_limit_s = 0.0;          // 0: no wall-clock limit
    std::uint64_t seed = 1;
    Variant variant = Variant::Improved;

    double service_speed() const { return sprinkling_speed_kmh * 1000.0 / 60.0; }  // m/min
    double deadhead_speed() const { return deadhead_speed_kmh * 1000.0 / 60.0; }   // m/min

    bool tabu_enabled() const { return variant == Variant::Improved; }
    bool perturbation_enabled() const { return variant == Variant::Improved; }
    bool fallback_enabled() const { return variant == Variant::Improved; }
    double effective_accel_ratio() const {
        return variant == Variant::Improved ? accel_ratio : std::numeric_limits<double>::infinity();
    }
};

} // namespace dxcarp
