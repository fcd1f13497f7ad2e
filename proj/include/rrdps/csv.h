#pragma once

#include <string>
#include <vector>

#include "rrdps/attacksim.h"
#include "rrdps/montecarlo.h"
#include "rrdps/optimizer.h"

namespace rrdps::csv {

inline constexpr const char* kKeyRateHeader = "eta,M,L,detector,c_d,mu_opt,nu_th_opt,Q,e_bit,e_ph,e_src_slow,e_mB,G_raw,G";
inline constexpr const char* kAttackHeader =
    "p_z,M,n_sequences,n_measured,n_clean,trials,analytic_success,empirical_success,stderr,sifted_naive_mean,"
    "sifted_modified_mean";
inline constexpr const char* kMcHeader = "quantity,analytic,empirical,stderr,z";

// Shortest decimal representation that parses back to the same double.
std::string number(double value);

// `base` supplies L, detector and c_d.
std::string key_rate_row(const Optimum& optimum, const ProtocolParams& base);
std::string attack_row(const AttackScenario& scenario, std::int64_t trials, const AttackStats& stats);
std::string mc_row(const McComparison& row);

std::string key_rate_table(const std::vector<Optimum>& rows, const ProtocolParams& base);

}  // namespace rrdps::csv
