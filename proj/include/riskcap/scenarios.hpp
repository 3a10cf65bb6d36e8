#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskcap/allocate.hpp"
#include "riskcap/model.hpp"

namespace riskcap {

// Canned experiment setups. Example 1: two exponential-claim lines, three
// states, only line 1 reacting to the environment. Example 2 ships four
// labeled parameter sets (a-d). Example 3 covers the mid-run state switch and
// the per-period re-sampled environment. Example 4: five Gaussian-claim lines,
// five states.
ModelSpec example1_model();
ModelSpec example2_model(char set);  // 'a'..'d'
ModelSpec example3_switch_model();
ModelSpec example3_resampled_model();
ModelSpec example4_model();

// Reserve problems behind the examples' allocation figures (AllRuin over the
// full subset family, threshold base 0.001).
AllocationProblem example1_problem();
AllocationProblem example4_problem(SubsetMode mode);

struct RunOptions {
  std::uint64_t seed = 1;
  int trials = 100;    // Example-1 confidence bands
  int n_periods = 50;  // observation periods per trial
  std::string out_dir = ".";
};

// Emits the CSV files behind the example's figures; returns the paths written.
std::vector<std::string> run_example(int which, const RunOptions& opt);

}  // namespace riskcap
