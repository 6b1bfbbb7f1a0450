#pragma once

#include "svrs/hardlab.hpp"
#include "svrs/problems.hpp"

#include <json.hpp>

namespace svrs {

// Each check returns a JSON object with at least a boolean "pass".

/// Kolmogorov distance between `draws` geometric samples and Geom(p); passes at <= 0.005.
nlohmann::json check_geometric_sampler(double p, long draws, std::uint64_t seed);

/// Gaps between anchor refreshes of loopless SVRS against Geom(p), KS test at the 1% level.
nlohmann::json check_anchor_gaps(double p, long iterations, std::uint64_t seed);

/// (3/(8 theta))|x-y|^2 <= D_h(x, y) <= (5/(8 theta))|x-y|^2 with theta = 1/(4 sqrt(n) delta_exact).
nlohmann::json check_bregman_sandwich(long pairs, std::uint64_t seed);

/// Mean SVRS epoch ledger delta against 4n - 2 (within 5%), each delta exactly 2(n-1) + 2T.
nlohmann::json check_epoch_ledger(long n, long epochs, std::uint64_t seed);

/// Closed-form proxes (ridge and hard instance) against accelerated inner solves; tolerance 1e-8.
nlohmann::json check_prox_vs_inner(int inputs, std::uint64_t seed);

/// Runs with the accelerated inner solver; every inner certificate must hold.
nlohmann::json check_certificates(std::uint64_t seed);

/// An instance whose first component owns coordinates must be flagged by the tracker.
nlohmann::json check_wrong_partition_detected();

struct VerifyOptions {
  HardlabVerifyOptions hardlab;
  long sampler_draws = 1'000'000;
  long sandwich_pairs = 10'000;
  long ledger_epochs = 10'000;
  int prox_inputs = 100;
  std::uint64_t seed = 1;
};

/// Everything above plus hardlab_verify; top-level "pass" is the conjunction.
nlohmann::json verify_suite(const VerifyOptions& options);

}  // namespace svrs
