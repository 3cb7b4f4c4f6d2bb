#pragma once

#include <string>
#include <vector>

#include "stabsched/branch_bound.hpp"
#include "stabsched/uc_model.hpp"

namespace stabsched {

// ============================================================================
// Stability-service pricing
//
// The price of a unit's stability contribution is the cost of doing without
// it: zero every surrogate coefficient the unit owns, re-solve the schedule,
// and difference the optima (mu_g = f*_g - f*). Synchronous generators and
// grid-forming IBRs are priceable; grid-following IBRs are not service
// providers in this scheme. Shadow prices are deliberately not used: with
// binary commitments in the active constraints they are ill-defined.
//
// Re-solves are independent and embarrassingly parallel. Both solves of every
// difference share one branch-and-bound configuration so that a price is
// never an artifact of mismatched tolerances.
// ============================================================================

/// One row of the price report. `hour` is -1 for full-horizon prices.
/// `priced` marks rows whose re-solve produced an incumbent; an infeasible
/// re-solve means the system cannot run without the unit ("indispensable"),
/// which is reported as a status instead of a number.
struct PriceEntry {
    std::string unit;
    int bus = 0;
    int hour = -1;
    bool priced = false;
    double f_star = 0.0;    ///< base optimum of the compared problem
    double f_star_g = 0.0;  ///< optimum with the unit's columns zeroed
    double mu = 0.0;        ///< f_star_g - f_star, exactly as stored
    double gap_bound = 0.0; ///< |base gap| + |re-solve gap|
    std::string status;     ///< "ok", "indispensable", or "node-limit"
    bool negative = false;  ///< mu below -gap_bound: flagged, never clamped
};

struct PricingConfig {
    BnbConfig bnb;
    int threads = 0;            ///< concurrent re-solves; 0 = hardware count
    bool deterministic = false; ///< sequential order, zeroed wall clocks
    bool per_hour = false;      ///< time-resolved decomposition (see below)
};

struct PriceReport {
    double f_star = 0.0;      ///< full-horizon base optimum
    std::string base_status;
    PricingConfig config;     ///< echo of the settings that produced it
    std::vector<PriceEntry> entries;
};

/// Units the scheme prices, in report order: generators in case order, then
/// grid-forming IBRs in case order.
std::vector<std::string> priceable_units(const NetworkCase& net);

/// Copy of the compiled program with every surrogate coefficient owned by
/// `unit` set to zero. Generators own their x/p/R feature columns, grid-
/// forming IBRs their injection (and fault-current) columns. Only the
/// attached-surrogate rows are touched; objective, balance, ramps, and
/// commitment logic are untouched. `hour` >= 0 restricts the zeroing to
/// surrogate rows of tree nodes at that stage. Idempotent. Throws
/// ValidationError for unknown or non-priceable units.
MiConeProgram zero_unit_columns(const UcModel& model, const std::string& unit, int hour = -1);

/// Prices every priceable unit against a solved base schedule.
///
/// Full-horizon mode: one re-solve per unit, f_star = base.objective.
///
/// Per-hour mode: for each stage t, commitments outside t are pinned to the
/// base pattern and the stage is priced in isolation (the unit's columns are
/// zeroed only in stage-t surrogate rows). The paired hourly base optimum is
/// recomputed under the same pinning so each difference is like for like.
/// This decomposition is an interpretation: the scheme defines mu over the
/// whole problem, and the hourly curve is the natural restriction of it.
///
/// Throws ValidationError if the base result has no incumbent.
PriceReport price_all(const UcModel& model, const BnbResult& base, const PricingConfig& cfg = {});

/// CSV with the pinned column set:
/// unit,bus,hour,f_star,f_star_g,mu,gap_bound,status,warning
/// Full-horizon rows write "all" in the hour column; unpriced rows leave the
/// numeric fields empty. Floats carry full precision so stored identities
/// survive the round trip. Byte-stable for a given report.
std::string serialize_price_csv(const PriceReport& report);

}  // namespace stabsched
