#pragma once

#include "mortarbench/runtime.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mortarbench
{

/// Max/min ratios of the per-rank work clock and owned slave element counts.
struct ImbalanceReport
{
   double eta_t = 1.0;
   double eta_e = 1.0;
   std::vector<double> clocks;
   std::vector<double> counts;
};

/// eta = max / min. A zero minimum with a positive maximum gives +inf; all zeros give 1.
/// Throws ConfigError on empty or mismatched input.
ImbalanceReport measure_imbalance( std::span<const double> clocks, std::span<const double> counts );

double imbalance_ratio( std::span<const double> values );

enum class LbMode { none, static_once, dynamic };

struct LbPolicy
{
   LbMode mode = LbMode::none;
   double eta_t_hat = 1.8;
   double eta_e_hat = -1.0; ///< negative: same as eta_t_hat
   double part_tol = 1.03;

   double eta_e_threshold() const { return eta_e_hat < 0.0 ? eta_t_hat : eta_e_hat; }
};

/// Throws ConfigError for thresholds below 1 or a partition tolerance below 1.
void validate( const LbPolicy& policy );

/// eta_t >= eta_t_hat or eta_e >= eta_e_hat. Only meaningful in dynamic mode; other modes return false.
bool should_rebalance( const ImbalanceReport& report, const LbPolicy& policy );

struct RebalanceResult
{
   long migrated_elems = 0;
   double redist_cost = 0.0; ///< g-volume charged under the redistribution tag
};

/// Recomputes the slave interface DD over all ranks and migrates the moved elements.
///
/// `weights` are split as in independent_interface_dd; empty weights give a plain RCB.
/// The master DD is re-derived with uniform weights.
RebalanceResult rebalance_interface( SimWorld& world, std::span<const double> weights, double part_tol );

/// Statistics of the previous evaluation that drive the next decision.
struct StepStats
{
   std::vector<double> work;                ///< W_p
   std::vector<double> owned_slave_elems;   ///< per rank
   std::vector<double> slave_cells;         ///< integration cells per slave element
};

struct LbDecision
{
   int step = 0;
   double eta_t = 1.0;
   double eta_e = 1.0;
   bool fired = false;
   long migrated_elems = 0;
   double redist_cost = 0.0;
};

/// Step-entry policy: none never acts, static rebalances once at step 0 with uniform weights,
/// dynamic rebalances at step 0 and afterwards whenever the previous step's stats trigger,
/// using activity weights 1 + cells(e) from the previous evaluation.
LbDecision lb_step( SimWorld& world, const LbPolicy& policy, const StepStats* last_step );

/// CSV: step, eta_t, eta_e, fired, migrated_elems, redist_cost
void write_decision_log( const std::vector<LbDecision>& log, std::ostream& out );

std::string to_string( LbMode mode );
LbMode lb_mode_from_string( const std::string& s );

} // namespace mortarbench
