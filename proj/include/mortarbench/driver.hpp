#pragma once

#include "mortarbench/balance.hpp"
#include "mortarbench/ghosting.hpp"
#include "mortarbench/mortar.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mortarbench
{

enum class GhostingStrategy { redundant, binning, round_robin };

std::string to_string( GhostingStrategy s );
GhostingStrategy ghosting_from_string( const std::string& s );
std::string to_string( BasisKind b );
BasisKind basis_from_string( const std::string& s );

struct RunConfig
{
   ScenarioConfig scenario;
   int nranks = 1;
   GhostingStrategy ghosting = GhostingStrategy::binning;
   LbPolicy lb;
   MortarOptions mortar;
   CostModel cost;
   std::uint64_t seed = 0;
   int threads = 1;
   std::string out_dir;
   bool verify = false;
   bool wall_clock = false;
   bool write_matrices = false;
   bool write_vtk = false;
};

/// Flat JSON object: scenario keys (scenario, refine, steps, approach_steps, dt) plus
/// ranks, ghosting, lb, eta_t, eta_e, part_tol, basis, quad_order, cost {a, b}, seed,
/// threads, out, verify, wall_clock, write_matrices, write_vtk. Unknown keys are rejected.
RunConfig parse_run_config( const std::string& json_text );
RunConfig load_run_config( const std::filesystem::path& path );
std::string run_config_json( const RunConfig& config );

/// One row per (step, rank).
struct RankRow
{
   int step = 0;
   RankId rank = 0;
   long owned_sl_elems = 0;
   long ghost_ma_nodes = 0;
   long ghost_ma_elems = 0;
   double c_p = 0.0;
   double S_p = 0.0;
   long W_p = 0;
   double t_p = 0.0;
};

struct StepSummary
{
   int step = 0;
   double C = 0.0;
   double eta_t = 1.0;
   double eta_e = 1.0;
   bool rebalanced = false;
   double t_redist_proxy = 0.0;
   double t_ghost_proxy = 0.0;
   long max_W = 0;
   double verify_difference = 0.0; ///< relative Frobenius distance to the serial result (verify only)
   bool verify_ok = true;
};

struct MetricsReport
{
   RunConfig config;
   std::vector<RankRow> rows;
   std::vector<StepSummary> steps;
   std::vector<LbDecision> decisions;

   long accumulated_work = 0;       ///< sum over steps of max_p W_p
   double accumulated_ghost = 0.0;  ///< sum over steps of C
   double accumulated_redist = 0.0;
   long max_ghost_ma_nodes = 0;
   double avg_ghost_ma_nodes = 0.0;
   int rebalances = 0;
   bool verify_ok = true;
   std::vector<std::string> verify_failures;

   MortarMatrices matrices;          ///< assembled at the last step
   std::vector<LocalMortar> locals;  ///< last step, per rank
   OwnershipMap slave_dd;            ///< last step
   GhostPlan ghost_plan;             ///< last step
   Scenario final_scenario;
};

/// Per step: advance kinematics, load-balancing decision, ghosting, evaluation,
/// off-process assembly and ledger snapshot. Errors are rethrown with the step number.
MetricsReport run( const RunConfig& config );

void write_metrics_csv( const MetricsReport& report, std::ostream& out );
void write_step_summary_csv( const MetricsReport& report, std::ostream& out );
std::string summary_json( const MetricsReport& report );

/// metrics.csv, step_summary.csv, summary.json, decision_log.csv, diagnostics.csv,
/// ghost_plan.csv, slave_ownership.csv, slave_ghosts.csv and optionally D.mtx, M.mtx and VTK meshes.
void write_outputs( const MetricsReport& report, const std::filesystem::path& dir );

struct ComparisonRow
{
   std::string label;
   long accumulated_work = 0;
   double work_ratio = 1.0;
   double ghost_volume = 0.0;
   double ghost_ratio = 1.0;
   double redist_volume = 0.0;
   long max_ghost_ma_nodes = 0;
   int rebalances = 0;
};

/// Runs every config and reports ratios against the first. Throws ConfigError when the
/// configs differ in anything but ghosting and load-balancing settings.
std::vector<ComparisonRow> compare( const std::vector<RunConfig>& configs );

void write_comparison( const std::vector<ComparisonRow>& rows, std::ostream& out );

} // namespace mortarbench
