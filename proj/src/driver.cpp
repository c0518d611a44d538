#include "mortarbench/driver.hpp"

#include "mortarbench/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mortarbench
{

using nlohmann::json;

std::string to_string( GhostingStrategy s )
{
   switch ( s ) {
      case GhostingStrategy::redundant: return "redundant";
      case GhostingStrategy::binning: return "binning";
      case GhostingStrategy::round_robin: return "roundrobin";
   }
   return "binning";
}

GhostingStrategy ghosting_from_string( const std::string& s )
{
   if ( s == "redundant" ) { return GhostingStrategy::redundant; }
   if ( s == "binning" ) { return GhostingStrategy::binning; }
   if ( s == "roundrobin" || s == "round_robin" ) { return GhostingStrategy::round_robin; }
   throw ConfigError( "unknown ghosting strategy '" + s + "'" );
}

std::string to_string( BasisKind b ) { return b == BasisKind::dual ? "dual" : "standard"; }

BasisKind basis_from_string( const std::string& s )
{
   if ( s == "dual" ) { return BasisKind::dual; }
   if ( s == "standard" ) { return BasisKind::standard; }
   throw ConfigError( "unknown basis '" + s + "'" );
}

// ---------------------------------------------------------------- config

namespace
{

template <typename T>
void read( const json& j, const char* key, T& value )
{
   if ( j.contains( key ) ) { value = j.at( key ).get<T>(); }
}

} // namespace

RunConfig parse_run_config( const std::string& json_text )
{
   json j;
   try {
      j = json::parse( json_text );
   } catch ( const json::exception& e ) {
      throw ConfigError( std::string( "config is not valid JSON: " ) + e.what() );
   }
   if ( !j.is_object() ) { throw ConfigError( "config must be a JSON object" ); }
   static const std::set<std::string> known { "scenario", "refine", "steps",     "approach_steps", "dt",
                                              "ranks",    "ghosting", "lb",      "eta_t",          "eta_e",
                                              "part_tol", "basis",  "quad_order", "cost",          "seed",
                                              "threads",  "out",    "verify",    "wall_clock",     "write_matrices",
                                              "write_vtk" };
   for ( const auto& [key, value] : j.items() ) {
      if ( !known.count( key ) ) { throw ConfigError( "unknown config key '" + key + "'" ); }
   }

   RunConfig c;
   try {
      read( j, "scenario", c.scenario.scenario );
      read( j, "refine", c.scenario.refine );
      read( j, "steps", c.scenario.steps );
      read( j, "approach_steps", c.scenario.approach_steps );
      read( j, "dt", c.scenario.dt );
      read( j, "ranks", c.nranks );
      if ( j.contains( "ghosting" ) ) { c.ghosting = ghosting_from_string( j.at( "ghosting" ).get<std::string>() ); }
      if ( j.contains( "lb" ) ) { c.lb.mode = lb_mode_from_string( j.at( "lb" ).get<std::string>() ); }
      read( j, "eta_t", c.lb.eta_t_hat );
      read( j, "eta_e", c.lb.eta_e_hat );
      read( j, "part_tol", c.lb.part_tol );
      if ( j.contains( "basis" ) ) { c.mortar.basis = basis_from_string( j.at( "basis" ).get<std::string>() ); }
      read( j, "quad_order", c.mortar.quad_order );
      if ( j.contains( "cost" ) ) {
         read( j.at( "cost" ), "a", c.cost.a );
         read( j.at( "cost" ), "b", c.cost.b );
      }
      read( j, "seed", c.seed );
      read( j, "threads", c.threads );
      read( j, "out", c.out_dir );
      read( j, "verify", c.verify );
      read( j, "wall_clock", c.wall_clock );
      read( j, "write_matrices", c.write_matrices );
      read( j, "write_vtk", c.write_vtk );
   } catch ( const json::exception& e ) {
      throw ConfigError( std::string( "bad config value: " ) + e.what() );
   }
   return c;
}

RunConfig load_run_config( const std::filesystem::path& path )
{
   std::ifstream in( path );
   if ( !in ) { throw ConfigError( "cannot open config " + path.string() ); }
   std::stringstream ss;
   ss << in.rdbuf();
   return parse_run_config( ss.str() );
}

namespace
{

json config_to_json( const RunConfig& c )
{
   json j;
   j["scenario"] = c.scenario.scenario;
   j["refine"] = c.scenario.refine;
   j["steps"] = c.scenario.steps;
   j["approach_steps"] = c.scenario.approach_steps;
   j["dt"] = c.scenario.dt;
   j["ranks"] = c.nranks;
   j["ghosting"] = to_string( c.ghosting );
   j["lb"] = to_string( c.lb.mode );
   j["eta_t"] = c.lb.eta_t_hat;
   j["eta_e"] = c.lb.eta_e_threshold();
   j["part_tol"] = c.lb.part_tol;
   j["basis"] = to_string( c.mortar.basis );
   j["quad_order"] = c.mortar.quad_order;
   j["cost"] = { { "a", c.cost.a }, { "b", c.cost.b } };
   j["seed"] = c.seed;
   j["threads"] = c.threads;
   j["verify"] = c.verify;
   j["wall_clock"] = c.wall_clock;
   return j;
}

double mean_speed( const std::vector<Vec3>& before, const std::vector<Vec3>& after, double dt )
{
   if ( before.empty() ) { return 0.0; }
   double s = 0.0;
   for ( std::size_t n = 0; n < before.size(); ++n ) {
      s += norm( after[n] - before[n] );
   }
   return s / static_cast<double>( before.size() ) / dt;
}

/// Matrix checks run under --verify; returns failure descriptions.
std::vector<std::string> check_invariants( const MortarMatrices& global, const MortarMatrices& serial,
                                           const std::vector<LocalMortar>& locals, const Scenario& sc,
                                           BasisKind basis, double& difference )
{
   std::vector<std::string> fails;
   difference = relative_difference( global, serial );
   if ( !( difference <= 1e-12 ) ) {
      fails.push_back( "distribution invariance: relative difference " + std::to_string( difference ) );
   }
   for ( const auto* t : { &global.D, &global.M } ) {
      for ( const Triplet& x : *t ) {
         if ( !std::isfinite( x.value ) ) {
            fails.push_back( "non-finite matrix entry" );
            break;
         }
      }
   }

   // rows whose whole slave support is covered by master elements
   std::vector<char> covered( static_cast<std::size_t>( sc.slave.num_nodes() ), 1 );
   for ( const LocalMortar& l : locals ) {
      for ( const SlaveDiagnostics& d : l.slaves ) {
         if ( std::abs( d.covered_fraction() - 1.0 ) > 1e-12 ) {
            for ( NodeId n : sc.slave.elems[d.elem] ) {
               covered[n] = 0;
            }
         }
      }
   }
   std::vector<double> dsum( covered.size(), 0.0 ), msum( covered.size(), 0.0 );
   double max_diag = 0.0, max_off = 0.0;
   for ( const Triplet& x : global.D ) {
      dsum[x.row] += x.value;
      if ( x.row == x.col ) {
         max_diag = std::max( max_diag, std::abs( x.value ) );
      } else if ( covered[x.row] ) {
         max_off = std::max( max_off, std::abs( x.value ) );
      }
   }
   for ( const Triplet& x : global.M ) {
      msum[x.row] += x.value;
   }
   for ( std::size_t j = 0; j < covered.size(); ++j ) {
      if ( covered[j] && std::abs( dsum[j] - msum[j] ) > 1e-10 ) {
         fails.push_back( "conservation violated at slave node " + std::to_string( j ) );
         break;
      }
   }
   if ( basis == BasisKind::dual && max_off > 1e-12 * max_diag ) {
      fails.push_back( "dual D not diagonal on covered rows" );
   }
   return fails;
}

} // namespace

std::string run_config_json( const RunConfig& config ) { return config_to_json( config ).dump( 2 ); }

// ---------------------------------------------------------------- run

MetricsReport run( const RunConfig& config )
{
   validate( config.lb );
   if ( config.nranks < 1 ) { throw ConfigError( "ranks must be >= 1" ); }

   MetricsReport rep;
   rep.config = config;

   Scenario scenario = make_scenario( config.scenario );
   MortarOptions opt = config.mortar;
   if ( opt.search_tol < 0.0 ) { opt.search_tol = 0.5 * scenario.slave.max_edge(); }
   triangle_rule( opt.quad_order ); // validates the order up front

   WorldConfig wc;
   wc.cost = config.cost;
   wc.seed = config.seed;
   wc.threads = config.threads;
   SimWorld world = spawn_world( config.nranks, std::move( scenario ), wc );
   const int P = world.nranks();

   StepStats last;
   bool have_last = false;
   long ghost_node_sum = 0;
   long ghost_node_samples = 0;

   for ( int step = 0; step < world.scenario().steps; ++step ) {
      try {
         const std::vector<Vec3> before = world.scenario().slave.coords;
         world.begin_step( step );

         const LbDecision decision = lb_step( world, config.lb, have_last ? &last : nullptr );
         rep.decisions.push_back( decision );
         if ( decision.fired ) { ++rep.rebalances; }

         std::vector<LocalMortar> locals;
         GhostPlan plan;
         switch ( config.ghosting ) {
            case GhostingStrategy::redundant:
               plan = ghost_redundant( world );
               locals = evaluate_interface( world, opt, -1, config.wall_clock );
               break;
            case GhostingStrategy::binning: {
               const double v = mean_speed( before, world.scenario().slave.coords, world.scenario().dt );
               const BinGrid grid = build_bin_grid( world.scenario().slave, world.scenario().master,
                                                    world.scenario().dt, v, opt.search_tol );
               plan = ghost_binning( world, grid );
               locals = evaluate_interface( world, opt, -1, config.wall_clock );
               break;
            }
            case GhostingStrategy::round_robin:
               plan = plan_redundant( world.master_dd() );
               locals.resize( static_cast<std::size_t>( P ) );
               for ( int i = 0; i < P; ++i ) {
                  host_round_robin( world, i );
                  std::vector<LocalMortar> part = evaluate_interface( world, opt, i, config.wall_clock );
                  for ( RankId p = 0; p < P; ++p ) {
                     locals[p].absorb( std::move( part[p] ) );
                  }
               }
               break;
         }

         MortarMatrices matrices = assemble_offprocess( world, locals );
         const CostLedger led = ledger_snapshot( world );

         std::vector<double> work( P ), counts( P, 0.0 );
         for ( RankId r : world.slave_dd().elem_owner ) {
            counts[r] += 1.0;
         }
         StepSummary sum;
         sum.step = step;
         sum.C = led.C;
         sum.rebalanced = decision.fired;
         for ( RankId p = 0; p < P; ++p ) {
            const RankState& rs = world.rank_state( p );
            RankRow row;
            row.step = step;
            row.rank = p;
            row.owned_sl_elems = static_cast<long>( counts[p] );
            row.ghost_ma_nodes = rs.ghost_ma_nodes;
            row.ghost_ma_elems = rs.ghost_ma_elems;
            row.c_p = led.c_ma[p];
            row.S_p = led.S[p];
            row.W_p = led.W[p];
            row.t_p = config.wall_clock ? led.t[p] : 0.0;
            rep.rows.push_back( row );
            work[p] = static_cast<double>( led.W[p] );
            sum.max_W = std::max( sum.max_W, led.W[p] );
            sum.t_redist_proxy += led.c_redist[p];
            rep.max_ghost_ma_nodes = std::max( rep.max_ghost_ma_nodes, rs.ghost_ma_nodes );
            ghost_node_sum += rs.ghost_ma_nodes;
            ++ghost_node_samples;
         }
         sum.t_ghost_proxy = led.C;
         const ImbalanceReport imb = measure_imbalance( work, counts );
         sum.eta_t = imb.eta_t;
         sum.eta_e = imb.eta_e;

         if ( config.verify ) {
            const MortarMatrices serial = assemble_serial( world.scenario(), opt );
            const auto fails =
               check_invariants( matrices, serial, locals, world.scenario(), opt.basis, sum.verify_difference );
            sum.verify_ok = fails.empty();
            for ( const std::string& f : fails ) {
               rep.verify_failures.push_back( "step " + std::to_string( step ) + ": " + f );
            }
            rep.verify_ok = rep.verify_ok && sum.verify_ok;
         }

         rep.accumulated_work += sum.max_W;
         rep.accumulated_ghost += sum.C;
         rep.accumulated_redist += sum.t_redist_proxy;
         rep.steps.push_back( sum );

         last.work = work;
         last.owned_slave_elems = counts;
         last.slave_cells.assign( static_cast<std::size_t>( world.scenario().slave.num_elems() ), 0.0 );
         for ( const LocalMortar& l : locals ) {
            for ( const SlaveDiagnostics& d : l.slaves ) {
               last.slave_cells[d.elem] += static_cast<double>( d.cells );
            }
         }
         have_last = true;

         if ( step + 1 == world.scenario().steps ) {
            rep.matrices = std::move( matrices );
            rep.locals = std::move( locals );
            rep.ghost_plan = std::move( plan );
         }
      } catch ( const Error& e ) {
         throw Error( "step " + std::to_string( step ) + ": " + e.what() );
      }
   }
   rep.avg_ghost_ma_nodes = ghost_node_samples ? static_cast<double>( ghost_node_sum ) / ghost_node_samples : 0.0;
   rep.slave_dd = world.slave_dd();
   rep.final_scenario = world.scenario();
   return rep;
}

// ---------------------------------------------------------------- outputs

void write_metrics_csv( const MetricsReport& report, std::ostream& out )
{
   const auto old = out.precision( 17 );
   out << "step,rank,owned_sl_elems,ghost_ma_nodes,ghost_ma_elems,c_p,S_p,W_p,t_p\n";
   for ( const RankRow& r : report.rows ) {
      out << r.step << ',' << r.rank << ',' << r.owned_sl_elems << ',' << r.ghost_ma_nodes << ',' << r.ghost_ma_elems
          << ',' << r.c_p << ',' << r.S_p << ',' << r.W_p << ',' << r.t_p << '\n';
   }
   out.precision( old );
}

void write_step_summary_csv( const MetricsReport& report, std::ostream& out )
{
   const auto old = out.precision( 17 );
   out << "step,C,eta_t,eta_e,rebalanced,t_redist_proxy,t_ghost_proxy\n";
   for ( const StepSummary& s : report.steps ) {
      out << s.step << ',' << s.C << ',' << s.eta_t << ',' << s.eta_e << ',' << ( s.rebalanced ? 1 : 0 ) << ','
          << s.t_redist_proxy << ',' << s.t_ghost_proxy << '\n';
   }
   out.precision( old );
}

std::string summary_json( const MetricsReport& report )
{
   auto finite_or_null = []( double x ) { return std::isfinite( x ) ? json( x ) : json( nullptr ); };
   json j;
   j["config"] = config_to_json( report.config );
   j["steps"] = report.steps.size();
   j["accumulated_work"] = report.accumulated_work;
   j["accumulated_ghost_cost"] = report.accumulated_ghost;
   j["accumulated_redist_cost"] = report.accumulated_redist;
   j["accumulated_redist_plus_ghost_cost"] = report.accumulated_ghost + report.accumulated_redist;
   j["max_ghost_ma_nodes"] = report.max_ghost_ma_nodes;
   j["avg_ghost_ma_nodes"] = report.avg_ghost_ma_nodes;
   j["rebalances"] = report.rebalances;
   json eta_t = json::array(), eta_e = json::array();
   for ( const StepSummary& s : report.steps ) {
      eta_t.push_back( finite_or_null( s.eta_t ) );
      eta_e.push_back( finite_or_null( s.eta_e ) );
   }
   j["eta_t_history"] = eta_t;
   j["eta_e_history"] = eta_e;
   j["D_frobenius"] = frobenius_norm( report.matrices.D );
   j["M_frobenius"] = frobenius_norm( report.matrices.M );
   j["D_nonzeros"] = report.matrices.D.size();
   j["M_nonzeros"] = report.matrices.M.size();
   if ( report.config.verify ) {
      j["verify_ok"] = report.verify_ok;
      j["verify_failures"] = report.verify_failures;
   }
   return j.dump( 2 );
}

namespace
{

std::ofstream open_out( const std::filesystem::path& path )
{
   std::ofstream out( path );
   if ( !out ) { throw ConfigError( "cannot write " + path.string() ); }
   return out;
}

} // namespace

void write_outputs( const MetricsReport& report, const std::filesystem::path& dir )
{
   std::filesystem::create_directories( dir );
   {
      auto out = open_out( dir / "metrics.csv" );
      write_metrics_csv( report, out );
   }
   {
      auto out = open_out( dir / "step_summary.csv" );
      write_step_summary_csv( report, out );
   }
   {
      auto out = open_out( dir / "summary.json" );
      out << summary_json( report ) << '\n';
   }
   {
      auto out = open_out( dir / "decision_log.csv" );
      write_decision_log( report.decisions, out );
   }
   {
      auto out = open_out( dir / "diagnostics.csv" );
      write_diagnostics_csv( report.locals, out );
   }
   {
      auto out = open_out( dir / "ghost_plan.csv" );
      write_ghost_plan_csv( report.ghost_plan, out );
   }
   {
      auto out = open_out( dir / "slave_ownership.csv" );
      write_ownership_csv( report.slave_dd, out );
   }
   {
      auto out = open_out( dir / "slave_ghosts.csv" );
      write_ghost_csv( report.slave_dd, out );
   }
   if ( report.config.write_matrices ) {
      auto d = open_out( dir / "D.mtx" );
      write_matrix_market( report.matrices.D, report.matrices.slave_nodes, report.matrices.slave_nodes, d );
      auto m = open_out( dir / "M.mtx" );
      write_matrix_market( report.matrices.M, report.matrices.slave_nodes, report.matrices.master_nodes, m );
   }
   if ( report.config.write_vtk ) {
      auto s = open_out( dir / "slave.vtk" );
      write_vtk( report.final_scenario.slave, s );
      auto m = open_out( dir / "master.vtk" );
      write_vtk( report.final_scenario.master, m );
   }
}

// ---------------------------------------------------------------- compare

std::vector<ComparisonRow> compare( const std::vector<RunConfig>& configs )
{
   if ( configs.empty() ) { throw ConfigError( "nothing to compare" ); }
   const RunConfig& ref = configs.front();
   for ( const RunConfig& c : configs ) {
      if ( !( c.scenario == ref.scenario ) ) { throw ConfigError( "compared runs use different scenarios" ); }
      if ( c.nranks != ref.nranks || c.mortar.basis != ref.mortar.basis || c.mortar.quad_order != ref.mortar.quad_order ||
           !( c.cost == ref.cost ) ) {
         throw ConfigError( "compared runs may only differ in ghosting and load-balancing settings" );
      }
   }
   std::vector<ComparisonRow> rows;
   for ( const RunConfig& c : configs ) {
      const MetricsReport r = run( c );
      ComparisonRow row;
      std::ostringstream label;
      label << to_string( c.ghosting ) << '/' << to_string( c.lb.mode );
      if ( c.lb.mode == LbMode::dynamic ) { label << '(' << c.lb.eta_t_hat << ')'; }
      row.label = label.str();
      row.accumulated_work = r.accumulated_work;
      row.ghost_volume = r.accumulated_ghost;
      row.redist_volume = r.accumulated_redist;
      row.max_ghost_ma_nodes = r.max_ghost_ma_nodes;
      row.rebalances = r.rebalances;
      rows.push_back( row );
   }
   for ( ComparisonRow& row : rows ) {
      row.work_ratio = rows.front().accumulated_work > 0
                          ? static_cast<double>( row.accumulated_work ) / static_cast<double>( rows.front().accumulated_work )
                          : 1.0;
      row.ghost_ratio = rows.front().ghost_volume > 0.0 ? row.ghost_volume / rows.front().ghost_volume : 1.0;
   }
   return rows;
}

void write_comparison( const std::vector<ComparisonRow>& rows, std::ostream& out )
{
   out << std::left << std::setw( 28 ) << "config" << std::right << std::setw( 14 ) << "acc_work" << std::setw( 10 )
       << "ratio" << std::setw( 14 ) << "ghost_vol" << std::setw( 10 ) << "ratio" << std::setw( 12 ) << "redist"
       << std::setw( 12 ) << "max_ghost" << std::setw( 8 ) << "rebal" << '\n';
   for ( const ComparisonRow& r : rows ) {
      out << std::left << std::setw( 28 ) << r.label << std::right << std::setw( 14 ) << r.accumulated_work
          << std::setw( 10 ) << std::fixed << std::setprecision( 3 ) << r.work_ratio << std::setw( 14 )
          << std::setprecision( 0 ) << r.ghost_volume << std::setw( 10 ) << std::setprecision( 3 ) << r.ghost_ratio
          << std::setw( 12 ) << std::setprecision( 0 ) << r.redist_volume << std::setw( 12 ) << r.max_ghost_ma_nodes
          << std::setw( 8 ) << r.rebalances << '\n';
      out.unsetf( std::ios::floatfield );
   }
}

} // namespace mortarbench
