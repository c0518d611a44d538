// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "mortarbench/driver.hpp"
#include "mortarbench/error.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>

using namespace mortarbench;

namespace
{

struct Outcome
{
   bool pass = false;
   std::string detail;
};

std::string fmt( const char* f, double a )
{
   char buf[96];
   std::snprintf( buf, sizeof buf, f, a );
   return buf;
}

double seconds_since( std::chrono::steady_clock::time_point t0 )
{
   return std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count();
}

RunConfig two_block( int refine, int ranks, GhostingStrategy g, LbMode lb, int steps = 1 )
{
   RunConfig c;
   c.scenario.scenario = "two_block";
   c.scenario.refine = refine;
   c.scenario.steps = steps;
   c.nranks = ranks;
   c.ghosting = g;
   c.lb.mode = lb;
   return c;
}

RunConfig moving_patch( LbMode lb )
{
   RunConfig c;
   c.scenario.scenario = "moving_patch";
   c.scenario.refine = 1;
   c.scenario.steps = 200;
   c.scenario.approach_steps = 20;
   c.scenario.dt = 0.01;
   c.nranks = 8;
   c.ghosting = GhostingStrategy::binning;
   c.lb.mode = lb;
   c.lb.eta_t_hat = 1.8;
   return c;
}

MortarOptions resolved( const RunConfig& c, const Scenario& sc )
{
   MortarOptions o = c.mortar;
   if ( o.search_tol < 0.0 ) { o.search_tol = 0.5 * sc.slave.max_edge(); }
   return o;
}

double hat_product( int a, int b )
{
   auto phi = [&]( int k, double t ) { return k == 0 ? 1.0 - t : t; };
   return ( phi( a, 0.0 ) * phi( b, 0.0 ) + 4.0 * phi( a, 0.5 ) * phi( b, 0.5 ) + phi( a, 1.0 ) * phi( b, 1.0 ) ) / 6.0;
}

InterfaceMesh grid_mesh( int n, double x0, double len, double z, bool down, Side side )
{
   InterfaceMesh m;
   m.side = side;
   for ( int i = 0; i <= n; ++i ) {
      for ( int j = 0; j <= n; ++j ) {
         m.coords.push_back( { x0 + len * i / n, x0 + len * j / n, z } );
      }
   }
   auto id = [n]( int i, int j ) { return i * ( n + 1 ) + j; };
   for ( int i = 0; i < n; ++i ) {
      for ( int j = 0; j < n; ++j ) {
         if ( down ) {
            m.elems.push_back( { id( i, j ), id( i, j + 1 ), id( i + 1, j + 1 ), id( i + 1, j ) } );
         } else {
            m.elems.push_back( { id( i, j ), id( i + 1, j ), id( i + 1, j + 1 ), id( i, j + 1 ) } );
         }
      }
   }
   m.normals = averaged_nodal_normals( m );
   return m;
}

std::vector<std::vector<double>> dense( const std::vector<Triplet>& t, int rows, int cols )
{
   std::vector<std::vector<double>> a( rows, std::vector<double>( cols, 0.0 ) );
   for ( const Triplet& x : t ) {
      a[x.row][x.col] += x.value;
   }
   return a;
}

// ------------------------------------------------------------------ criteria

Outcome invariance()
{
   const auto t0 = std::chrono::steady_clock::now();
   const Scenario sc = make_scenario( two_block( 2, 1, GhostingStrategy::binning, LbMode::none ).scenario );
   const MortarMatrices ref = assemble_serial( sc, resolved( RunConfig {}, sc ) );
   double worst = 0.0;
   int runs = 0;
   for ( int P : { 1, 2, 4, 8 } ) {
      for ( GhostingStrategy g : { GhostingStrategy::redundant, GhostingStrategy::binning, GhostingStrategy::round_robin } ) {
         for ( LbMode lb : { LbMode::none, LbMode::static_once, LbMode::dynamic } ) {
            const MetricsReport r = run( two_block( 2, P, g, lb, 2 ) );
            worst = std::max( worst, relative_difference( r.matrices, ref ) );
            ++runs;
         }
      }
   }
   const double t = seconds_since( t0 );
   return { worst <= 1e-12 && t < 60.0,
            std::to_string( runs ) + " runs, max rel. Frobenius diff " + fmt( "%.2e", worst ) + ", " + fmt( "%.1f s", t ) };
}

Outcome dual_diagonal()
{
   double worst = 0.0;
   for ( int m : { 1, 2, 4 } ) {
      const MetricsReport r = run( two_block( m, 4, GhostingStrategy::binning, LbMode::none ) );
      double diag = 0.0, off = 0.0;
      for ( const Triplet& t : r.matrices.D ) {
         if ( t.row == t.col ) {
            diag = std::max( diag, std::abs( t.value ) );
         } else {
            off = std::max( off, std::abs( t.value ) );
         }
      }
      worst = std::max( worst, off / diag );
   }
   return { worst <= 1e-12, "max off-diagonal / max diagonal " + fmt( "%.2e", worst ) };
}

Outcome mass_oracle()
{
   const InterfaceMesh s = grid_mesh( 1, 0.0, 1.0, -1e-3, true, Side::slave );
   const InterfaceMesh m = grid_mesh( 1, 0.0, 1.0, 0.0, false, Side::master );
   const ElemData sd = elem_data( s, 0 ), md = elem_data( m, 0 );
   auto idx = []( const Vec3& x ) { return std::array<int, 2> { x.x > 0.5 ? 1 : 0, x.y > 0.5 ? 1 : 0 }; };

   double worst = 0.0;
   for ( BasisKind basis : { BasisKind::standard, BasisKind::dual } ) {
      MortarOptions opt;
      opt.basis = basis;
      opt.search_tol = 0.5;
      const PairResult r = integrate_pair( prepare_slave( sd, basis ), md, opt );
      if ( r.status != PairStatus::integrated ) { return { false, "pair not integrated" }; }
      for ( int j = 0; j < 4; ++j ) {
         const auto ij = idx( sd.x[j] );
         for ( int k = 0; k < 4; ++k ) {
            const auto ik = idx( sd.x[k] );
            const double expect = basis == BasisKind::standard ? hat_product( ij[0], ik[0] ) * hat_product( ij[1], ik[1] )
                                                               : ( j == k ? 0.25 : 0.0 );
            worst = std::max( worst, std::abs( r.D[j][k] - expect ) );
         }
         for ( int l = 0; l < 4; ++l ) {
            // M equals D on the coincident corner
            int k = 0;
            while ( idx( sd.x[k] ) != idx( md.x[l] ) ) {
               ++k;
            }
            worst = std::max( worst, std::abs( r.M[j][l] - r.D[j][k] ) );
         }
      }
   }
   return { worst <= 1e-12, "max deviation " + fmt( "%.2e", worst ) };
}

Outcome conservation()
{
   const MetricsReport r = run( two_block( 4, 4, GhostingStrategy::binning, LbMode::none ) );
   const InterfaceMesh& s = r.final_scenario.slave;
   std::vector<double> coverage( s.elems.size(), 0.0 );
   for ( const LocalMortar& l : r.locals ) {
      for ( const SlaveDiagnostics& d : l.slaves ) {
         coverage[d.elem] = d.covered_fraction();
      }
   }
   std::vector<bool> covered( s.coords.size(), true );
   for ( ElemId e = 0; e < s.num_elems(); ++e ) {
      if ( coverage[e] < 1.0 - 1e-12 ) {
         for ( NodeId n : s.elems[e] ) {
            covered[n] = false;
         }
      }
   }
   std::vector<double> rd( s.coords.size(), 0.0 ), rm( s.coords.size(), 0.0 );
   for ( const Triplet& t : r.matrices.D ) {
      rd[t.row] += t.value;
   }
   for ( const Triplet& t : r.matrices.M ) {
      rm[t.row] += t.value;
   }
   double worst = 0.0;
   int rows = 0;
   for ( std::size_t j = 0; j < covered.size(); ++j ) {
      if ( !covered[j] ) { continue; }
      ++rows;
      worst = std::max( worst, std::abs( rd[j] - rm[j] ) );
   }
   return { rows > 0 && worst <= 1e-10, std::to_string( rows ) + " covered rows, max |sum D - sum M| " + fmt( "%.2e", worst ) };
}

Outcome patch_test()
{
   Scenario sc;
   sc.slave = grid_mesh( 6, 0.0, 1.0, -1e-3, true, Side::slave );
   sc.master = grid_mesh( 6, 0.0, 1.0, 0.0, false, Side::master );
   auto field = []( const Vec3& x ) { return -0.4 + 2.1 * x.x + 0.6 * x.y; };
   double worst = 0.0;
   for ( BasisKind basis : { BasisKind::standard, BasisKind::dual } ) {
      MortarOptions opt;
      opt.basis = basis;
      opt.search_tol = 0.5 * sc.slave.max_edge();
      const MortarMatrices mm = assemble_serial( sc, opt );
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero( mm.slave_nodes, mm.slave_nodes );
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero( mm.slave_nodes );
      for ( const Triplet& t : mm.D ) {
         D( t.row, t.col ) += t.value;
      }
      for ( const Triplet& t : mm.M ) {
         rhs( t.row ) += t.value * field( sc.master.coords[t.col] );
      }
      const Eigen::VectorXd u = D.fullPivLu().solve( rhs );
      for ( int j = 0; j < mm.slave_nodes; ++j ) {
         worst = std::max( worst, std::abs( u( j ) - field( sc.slave.coords[j] ) ) );
      }
   }
   return { worst <= 1e-10, "max nodal error " + fmt( "%.2e", worst ) };
}

Outcome node_counts()
{
   const Scenario a = build_two_block_scenario( 4 );
   const Scenario b = build_two_block_scenario( 32 );
   const bool ok = a.slave.num_nodes() == 441 && a.slave.num_elems() == 400 && b.slave.num_nodes() == 25921 &&
                   b.slave.num_elems() == 25600;
   return { ok, "m=4: " + std::to_string( a.slave.num_nodes() ) + "/" + std::to_string( a.slave.num_elems() ) +
                   ", m=32: " + std::to_string( b.slave.num_nodes() ) + "/" + std::to_string( b.slave.num_elems() ) };
}

Outcome ghost_volume()
{
   const auto t0 = std::chrono::steady_clock::now();
   const MetricsReport red = run( two_block( 16, 16, GhostingStrategy::redundant, LbMode::none ) );
   const MetricsReport bin = run( two_block( 16, 16, GhostingStrategy::binning, LbMode::none ) );
   const int P = 16;
   const InterfaceMesh& master = red.final_scenario.master;

   // redundant ghosts everything a rank does not own
   SimWorld w = spawn_world( P, make_scenario( red.config.scenario ) );
   bool exact = true;
   for ( const RankRow& row : red.rows ) {
      const long owned = static_cast<long>( w.master_dd().owned_nodes( row.rank ).size() );
      exact = exact && row.ghost_ma_nodes == master.num_nodes() - owned;
   }
   const double avg_owned = static_cast<double>( master.num_nodes() ) / P;
   const double ratio = static_cast<double>( red.max_ghost_ma_nodes ) / static_cast<double>( bin.max_ghost_ma_nodes );
   const double t = seconds_since( t0 );
   const bool ok = ratio >= 5.0 && exact && bin.max_ghost_ma_nodes <= 27.0 * avg_owned && t < 300.0;
   return { ok, "max ghosted nodes redundant " + std::to_string( red.max_ghost_ma_nodes ) + " vs binning " +
                   std::to_string( bin.max_ghost_ma_nodes ) + " (ratio " + fmt( "%.1f", ratio ) + "), redundant = total - owned: " +
                   ( exact ? "yes" : "no" ) + ", " + fmt( "%.1f s", t ) };
}

/// Counts brute-force proximity pairs that are not evaluable on the slave owner.
long missed_pairs( SimWorld& w, const GhostPlan& plan, double tol )
{
   const Scenario& sc = w.scenario();
   long missed = 0;
   for ( ElemId s = 0; s < sc.slave.num_elems(); ++s ) {
      Aabb a = sc.slave.bounds( s );
      a.inflate( tol );
      const RankId p = w.slave_dd().elem_owner[s];
      for ( ElemId m = 0; m < sc.master.num_elems(); ++m ) {
         Aabb b = sc.master.bounds( m );
         b.inflate( tol );
         bool hit = true;
         for ( std::size_t d = 0; d < 3; ++d ) {
            if ( a.lo[d] > b.hi[d] || b.lo[d] > a.hi[d] ) { hit = false; }
         }
         if ( !hit || w.master_dd().elem_owner[m] == p ) { continue; }
         if ( !std::binary_search( plan.elems[p].begin(), plan.elems[p].end(), m ) ) { ++missed; }
      }
   }
   return missed;
}

Outcome binning_completeness()
{
   long missed = 0, steps = 0;
   auto sweep = [&]( const ScenarioConfig& cfg, int P, bool rebalance ) {
      SimWorld w = spawn_world( P, make_scenario( cfg ) );
      const double tol = 0.5 * w.scenario().slave.max_edge();
      for ( int k = 0; k < w.scenario().steps; ++k ) {
         const std::vector<Vec3> before = w.scenario().slave.coords;
         w.begin_step( k );
         if ( rebalance && k == 0 ) { rebalance_interface( w, {}, 1.03 ); }
         const Scenario& sc = w.scenario();
         double v = 0.0;
         for ( std::size_t n = 0; n < before.size(); ++n ) {
            v += norm( sc.slave.coords[n] - before[n] );
         }
         v /= static_cast<double>( before.size() ) * sc.dt;
         const BinGrid grid = build_bin_grid( sc.slave, sc.master, sc.dt, v, tol );
         missed += missed_pairs( w, plan_binning( grid, sc.slave, w.slave_dd(), w.master_dd() ), tol );
         ++steps;
      }
   };
   for ( int m : { 1, 2, 4 } ) {
      ScenarioConfig c;
      c.refine = m;
      for ( int P : { 2, 4, 8 } ) {
         sweep( c, P, false );
         sweep( c, P, true );
      }
   }
   ScenarioConfig mp;
   mp.scenario = "moving_patch";
   mp.steps = 200;
   mp.approach_steps = 20;
   mp.dt = 0.01;
   sweep( mp, 8, false );
   sweep( mp, 8, true );
   return { missed == 0, std::to_string( missed ) + " missed pairs over " + std::to_string( steps ) + " step evaluations" };
}

struct PatchRuns
{
   MetricsReport none, stat, dyn;
   double seconds = 0.0;
};

const PatchRuns& patch_runs()
{
   static const PatchRuns runs = [] {
      PatchRuns r;
      const auto t0 = std::chrono::steady_clock::now();
      r.none = run( moving_patch( LbMode::none ) );
      r.stat = run( moving_patch( LbMode::static_once ) );
      r.dyn = run( moving_patch( LbMode::dynamic ) );
      r.seconds = seconds_since( t0 );
      return r;
   }();
   return runs;
}

Outcome lb_benefit()
{
   const PatchRuns& r = patch_runs();
   const double n = static_cast<double>( r.none.accumulated_work );
   const double s = static_cast<double>( r.stat.accumulated_work );
   const double d = static_cast<double>( r.dyn.accumulated_work );
   const bool ok = d <= 0.6 * n && d < s && s < n && r.seconds < 600.0;
   return { ok, "sum max W: none " + fmt( "%.0f", n ) + ", static " + fmt( "%.0f", s ) + ", dynamic " + fmt( "%.0f", d ) +
                   " (dynamic/none " + fmt( "%.3f", d / n ) + ", " + std::to_string( r.dyn.rebalances ) + " rebalances), " +
                   fmt( "%.1f s", r.seconds ) };
}

Outcome trigger_semantics()
{
   const double inf = std::numeric_limits<double>::infinity();
   const double values[] = { 1.0, std::nextafter( 1.8, 0.0 ), 1.8, std::nextafter( 1.8, 2.0 ), 2.0, 5.0, inf };
   long cases = 0, wrong = 0;
   for ( double t : values ) {
      for ( double e : values ) {
         for ( double th : { 1.0, 1.8, 2.0 } ) {
            for ( double eh : { -1.0, 1.0, 1.8, 2.0, 5.0 } ) {
               for ( LbMode mode : { LbMode::none, LbMode::static_once, LbMode::dynamic } ) {
                  LbPolicy p;
                  p.mode = mode;
                  p.eta_t_hat = th;
                  p.eta_e_hat = eh;
                  ImbalanceReport rep;
                  rep.eta_t = t;
                  rep.eta_e = e;
                  const double ehat = eh < 0.0 ? th : eh;
                  const bool expect = mode == LbMode::dynamic && ( t >= th || e >= ehat );
                  wrong += should_rebalance( rep, p ) != expect;
                  ++cases;
               }
            }
         }
      }
   }
   const std::vector<double> idle { 3.0, 0.0 };
   const bool idle_inf = imbalance_ratio( idle ) == inf;

   const MetricsReport& stat = patch_runs().stat;
   int fired = 0;
   bool first = !stat.decisions.empty() && stat.decisions.front().fired;
   for ( const LbDecision& d : stat.decisions ) {
      fired += d.fired;
   }
   const bool ok = wrong == 0 && idle_inf && fired == 1 && first && stat.decisions.size() == 200;
   return { ok, std::to_string( cases ) + " trigger cases, " + std::to_string( wrong ) +
                   " wrong; static run fired " + std::to_string( fired ) + " time(s) over " +
                   std::to_string( stat.decisions.size() ) + " steps" };
}

Outcome post_rebalance_balance()
{
   const MetricsReport& d = patch_runs().dyn;
   const int P = d.config.nranks;
   double worst = 1.0;
   int events = 0;
   for ( const StepSummary& s : d.steps ) {
      if ( !s.rebalanced ) { continue; }
      ++events;
      long lo = std::numeric_limits<long>::max(), hi = 0;
      for ( int p = 0; p < P; ++p ) {
         const long c = d.rows[static_cast<std::size_t>( s.step * P + p )].owned_sl_elems;
         lo = std::min( lo, c );
         hi = std::max( hi, c );
      }
      worst = std::max( worst, lo > 0 ? static_cast<double>( hi ) / lo : std::numeric_limits<double>::infinity() );
   }
   return { events > 0 && worst <= 1.15,
            std::to_string( events ) + " rebalances, worst post-rebalance eta_e " + fmt( "%.4f", worst ) };
}

Outcome round_robin_oracle()
{
   double worst = 0.0;
   for ( int P : { 2, 3, 4 } ) {
      const MetricsReport rr = run( two_block( 2, P, GhostingStrategy::round_robin, LbMode::none ) );
      const MetricsReport red = run( two_block( 2, P, GhostingStrategy::redundant, LbMode::none ) );
      worst = std::max( worst, relative_difference( rr.matrices, red.matrices ) );
   }
   return { worst <= 1e-12, "max rel. Frobenius diff " + fmt( "%.2e", worst ) };
}

std::string slurp( const std::filesystem::path& p )
{
   std::ifstream in( p, std::ios::binary );
   std::ostringstream s;
   s << in.rdbuf();
   return s.str();
}

Outcome determinism()
{
   const std::filesystem::path root = std::filesystem::temp_directory_path() / "mortarbench_acceptance";
   std::vector<RunConfig> configs;
   configs.push_back( two_block( 2, 4, GhostingStrategy::binning, LbMode::dynamic, 3 ) );
   RunConfig mp = moving_patch( LbMode::dynamic );
   mp.scenario.steps = 40;
   mp.threads = 4;
   configs.push_back( mp );
   RunConfig rr = two_block( 2, 3, GhostingStrategy::round_robin, LbMode::static_once, 2 );
   rr.threads = 3;
   configs.push_back( rr );

   bool same = true;
   for ( std::size_t i = 0; i < configs.size(); ++i ) {
      std::string text[2];
      for ( int k = 0; k < 2; ++k ) {
         const auto dir = root / ( std::to_string( i ) + "_" + std::to_string( k ) );
         write_outputs( run( configs[i] ), dir );
         text[k] = slurp( dir / "metrics.csv" );
      }
      same = same && !text[0].empty() && text[0] == text[1];
   }
   std::filesystem::remove_all( root );
   return { same, std::to_string( configs.size() ) + " configs run twice, metrics.csv byte-identical: " + ( same ? "yes" : "no" ) };
}

} // namespace

int main()
{
   struct Criterion
   {
      const char* name;
      std::function<Outcome()> check;
   };
   const Criterion criteria[] = {
      { "strategy/distribution invariance", invariance },
      { "dual diagonality", dual_diagonal },
      { "mass-matrix oracle", mass_oracle },
      { "conservation on covered rows", conservation },
      { "patch test", patch_test },
      { "node-count fidelity", node_counts },
      { "ghost-volume reduction", ghost_volume },
      { "binning completeness", binning_completeness },
      { "dynamic load-balancing benefit", lb_benefit },
      { "trigger semantics", trigger_semantics },
      { "post-rebalance balance", post_rebalance_balance },
      { "round-robin oracle", round_robin_oracle },
      { "determinism", determinism },
   };

   int failed = 0;
   int id = 1;
   for ( const Criterion& c : criteria ) {
      Outcome o;
      try {
         o = c.check();
      } catch ( const std::exception& e ) {
         o = { false, std::string( "exception: " ) + e.what() };
      }
      failed += !o.pass;
      std::printf( "%s %2d %-34s %s\n", o.pass ? "PASS" : "FAIL", id++, c.name, o.detail.c_str() );
      std::fflush( stdout );
   }
   std::printf( "%d/%d criteria passed\n", 13 - failed, 13 );
   return failed == 0 ? 0 : 1;
}
