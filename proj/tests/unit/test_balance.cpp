#include "fixtures.hpp"

#include "mortarbench/balance.hpp"
#include "mortarbench/error.hpp"

#include <doctest.h>

#include <limits>

using namespace mbtest;

namespace
{

const double inf = std::numeric_limits<double>::infinity();

ImbalanceReport report( double eta_t, double eta_e )
{
   ImbalanceReport r;
   r.eta_t = eta_t;
   r.eta_e = eta_e;
   return r;
}

LbPolicy dynamic_policy( double t, double e = -1.0 )
{
   LbPolicy p;
   p.mode = LbMode::dynamic;
   p.eta_t_hat = t;
   p.eta_e_hat = e;
   return p;
}

} // namespace

TEST_CASE( "imbalance ratios" )
{
   const std::vector<double> clocks { 2, 1, 1, 1 };
   const std::vector<double> same { 3, 3, 3 };
   const std::vector<double> idle { 30, 0 };
   const std::vector<double> zeros { 0, 0 };
   CHECK( imbalance_ratio( clocks ) == 2.0 );
   CHECK( imbalance_ratio( same ) == 1.0 );
   CHECK( imbalance_ratio( idle ) == inf );
   CHECK( imbalance_ratio( zeros ) == 1.0 );
   CHECK_THROWS_AS( imbalance_ratio( std::vector<double> {} ), ConfigError );

   const ImbalanceReport r = measure_imbalance( clocks, std::vector<double> { 1, 1, 1, 0 } );
   CHECK( r.eta_t == 2.0 );
   CHECK( r.eta_e == inf );
   CHECK_THROWS_AS( measure_imbalance( clocks, same ), ConfigError );
}

TEST_CASE( "trigger truth table" )
{
   CHECK( should_rebalance( report( 1.9, 1.0 ), dynamic_policy( 1.8 ) ) );
   CHECK_FALSE( should_rebalance( report( 1.0, 1.0 ), dynamic_policy( 1.8, 1.5 ) ) );
   CHECK( should_rebalance( report( 1.0, 5.0 ), dynamic_policy( 1.8, 2.0 ) ) );

   // boundaries are inclusive
   CHECK( should_rebalance( report( 1.8, 1.0 ), dynamic_policy( 1.8 ) ) );
   CHECK_FALSE( should_rebalance( report( std::nextafter( 1.8, 0.0 ), 1.0 ), dynamic_policy( 1.8 ) ) );
   CHECK( should_rebalance( report( 1.0, 2.0 ), dynamic_policy( 1.8, 2.0 ) ) );
   CHECK_FALSE( should_rebalance( report( 1.0, std::nextafter( 2.0, 0.0 ) ), dynamic_policy( 1.8, 2.0 ) ) );

   // the element threshold defaults to the time threshold
   CHECK( should_rebalance( report( 1.0, 1.8 ), dynamic_policy( 1.8 ) ) );
   CHECK_FALSE( should_rebalance( report( 1.0, 1.79 ), dynamic_policy( 1.8 ) ) );

   // an idle rank always fires
   CHECK( should_rebalance( report( inf, 1.0 ), dynamic_policy( 1e300, 1e300 ) ) );
   CHECK( should_rebalance( report( 1.0, inf ), dynamic_policy( 1e300, 1e300 ) ) );

   // grid over both ratios and thresholds
   const double values[] = { 1.0, 1.5, 1.8, 2.0, 3.0, inf };
   for ( double t : values ) {
      for ( double e : values ) {
         for ( double th : { 1.0, 1.8, 2.5 } ) {
            for ( double eh : { 1.0, 2.0, 3.0 } ) {
               const bool expect = t >= th || e >= eh;
               CHECK( should_rebalance( report( t, e ), dynamic_policy( th, eh ) ) == expect );
               LbPolicy off = dynamic_policy( th, eh );
               off.mode = LbMode::static_once;
               CHECK_FALSE( should_rebalance( report( t, e ), off ) );
            }
         }
      }
   }

   CHECK_THROWS_AS( validate( dynamic_policy( 0.5 ) ), ConfigError );
   CHECK_THROWS_AS( validate( dynamic_policy( 1.8, 0.9 ) ), ConfigError );
}

TEST_CASE( "rebalance on a structured slave" )
{
   SimWorld w = spawn_world( 4, build_two_block_scenario( 4 ) );
   w.begin_step( 0 );
   const RebalanceResult r = rebalance_interface( w, {}, 1.03 );
   CHECK( r.migrated_elems > 0 );
   CHECK( r.redist_cost > 0.0 );
   std::vector<double> counts;
   for ( long c : w.slave_dd().owned_elem_counts() ) {
      CHECK( c >= 97 );
      CHECK( c <= 103 );
      counts.push_back( static_cast<double>( c ) );
   }
   CHECK( imbalance_ratio( counts ) <= 1.1 );

   // fixed point
   const RebalanceResult again = rebalance_interface( w, {}, 1.03 );
   CHECK( again.migrated_elems == 0 );
   CHECK( again.redist_cost == 0.0 );
}

TEST_CASE( "activity-weighted rebalance spreads a contact strip" )
{
   SimWorld w = spawn_world( 4, build_two_block_scenario( 4 ) );
   w.begin_step( 0 );
   const InterfaceMesh& s = w.scenario().slave;
   std::vector<double> weights( s.elems.size(), 1.0 );
   double strip = 0.0;
   for ( ElemId e = 0; e < s.num_elems(); ++e ) {
      const Vec3 c = s.centroid( e );
      if ( c.y > 0.42 && c.y < 0.58 ) {
         weights[e] = 11.0;
         strip += 11.0;
      }
   }
   rebalance_interface( w, weights, 1.03 );
   std::vector<double> share( 4, 0.0 );
   for ( ElemId e = 0; e < s.num_elems(); ++e ) {
      if ( weights[e] > 1.0 ) { share[w.slave_dd().elem_owner[e]] += weights[e]; }
   }
   for ( double x : share ) {
      CHECK( x == doctest::Approx( strip / 4 ).epsilon( 0.05 ) );
   }
   CHECK( rebalance_interface( w, weights, 1.03 ).migrated_elems == 0 );
}

TEST_CASE( "step policy by mode" )
{
   auto decisions = []( LbMode mode ) {
      SimWorld w = spawn_world( 4, build_two_block_scenario( 2, 6 ) );
      LbPolicy p;
      p.mode = mode;
      StepStats stats;
      stats.work = { 1, 1, 1, 1 };
      stats.owned_slave_elems = { 25, 25, 25, 25 };
      stats.slave_cells.assign( 100, 1.0 );
      std::vector<bool> fired;
      for ( int step = 0; step < 6; ++step ) {
         w.begin_step( step );
         // a work spike after step 2 crosses the threshold
         if ( step == 3 ) { stats.work = { 4, 1, 1, 1 }; }
         fired.push_back( lb_step( w, p, step == 0 ? nullptr : &stats ).fired );
      }
      return fired;
   };
   CHECK( decisions( LbMode::none ) == std::vector<bool>( 6, false ) );
   CHECK( decisions( LbMode::static_once ) == std::vector<bool> { true, false, false, false, false, false } );
   CHECK( decisions( LbMode::dynamic ) == std::vector<bool> { true, false, false, true, true, true } );
}

TEST_CASE( "mode names" )
{
   for ( LbMode m : { LbMode::none, LbMode::static_once, LbMode::dynamic } ) {
      CHECK( lb_mode_from_string( to_string( m ) ) == m );
   }
   CHECK_THROWS_AS( lb_mode_from_string( "sometimes" ), ConfigError );
}
