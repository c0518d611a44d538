#include "fixtures.hpp"

#include "mortarbench/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mbtest;

TEST_CASE( "two_block slave counts" )
{
   const Scenario m1 = build_two_block_scenario( 1 );
   CHECK( m1.slave.num_nodes() == 36 );
   CHECK( m1.slave.num_elems() == 25 );

   const Scenario m4 = build_two_block_scenario( 4 );
   CHECK( m4.slave.num_nodes() == 441 );
   CHECK( m4.slave.num_elems() == 400 );

   const Scenario m32 = build_two_block_scenario( 32 );
   CHECK( m32.slave.num_nodes() == 25921 );
   CHECK( m32.slave.num_elems() == 25600 );
   CHECK_NOTHROW( validate( m32.slave ) );
   CHECK_NOTHROW( validate( m32.master ) );
}

TEST_CASE( "moving_patch refinement quadruples the slave" )
{
   const Scenario a = build_moving_patch_scenario( 1, 4, 2 );
   const Scenario b = build_moving_patch_scenario( 2, 4, 2 );
   CHECK( b.slave.num_elems() == 4 * a.slave.num_elems() );
   CHECK_NOTHROW( validate( a.slave ) );
   CHECK_THROWS_AS( build_moving_patch_scenario( 1, 4, 5 ), ConfigError );
}

TEST_CASE( "flat grid normals" )
{
   const InterfaceMesh up = grid_mesh( 3, 4, 0.0, 0.0, 1.0, 2.0, 0.5, false, Side::master );
   for ( const Vec3& n : up.normals ) {
      CHECK( n.x == doctest::Approx( 0.0 ) );
      CHECK( n.y == doctest::Approx( 0.0 ) );
      CHECK( n.z == doctest::Approx( 1.0 ) );
   }
   const InterfaceMesh down = grid_mesh( 2, 2, 0.0, 0.0, 1.0, 1.0, 0.0, true, Side::slave );
   CHECK( down.normals[4].z == doctest::Approx( -1.0 ) );
}

TEST_CASE( "cylinder nodal normals match a brute-force adjacency average" )
{
   const Scenario sc = build_moving_patch_scenario( 1, 2, 1 );
   const InterfaceMesh& s = sc.slave;
   for ( NodeId n = 0; n < s.num_nodes(); n += 7 ) {
      Vec3 sum;
      for ( ElemId e = 0; e < s.num_elems(); ++e ) {
         const auto& q = s.elems[e];
         if ( std::find( q.begin(), q.end(), n ) == q.end() ) { continue; }
         const auto x = s.corners( e );
         const Vec3 c = cross( x[2] - x[0], x[3] - x[1] );
         sum += c * ( 1.0 / norm( c ) );
      }
      const Vec3 ref = sum * ( 1.0 / norm( sum ) );
      CHECK( norm( s.normals[n] ) == doctest::Approx( 1.0 ).epsilon( 1e-12 ) );
      CHECK( norm( s.normals[n] - ref ) < 1e-12 );
   }
}

TEST_CASE( "facet plane of a unit square" )
{
   const InterfaceMesh m = grid_mesh( 1, 1, 0.0, 0.0, 1.0, 1.0, 0.0, false, Side::master );
   const FacetPlane p = facet_plane( m, 0 );
   CHECK( norm( p.origin - Vec3 { 0.5, 0.5, 0.0 } ) < 1e-15 );
   CHECK( p.normal.z == doctest::Approx( 1.0 ) );
   CHECK( std::abs( dot( p.e1, p.e2 ) ) < 1e-15 );
   CHECK( std::abs( dot( p.e1, p.normal ) ) < 1e-15 );

   InterfaceMesh t = m;
   for ( Vec3& x : t.coords ) {
      x += Vec3 { 3.0, -2.0, 1.5 };
   }
   const FacetPlane q = facet_plane( t, 0 );
   CHECK( norm( q.origin - ( p.origin + Vec3 { 3.0, -2.0, 1.5 } ) ) < 1e-14 );
   CHECK( norm( q.normal - p.normal ) < 1e-15 );
}

TEST_CASE( "degenerate facet is rejected" )
{
   const std::array<Vec3, 4> line { Vec3 { 0, 0, 0 }, Vec3 { 1, 0, 0 }, Vec3 { 2, 0, 0 }, Vec3 { 3, 0, 0 } };
   CHECK_THROWS_AS( facet_normal( line, 1e-12 ), GeometryError );
}

TEST_CASE( "rigid motion schedule" )
{
   Scenario sc = build_moving_patch_scenario( 1, 200, 20 );
   REQUIRE( sc.motion.size() == 200 );
   CHECK( sc.motion[19].angle == 0.0 );

   // rotation advances by one degree per rolling step
   const double deg = std::numbers::pi / 180.0;
   for ( int k = 20; k < 200; ++k ) {
      CHECK( sc.motion[k].angle == doctest::Approx( deg * ( k - 19 ) ).epsilon( 1e-12 ) );
   }

   // closed-form rotation about the y axis through the tube center
   advance_step( sc, 109 );
   const RigidTransform& t = sc.motion[109];
   const double c = std::cos( t.angle ), s = std::sin( t.angle );
   for ( NodeId n = 0; n < sc.slave.num_nodes(); n += 11 ) {
      const Vec3 r = sc.slave_reference[n] - t.axis_point;
      const Vec3 rot { c * r.x + s * r.z, r.y, -s * r.x + c * r.z };
      const Vec3 expect = t.axis_point + rot + t.translation;
      CHECK( norm( sc.slave.coords[n] - expect ) < 1e-12 );
   }

   const Scenario pure = build_moving_patch_scenario( 1, 5, 5 );
   CHECK( pure.motion.back().angle == 0.0 );
}

TEST_CASE( "rigid transform inverse" )
{
   RigidTransform fwd;
   fwd.translation = { 0.3, -1.2, 7.0 };
   RigidTransform back;
   back.translation = -fwd.translation;
   const Vec3 p { 0.123, 4.5, -6.0 };
   CHECK( norm( back.apply( fwd.apply( p ) ) - p ) < 1e-14 );
   CHECK( RigidTransform {}.apply( p ) == p );
}
