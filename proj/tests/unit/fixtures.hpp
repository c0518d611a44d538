#pragma once

#include "mortarbench/geomesh.hpp"
#include "mortarbench/runtime.hpp"

#include <array>
#include <vector>

namespace mbtest
{

using namespace mortarbench;

/// Structured nu x nv grid on [x0, x0 + lx] x [y0, y0 + ly] at height z.
/// `down` orients the facets so that their normal points to -z.
inline InterfaceMesh grid_mesh( int nu, int nv, double x0, double y0, double lx, double ly, double z, bool down,
                                Side side )
{
   InterfaceMesh m;
   m.side = side;
   for ( int i = 0; i <= nu; ++i ) {
      for ( int j = 0; j <= nv; ++j ) {
         m.coords.push_back( { x0 + lx * i / nu, y0 + ly * j / nv, z } );
      }
   }
   auto id = [nv]( int i, int j ) { return i * ( nv + 1 ) + j; };
   for ( int i = 0; i < nu; ++i ) {
      for ( int j = 0; j < nv; ++j ) {
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

/// Slave grid just below a master grid, both facing each other.
inline Scenario pair_scenario( int ns, double sx0, double sl, int nm, double mx0, double ml, double gap = 1e-3 )
{
   Scenario sc;
   sc.slave = grid_mesh( ns, ns, sx0, sx0, sl, sl, -gap, true, Side::slave );
   sc.master = grid_mesh( nm, nm, mx0, mx0, ml, ml, 0.0, false, Side::master );
   sc.slave_reference = sc.slave.coords;
   sc.motion.assign( 1, RigidTransform {} );
   return sc;
}

inline ElemData record( const InterfaceMesh& mesh, ElemId e ) { return elem_data( mesh, e ); }

inline double factorial( int n )
{
   double f = 1.0;
   for ( int k = 2; k <= n; ++k ) {
      f *= k;
   }
   return f;
}

} // namespace mbtest
