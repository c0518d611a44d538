#include "mortarbench/geomesh.hpp"

#include "mortarbench/error.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace mortarbench
{

std::array<Vec3, 4> InterfaceMesh::corners( ElemId e ) const
{
   const Quad& q = elems[static_cast<std::size_t>( e )];
   return { coords[q[0]], coords[q[1]], coords[q[2]], coords[q[3]] };
}

Vec3 InterfaceMesh::centroid( ElemId e ) const
{
   const auto x = corners( e );
   return 0.25 * ( x[0] + x[1] + x[2] + x[3] );
}

Aabb InterfaceMesh::bounds( ElemId e ) const
{
   Aabb box;
   for ( const Vec3& p : corners( e ) ) {
      box.expand( p );
   }
   return box;
}

Aabb InterfaceMesh::bounds() const
{
   Aabb box;
   for ( const Vec3& p : coords ) {
      box.expand( p );
   }
   return box;
}

double InterfaceMesh::max_edge() const
{
   double h = 0.0;
   for ( ElemId e = 0; e < num_elems(); ++e ) {
      const auto x = corners( e );
      for ( int i = 0; i < 4; ++i ) {
         h = std::max( h, norm( x[( i + 1 ) % 4] - x[i] ) );
      }
   }
   return h;
}

double area_tolerance( const InterfaceMesh& mesh )
{
   if ( mesh.coords.empty() ) { return 0.0; }
   const Vec3 ext = mesh.bounds().extent();
   return 1e-12 * dot( ext, ext );
}

Vec3 facet_cross( const std::array<Vec3, 4>& x )
{
   return cross( x[2] - x[0], x[3] - x[1] );
}

Vec3 facet_normal( const std::array<Vec3, 4>& x, double area_tol )
{
   const Vec3 c = facet_cross( x );
   const double len = norm( c );
   // |d1 x d2| is twice the area of the (planar) quad
   if ( !( 0.5 * len > area_tol ) ) {
      throw GeometryError( "degenerate facet: diagonal cross product below tolerance" );
   }
   return c * ( 1.0 / len );
}

void validate( const InterfaceMesh& mesh )
{
   const double tol = area_tolerance( mesh );
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      for ( NodeId n : mesh.elems[e] ) {
         if ( n < 0 || n >= mesh.num_nodes() ) {
            throw GeometryError( "element " + std::to_string( e ) + " references missing node " + std::to_string( n ) );
         }
      }
      if ( !( 0.5 * norm( facet_cross( mesh.corners( e ) ) ) > tol ) ) {
         throw GeometryError( "element " + std::to_string( e ) + " is degenerate" );
      }
   }
   if ( mesh.normals.size() != mesh.coords.size() ) {
      throw GeometryError( "normal field size does not match node count" );
   }
   for ( NodeId n = 0; n < mesh.num_nodes(); ++n ) {
      if ( std::abs( norm( mesh.normals[n] ) - 1.0 ) > 1e-12 ) {
         throw GeometryError( "normal at node " + std::to_string( n ) + " is not unit length" );
      }
   }
}

std::vector<Vec3> averaged_nodal_normals( const InterfaceMesh& mesh )
{
   const double tol = area_tolerance( mesh );
   std::vector<Vec3> sum( mesh.coords.size() );
   std::vector<char> touched( mesh.coords.size(), 0 );
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      const Vec3 c = facet_cross( mesh.corners( e ) );
      const double len = norm( c );
      if ( !( 0.5 * len > tol ) ) { continue; }
      for ( NodeId n : mesh.elems[e] ) {
         sum[n] += c * ( 1.0 / len );
         touched[n] = 1;
      }
   }
   for ( std::size_t n = 0; n < sum.size(); ++n ) {
      const double len = norm( sum[n] );
      if ( !touched[n] || !( len > 1e-12 ) ) {
         throw GeometryError( "cannot average normals at node " + std::to_string( n ) );
      }
      sum[n] *= 1.0 / len;
   }
   return sum;
}

FacetPlane facet_plane( const std::array<Vec3, 4>& x, const std::array<Vec3, 4>& n )
{
   FacetPlane plane;
   plane.origin = 0.25 * ( x[0] + x[1] + x[2] + x[3] );
   const Vec3 nsum = 0.25 * ( n[0] + n[1] + n[2] + n[3] );
   const double len = norm( nsum );
   if ( !( len > 1e-12 ) ) {
      throw GeometryError( "degenerate facet plane: nodal normals cancel" );
   }
   plane.normal = nsum * ( 1.0 / len );

   const Vec3 edge = x[1] - x[0];
   Vec3 t = edge - dot( edge, plane.normal ) * plane.normal;
   const double tl = norm( t );
   if ( !( tl > 1e-14 * norm( edge ) ) || !( tl > 0.0 ) ) {
      throw GeometryError( "degenerate facet plane: first edge parallel to normal" );
   }
   plane.e1 = t * ( 1.0 / tl );
   plane.e2 = cross( plane.normal, plane.e1 );
   return plane;
}

FacetPlane facet_plane( const InterfaceMesh& mesh, ElemId e )
{
   const Quad& q = mesh.elems[static_cast<std::size_t>( e )];
   return facet_plane( mesh.corners( e ), { mesh.normals[q[0]], mesh.normals[q[1]], mesh.normals[q[2]], mesh.normals[q[3]] } );
}

Vec3 RigidTransform::apply( const Vec3& p ) const
{
   Vec3 out = p;
   if ( angle != 0.0 ) {
      // Rodrigues rotation about the unit axis through axis_point
      const Vec3 k = axis_dir * ( 1.0 / norm( axis_dir ) );
      const Vec3 v = p - axis_point;
      const double c = std::cos( angle );
      const double s = std::sin( angle );
      out = axis_point + v * c + cross( k, v ) * s + k * ( dot( k, v ) * ( 1.0 - c ) );
   }
   return out + translation;
}

namespace
{

// Structured grid of (nu+1) x (nv+1) nodes, node(i, j) = i * (nv + 1) + j.
template <class Position>
void fill_grid( InterfaceMesh& mesh, int nu, int nv, Position&& pos, bool flip )
{
   mesh.coords.clear();
   mesh.elems.clear();
   for ( int i = 0; i <= nu; ++i ) {
      for ( int j = 0; j <= nv; ++j ) {
         mesh.coords.push_back( pos( i, j ) );
      }
   }
   auto id = [nv]( int i, int j ) { return i * ( nv + 1 ) + j; };
   for ( int i = 0; i < nu; ++i ) {
      for ( int j = 0; j < nv; ++j ) {
         if ( flip ) {
            mesh.elems.push_back( { id( i, j ), id( i, j + 1 ), id( i + 1, j + 1 ), id( i + 1, j ) } );
         } else {
            mesh.elems.push_back( { id( i, j ), id( i + 1, j ), id( i + 1, j + 1 ), id( i, j + 1 ) } );
         }
      }
   }
}

int cell_index( int i, int j, int k, int nj, int nk ) { return ( i * nj + j ) * nk + k; }

} // namespace

Scenario build_two_block_scenario( int refine, int steps, double dt )
{
   if ( refine < 1 ) { throw ConfigError( "refine must be >= 1" ); }
   if ( steps < 1 ) { throw ConfigError( "steps must be >= 1" ); }
   if ( !( dt > 0.0 ) ) { throw ConfigError( "dt must be > 0" ); }

   Scenario sc;
   sc.kind = ScenarioKind::two_block;
   sc.refine = refine;
   sc.steps = steps;
   sc.dt = dt;

   const int n = 5 * refine;
   const double pen = 0.001;

   // slave: bottom face of the small block, outward normal -z
   sc.slave.side = Side::slave;
   fill_grid( sc.slave, n, n, [&]( int i, int j ) {
      return Vec3 { 0.1 + 0.8 * i / n, 0.1 + 0.8 * j / n, -pen };
   }, true );

   // master: top face of the large block, outward normal +z
   sc.master.side = Side::master;
   fill_grid( sc.master, n, n, [&]( int i, int j ) {
      return Vec3 { 1.0 * i / n, 1.0 * j / n, 0.0 };
   }, false );

   sc.slave.normals = averaged_nodal_normals( sc.slave );
   sc.master.normals = averaged_nodal_normals( sc.master );
   sc.slave_reference = sc.slave.coords;
   sc.motion.assign( static_cast<std::size_t>( steps ), RigidTransform {} );

   const int nb = std::min( n, 10 );
   const double hex_ratio = static_cast<double>( n ) * n * n / ( static_cast<double>( nb ) * nb * nb );
   const double node_ratio = static_cast<double>( n + 1 ) * ( n + 1 ) * ( n + 1 ) / ( static_cast<double>( nb ) * nb * nb );
   auto make_proxy = [&]( BulkProxy& bulk, double x0, double len, double z0, int face_layer ) {
      bulk.cells.clear();
      for ( int i = 0; i < nb; ++i ) {
         for ( int j = 0; j < nb; ++j ) {
            for ( int k = 0; k < nb; ++k ) {
               bulk.cells.push_back( { x0 + len * ( i + 0.5 ) / nb, x0 + len * ( j + 0.5 ) / nb, z0 + len * ( k + 0.5 ) / nb } );
            }
         }
      }
      bulk.elems_per_cell = hex_ratio;
      bulk.nodes_per_cell = node_ratio;
      bulk.face_cell.clear();
      for ( int i = 0; i < n; ++i ) {
         for ( int j = 0; j < n; ++j ) {
            bulk.face_cell.push_back( cell_index( i * nb / n, j * nb / n, face_layer, nb, nb ) );
         }
      }
   };
   make_proxy( sc.slave_bulk, 0.1, 0.8, -pen, 0 );
   make_proxy( sc.master_bulk, 0.0, 1.0, -1.0, nb - 1 );
   return sc;
}

Scenario build_moving_patch_scenario( int refine, int steps, int approach_steps, double dt )
{
   using G = MovingPatchGeometry;
   if ( refine < 1 ) { throw ConfigError( "refine must be >= 1" ); }
   if ( approach_steps < 0 || steps < approach_steps || steps < 1 ) {
      throw ConfigError( "moving_patch requires steps >= approach_steps >= 0 and steps >= 1" );
   }
   if ( !( dt > 0.0 ) ) { throw ConfigError( "dt must be > 0" ); }

   Scenario sc;
   sc.kind = ScenarioKind::moving_patch;
   sc.refine = refine;
   sc.steps = steps;
   sc.approach_steps = approach_steps;
   sc.dt = dt;

   const int nc = G::circ_per_refine * refine;
   const int na = G::axial_per_refine * refine;
   const double zc = G::radius + G::initial_gap;
   const double two_pi = 2.0 * std::numbers::pi;

   // Slave: outer tube surface, closed in the circumferential direction.
   InterfaceMesh& s = sc.slave;
   s.side = Side::slave;
   for ( int i = 0; i < nc; ++i ) {
      const double th = two_pi * i / nc;
      for ( int j = 0; j <= na; ++j ) {
         s.coords.push_back( { G::radius * std::cos( th ), G::length * j / na, zc + G::radius * std::sin( th ) } );
      }
   }
   auto sid = [na, nc]( int i, int j ) { return ( i % nc ) * ( na + 1 ) + j; };
   for ( int i = 0; i < nc; ++i ) {
      for ( int j = 0; j < na; ++j ) {
         s.elems.push_back( { sid( i, j ), sid( i, j + 1 ), sid( i + 1, j + 1 ), sid( i + 1, j ) } );
      }
   }

   // Master: block top at z = 0, deliberately not aligned with the slave rows.
   const double xlo = -1.25, xhi = 1.25, ylo = -0.1, yhi = 0.9;
   const int nx = 25 * refine, ny = 9 * refine;
   sc.master.side = Side::master;
   fill_grid( sc.master, nx, ny, [&]( int i, int j ) {
      return Vec3 { xlo + ( xhi - xlo ) * i / nx, ylo + ( yhi - ylo ) * j / ny, 0.0 };
   }, false );

   sc.slave.normals = averaged_nodal_normals( sc.slave );
   sc.master.normals = averaged_nodal_normals( sc.master );
   sc.slave_reference = sc.slave.coords;

   const double travel = G::initial_gap + G::penetration;
   const int rolling = steps - approach_steps;
   for ( int k = 0; k < steps; ++k ) {
      RigidTransform t;
      t.axis_point = { 0.0, 0.0, zc };
      t.axis_dir = { 0.0, 1.0, 0.0 };
      if ( k < approach_steps ) {
         t.translation = { 0.0, 0.0, -travel * ( k + 1 ) / approach_steps };
      } else {
         t.translation = { 0.0, 0.0, approach_steps > 0 ? -travel : 0.0 };
         t.angle = std::numbers::pi * ( k - approach_steps + 1 ) / rolling;
      }
      sc.motion.push_back( t );
   }

   // Tube bulk proxy in (theta, r, y); the interface sits on the outer radial layer.
   const int ntb = std::min( nc, 24 ), nrb = 2, nyb = std::min( na, 4 );
   const int tube_hex = nc * na * 3 * refine;
   sc.slave_bulk.elems_per_cell = static_cast<double>( tube_hex ) / ( ntb * nrb * nyb );
   sc.slave_bulk.nodes_per_cell = static_cast<double>( nc * ( na + 1 ) * ( 3 * refine + 1 ) ) / ( ntb * nrb * nyb );
   for ( int i = 0; i < ntb; ++i ) {
      const double th = two_pi * ( i + 0.5 ) / ntb;
      for ( int j = 0; j < nyb; ++j ) {
         for ( int k = 0; k < nrb; ++k ) {
            const double r = G::inner_radius + ( G::radius - G::inner_radius ) * ( k + 0.5 ) / nrb;
            sc.slave_bulk.cells.push_back( { r * std::cos( th ), G::length * ( j + 0.5 ) / nyb, zc + r * std::sin( th ) } );
         }
      }
   }
   for ( int i = 0; i < nc; ++i ) {
      for ( int j = 0; j < na; ++j ) {
         sc.slave_bulk.face_cell.push_back( cell_index( i * ntb / nc, j * nyb / na, nrb - 1, nyb, nrb ) );
      }
   }

   const int nxb = std::min( nx, 10 ), nyb2 = std::min( ny, 4 ), nzb = 2;
   const double depth = 0.5;
   const int block_hex = nx * ny * 5 * refine;
   sc.master_bulk.elems_per_cell = static_cast<double>( block_hex ) / ( nxb * nyb2 * nzb );
   sc.master_bulk.nodes_per_cell = static_cast<double>( ( nx + 1 ) * ( ny + 1 ) * ( 5 * refine + 1 ) ) / ( nxb * nyb2 * nzb );
   for ( int i = 0; i < nxb; ++i ) {
      for ( int j = 0; j < nyb2; ++j ) {
         for ( int k = 0; k < nzb; ++k ) {
            sc.master_bulk.cells.push_back( { xlo + ( xhi - xlo ) * ( i + 0.5 ) / nxb, ylo + ( yhi - ylo ) * ( j + 0.5 ) / nyb2,
                                              -depth + depth * ( k + 0.5 ) / nzb } );
         }
      }
   }
   for ( int i = 0; i < nx; ++i ) {
      for ( int j = 0; j < ny; ++j ) {
         sc.master_bulk.face_cell.push_back( cell_index( i * nxb / nx, j * nyb2 / ny, nzb - 1, nyb2, nzb ) );
      }
   }
   return sc;
}

void advance_step( Scenario& scenario, int step )
{
   if ( step < 0 || step >= static_cast<int>( scenario.motion.size() ) ) {
      throw ConfigError( "step " + std::to_string( step ) + " outside the motion schedule" );
   }
   const RigidTransform& t = scenario.motion[static_cast<std::size_t>( step )];
   for ( std::size_t n = 0; n < scenario.slave.coords.size(); ++n ) {
      scenario.slave.coords[n] = t.apply( scenario.slave_reference[n] );
   }
   scenario.slave.normals = averaged_nodal_normals( scenario.slave );
}

Scenario make_scenario( const ScenarioConfig& config )
{
   if ( config.scenario == "two_block" ) {
      return build_two_block_scenario( config.refine, config.steps, config.dt );
   }
   if ( config.scenario == "moving_patch" ) {
      return build_moving_patch_scenario( config.refine, config.steps, config.approach_steps, config.dt );
   }
   throw ConfigError( "unknown scenario '" + config.scenario + "'" );
}

void write_vtk( const InterfaceMesh& mesh, std::ostream& out )
{
   out << "# vtk DataFile Version 3.0\n";
   out << ( mesh.side == Side::slave ? "slave" : "master" ) << " interface\n";
   out << "ASCII\nDATASET POLYDATA\n";
   out.precision( 17 );
   out << "POINTS " << mesh.num_nodes() << " double\n";
   for ( const Vec3& p : mesh.coords ) {
      out << p.x << ' ' << p.y << ' ' << p.z << '\n';
   }
   out << "POLYGONS " << mesh.num_elems() << ' ' << 5 * mesh.num_elems() << '\n';
   for ( const Quad& q : mesh.elems ) {
      out << 4 << ' ' << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
   }
   if ( mesh.normals.size() == mesh.coords.size() ) {
      out << "POINT_DATA " << mesh.num_nodes() << "\nNORMALS normals double\n";
      for ( const Vec3& n : mesh.normals ) {
         out << n.x << ' ' << n.y << ' ' << n.z << '\n';
      }
   }
}

} // namespace mortarbench
