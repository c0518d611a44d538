#include "mortarbench/ghosting.hpp"

#include "mortarbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace mortarbench
{

namespace
{

void sort_unique( std::vector<int>& v )
{
   std::sort( v.begin(), v.end() );
   v.erase( std::unique( v.begin(), v.end() ), v.end() );
}

GhostPlan with_sources( std::vector<std::vector<ElemId>> elems, const OwnershipMap& master_dd )
{
   GhostPlan plan;
   plan.nranks = master_dd.nranks;
   plan.elems = std::move( elems );
   plan.source.resize( plan.elems.size() );
   for ( std::size_t p = 0; p < plan.elems.size(); ++p ) {
      for ( ElemId e : plan.elems[p] ) {
         plan.source[p].push_back( master_dd.elem_owner[e] );
      }
   }
   return plan;
}

/// Message from `src` carrying `elems` (owned by src) plus the nodes src owns that dst does not.
Message ghost_message( const SimWorld& world, RankId src, RankId dst, const std::vector<ElemData>& elems,
                       const std::vector<NodeId>& nodes_for_dst )
{
   const OwnershipMap& dd = world.master_dd();
   Message m;
   m.src = src;
   m.dst = dst;
   m.tag = Tag::ghost;
   for ( NodeId n : nodes_for_dst ) {
      if ( dd.node_owner[n] == src && dd.node_owner[n] != dst ) { ++m.payload_nodes; }
   }
   m.payload_elems = static_cast<long>( elems.size() );
   ByteWriter w;
   encode_elems( w, elems );
   m.payload = w.take();
   return m;
}

/// Moves ghost messages out of p's inbox into its master_ghost store and updates counters.
/// With `keep_max` the counters keep the largest value seen (round-robin iterations).
void absorb_ghosts( SimWorld& world, RankId p, bool keep_max )
{
   RankState& rs = world.rank_state( p );
   const OwnershipMap& dd = world.master_dd();
   rs.master_ghost.clear();
   std::vector<Message> rest;
   for ( Message& m : rs.inbox ) {
      if ( m.tag != Tag::ghost ) {
         rest.push_back( std::move( m ) );
         continue;
      }
      if ( m.src == p ) { continue; }
      ByteReader r( m.payload );
      for ( ElemData& d : decode_elems( r ) ) {
         rs.master_ghost.push_back( d );
      }
   }
   rs.inbox = std::move( rest );
   std::sort( rs.master_ghost.begin(), rs.master_ghost.end(),
              []( const ElemData& a, const ElemData& b ) { return a.id < b.id; } );

   std::vector<NodeId> ghost_nodes;
   std::vector<ElemId> visible_elems = dd.ghost_elems[p];
   std::vector<NodeId> visible_nodes = dd.ghost_nodes[p];
   for ( const ElemData& d : rs.master_owned ) {
      visible_elems.push_back( d.id );
   }
   for ( NodeId n = 0; n < static_cast<NodeId>( dd.node_owner.size() ); ++n ) {
      if ( dd.node_owner[n] == p ) { visible_nodes.push_back( n ); }
   }
   for ( const ElemData& d : rs.master_ghost ) {
      visible_elems.push_back( d.id );
      for ( NodeId n : d.nodes ) {
         visible_nodes.push_back( n );
         if ( dd.node_owner[n] != p ) { ghost_nodes.push_back( n ); }
      }
   }
   sort_unique( ghost_nodes );
   sort_unique( visible_elems );
   sort_unique( visible_nodes );

   const long gn = static_cast<long>( ghost_nodes.size() );
   const long ge = static_cast<long>( rs.master_ghost.size() );
   const long vn = static_cast<long>( visible_nodes.size() );
   const long ve = static_cast<long>( visible_elems.size() );
   if ( keep_max ) {
      rs.ghost_ma_nodes = std::max( rs.ghost_ma_nodes, gn );
      rs.ghost_ma_elems = std::max( rs.ghost_ma_elems, ge );
      rs.visible_ma_nodes = std::max( rs.visible_ma_nodes, vn );
      rs.visible_ma_elems = std::max( rs.visible_ma_elems, ve );
   } else {
      rs.ghost_ma_nodes = gn;
      rs.ghost_ma_elems = ge;
      rs.visible_ma_nodes = vn;
      rs.visible_ma_elems = ve;
   }
}

} // namespace

GhostPlan plan_redundant( const OwnershipMap& master_dd )
{
   std::vector<std::vector<ElemId>> elems( static_cast<std::size_t>( master_dd.nranks ) );
   for ( RankId p = 0; p < master_dd.nranks; ++p ) {
      for ( ElemId e = 0; e < static_cast<ElemId>( master_dd.elem_owner.size() ); ++e ) {
         if ( master_dd.elem_owner[e] != p ) { elems[p].push_back( e ); }
      }
   }
   return with_sources( std::move( elems ), master_dd );
}

std::array<int, 3> BinGrid::cell_of( const Vec3& p ) const
{
   std::array<int, 3> c {};
   for ( std::size_t d = 0; d < 3; ++d ) {
      const int i = static_cast<int>( std::floor( ( p[d] - bbox.lo[d] ) / beta[d] ) );
      c[d] = std::clamp( i, 0, dims[d] - 1 );
   }
   return c;
}

std::array<std::array<int, 2>, 3> BinGrid::cell_range( const Aabb& box ) const
{
   const auto lo = cell_of( box.lo );
   const auto hi = cell_of( box.hi );
   return { { { lo[0], hi[0] }, { lo[1], hi[1] }, { lo[2], hi[2] } } };
}

double bin_size( const InterfaceMesh& slave, double dt, double mean_velocity )
{
   return slave.max_edge() + 2.0 * dt * mean_velocity;
}

BinGrid build_bin_grid( const InterfaceMesh& slave, const InterfaceMesh& master, double dt, double mean_velocity,
                        double search_tol )
{
   if ( slave.elems.empty() || master.elems.empty() ) { throw GeometryError( "cannot bin an empty interface" ); }
   if ( dt < 0.0 || mean_velocity < 0.0 ) { throw ConfigError( "dt and mean velocity must be >= 0" ); }

   BinGrid grid;
   grid.search_tol = search_tol;
   grid.beta_min = bin_size( slave, dt, mean_velocity );
   if ( !( grid.beta_min > 0.0 ) ) { throw GeometryError( "bin size must be positive" ); }

   for ( const auto* mesh : { &slave, &master } ) {
      for ( const Vec3& x : mesh->coords ) {
         grid.bbox.expand( x );
      }
   }
   grid.bbox.inflate( grid.beta_min );
   const Vec3 ext = grid.bbox.extent();
   for ( std::size_t d = 0; d < 3; ++d ) {
      grid.dims[d] = std::max( 1, static_cast<int>( std::floor( ext[d] / grid.beta_min ) ) );
      grid.beta[d] = ext[d] / grid.dims[d];
   }

   grid.slave_bins.resize( static_cast<std::size_t>( grid.num_bins() ) );
   grid.master_bins.resize( static_cast<std::size_t>( grid.num_bins() ) );
   for ( ElemId e = 0; e < slave.num_elems(); ++e ) {
      grid.slave_bins[grid.bin_index( grid.cell_of( slave.centroid( e ) ) )].push_back( e );
   }
   for ( ElemId e = 0; e < master.num_elems(); ++e ) {
      Aabb box = master.bounds( e );
      box.inflate( search_tol );
      const auto r = grid.cell_range( box );
      for ( int i = r[0][0]; i <= r[0][1]; ++i ) {
         for ( int j = r[1][0]; j <= r[1][1]; ++j ) {
            for ( int k = r[2][0]; k <= r[2][1]; ++k ) {
               grid.master_bins[grid.bin_index( { i, j, k } )].push_back( e );
            }
         }
      }
   }
   grid.slave_snapshot = slave.coords;
   return grid;
}

GhostPlan plan_binning( const BinGrid& grid, const InterfaceMesh& slave, const OwnershipMap& slave_dd,
                        const OwnershipMap& master_dd )
{
   if ( grid.slave_snapshot.size() != slave.coords.size() ) {
      throw StaleGridError( "bin grid was built for a different slave mesh" );
   }
   double moved = 0.0;
   for ( std::size_t n = 0; n < slave.coords.size(); ++n ) {
      moved = std::max( moved, norm( slave.coords[n] - grid.slave_snapshot[n] ) );
   }
   if ( moved > grid.beta_min ) {
      throw StaleGridError( "slave moved " + std::to_string( moved ) + " since the bin grid was built (bin size " +
                            std::to_string( grid.beta_min ) + ")" );
   }

   const int P = master_dd.nranks;
   std::vector<std::vector<char>> marked( static_cast<std::size_t>( P ),
                                          std::vector<char>( static_cast<std::size_t>( grid.num_bins() ), 0 ) );
   for ( ElemId e = 0; e < slave.num_elems(); ++e ) {
      Aabb box = slave.bounds( e );
      box.inflate( grid.search_tol );
      const auto r = grid.cell_range( box );
      auto& mark = marked[slave_dd.elem_owner[e]];
      // the bins of the box plus their 27-neighbourhood, clipped at the boundary
      for ( int i = std::max( 0, r[0][0] - 1 ); i <= std::min( grid.dims[0] - 1, r[0][1] + 1 ); ++i ) {
         for ( int j = std::max( 0, r[1][0] - 1 ); j <= std::min( grid.dims[1] - 1, r[1][1] + 1 ); ++j ) {
            for ( int k = std::max( 0, r[2][0] - 1 ); k <= std::min( grid.dims[2] - 1, r[2][1] + 1 ); ++k ) {
               mark[grid.bin_index( { i, j, k } )] = 1;
            }
         }
      }
   }

   std::vector<std::vector<ElemId>> elems( static_cast<std::size_t>( P ) );
   for ( RankId p = 0; p < P; ++p ) {
      for ( int b = 0; b < grid.num_bins(); ++b ) {
         if ( !marked[p][b] ) { continue; }
         for ( ElemId e : grid.master_bins[b] ) {
            if ( master_dd.elem_owner[e] != p ) { elems[p].push_back( e ); }
         }
      }
      sort_unique( elems[p] );
   }
   return with_sources( std::move( elems ), master_dd );
}

void execute_ghost_plan( SimWorld& world, const GhostPlan& plan )
{
   const int P = world.nranks();
   if ( plan.nranks != P ) { throw ConfigError( "ghost plan does not match the world" ); }
   world.for_each_rank( [&]( RankId src ) {
      const RankState& rs = world.rank_state( src );
      for ( RankId dst = 0; dst < P; ++dst ) {
         if ( dst == src ) { continue; }
         std::vector<ElemData> elems;
         std::vector<NodeId> nodes;
         for ( std::size_t i = 0; i < plan.elems[dst].size(); ++i ) {
            const ElemId e = plan.elems[dst][i];
            for ( NodeId n : world.scenario().master.elems[e] ) {
               nodes.push_back( n );
            }
            if ( plan.source[dst][i] != src ) { continue; }
            auto it = std::lower_bound( rs.master_owned.begin(), rs.master_owned.end(), e,
                                        []( const ElemData& d, ElemId id ) { return d.id < id; } );
            if ( it == rs.master_owned.end() || it->id != e ) {
               throw RoutingError( "rank " + std::to_string( src ) + " asked to ship master element " +
                                   std::to_string( e ) + " it does not own" );
            }
            elems.push_back( *it );
         }
         sort_unique( nodes );
         Message m = ghost_message( world, src, dst, elems, nodes );
         if ( m.payload_elems > 0 || m.payload_nodes > 0 ) { world.post( std::move( m ) ); }
      }
   } );
   world.deliver();
   world.for_each_rank( [&]( RankId p ) { absorb_ghosts( world, p, false ); } );
}

GhostPlan ghost_redundant( SimWorld& world )
{
   GhostPlan plan = plan_redundant( world.master_dd() );
   execute_ghost_plan( world, plan );
   return plan;
}

GhostPlan ghost_binning( SimWorld& world, const BinGrid& grid )
{
   GhostPlan plan = plan_binning( grid, world.scenario().slave, world.slave_dd(), world.master_dd() );
   execute_ghost_plan( world, plan );
   return plan;
}

std::vector<std::vector<RankId>> round_robin_schedule( int nranks )
{
   if ( nranks < 1 ) { throw ConfigError( "nranks must be >= 1" ); }
   std::vector<std::vector<RankId>> schedule( static_cast<std::size_t>( nranks ),
                                              std::vector<RankId>( static_cast<std::size_t>( nranks ) ) );
   for ( int i = 0; i < nranks; ++i ) {
      for ( int s = 0; s < nranks; ++s ) {
         schedule[i][s] = ( s + i ) % nranks;
      }
   }
   return schedule;
}

void host_round_robin( SimWorld& world, int iteration )
{
   const int P = world.nranks();
   world.for_each_rank( [&]( RankId src ) {
      const RankId dst = ( src + iteration ) % P;
      if ( dst == src ) { return; }
      const RankState& rs = world.rank_state( src );
      std::vector<NodeId> nodes;
      for ( const ElemData& d : rs.master_owned ) {
         nodes.insert( nodes.end(), d.nodes.begin(), d.nodes.end() );
      }
      sort_unique( nodes );
      // the hosting rank needs every node of the shipped elements, not only those src owns
      Message m = ghost_message( world, src, dst, rs.master_owned, {} );
      for ( NodeId n : nodes ) {
         if ( world.master_dd().node_owner[n] != dst ) { ++m.payload_nodes; }
      }
      if ( m.payload_elems > 0 || m.payload_nodes > 0 ) { world.post( std::move( m ) ); }
   } );
   world.deliver();
   world.for_each_rank( [&]( RankId p ) { absorb_ghosts( world, p, true ); } );
}

void write_ghost_plan_csv( const GhostPlan& plan, std::ostream& out )
{
   out << "rank,master_elem_id,source_rank\n";
   for ( int p = 0; p < plan.nranks; ++p ) {
      for ( std::size_t i = 0; i < plan.elems[p].size(); ++i ) {
         out << p << ',' << plan.elems[p][i] << ',' << plan.source[p][i] << '\n';
      }
   }
}

} // namespace mortarbench
