#include "mortarbench/partition.hpp"

#include "mortarbench/error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

namespace mortarbench
{

std::vector<ElemId> OwnershipMap::owned_elems( RankId p ) const
{
   std::vector<ElemId> out;
   for ( ElemId e = 0; e < static_cast<ElemId>( elem_owner.size() ); ++e ) {
      if ( elem_owner[e] == p ) { out.push_back( e ); }
   }
   return out;
}

std::vector<NodeId> OwnershipMap::owned_nodes( RankId p ) const
{
   std::vector<NodeId> out;
   for ( NodeId n = 0; n < static_cast<NodeId>( node_owner.size() ); ++n ) {
      if ( node_owner[n] == p ) { out.push_back( n ); }
   }
   return out;
}

std::vector<long> OwnershipMap::owned_elem_counts() const
{
   std::vector<long> counts( static_cast<std::size_t>( nranks ), 0 );
   for ( RankId r : elem_owner ) {
      ++counts[r];
   }
   return counts;
}

namespace
{

class Bisector
{
public:
   Bisector( std::span<const Vec3> points, const PartitionSpec& spec, std::vector<int>& parts )
      : points_( points ), spec_( spec ), parts_( parts )
   {
   }

   void run( std::vector<int> ids, int first_part, int nparts )
   {
      if ( nparts == 1 ) {
         for ( int i : ids ) {
            parts_[i] = first_part;
         }
         return;
      }
      const int left_parts = nparts / 2;
      const int right_parts = nparts - left_parts;
      const std::size_t axis = cut_axis( ids );

      std::sort( ids.begin(), ids.end(), [&]( int a, int b ) {
         const double ca = points_[a][axis], cb = points_[b][axis];
         return ca < cb || ( ca == cb && a < b );
      } );

      const std::size_t n = ids.size();
      std::vector<double> prefix( n + 1, 0.0 );
      for ( std::size_t i = 0; i < n; ++i ) {
         prefix[i + 1] = prefix[i] + weight( ids[i] );
      }
      const double total = prefix[n];
      const double target = total * left_parts / nparts;

      // admissible split counts leave at least one entity per part on both sides
      const std::size_t lo = static_cast<std::size_t>( left_parts );
      const std::size_t hi = n - static_cast<std::size_t>( right_parts );
      std::size_t best = lo;
      for ( std::size_t s = lo; s <= hi; ++s ) {
         if ( std::abs( prefix[s] - target ) < std::abs( prefix[best] - target ) ) { best = s; }
      }

      // within the tolerance window prefer a cut between distinct coordinates
      const double window = std::max( ( spec_.tol - 1.0 ) * total / nparts, std::abs( prefix[best] - target ) );
      std::size_t chosen = best;
      double chosen_dev = HUGE_VAL;
      for ( std::size_t s = lo; s <= hi; ++s ) {
         const double dev = std::abs( prefix[s] - target );
         if ( dev > window ) { continue; }
         const bool gap = points_[ids[s - 1]][axis] < points_[ids[s]][axis];
         if ( gap && dev < chosen_dev ) {
            chosen = s;
            chosen_dev = dev;
         }
      }

      std::vector<int> left( ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>( chosen ) );
      std::vector<int> right( ids.begin() + static_cast<std::ptrdiff_t>( chosen ), ids.end() );
      run( std::move( left ), first_part, left_parts );
      run( std::move( right ), first_part + left_parts, right_parts );
   }

private:
   double weight( int i ) const { return spec_.weights.empty() ? 1.0 : spec_.weights[i]; }

   static std::size_t argmax( const std::array<double, 3>& v )
   {
      // near-ties resolve to the lowest axis index
      std::size_t best = 0;
      for ( std::size_t d = 1; d < 3; ++d ) {
         if ( v[d] > v[best] * ( 1.0 + 1e-12 ) + 1e-300 ) { best = d; }
      }
      return best;
   }

   std::size_t cut_axis( const std::vector<int>& ids ) const
   {
      Aabb box;
      for ( int i : ids ) {
         box.expand( points_[i] );
      }
      const Vec3 ext = box.extent();
      return argmax( { ext.x, ext.y, ext.z } );
   }

   std::span<const Vec3> points_;
   const PartitionSpec& spec_;
   std::vector<int>& parts_;
};

} // namespace

std::vector<int> rcb_partition( std::span<const Vec3> points, const PartitionSpec& spec )
{
   if ( spec.nparts < 1 ) { throw ConfigError( "nparts must be >= 1" ); }
   if ( !( spec.tol >= 1.0 ) ) { throw ConfigError( "partition tolerance must be >= 1" ); }
   const std::size_t n = points.size();
   if ( static_cast<std::size_t>( spec.nparts ) > n ) {
      throw InfeasiblePartition( "cannot split " + std::to_string( n ) + " entities into " + std::to_string( spec.nparts ) +
                                 " non-empty parts" );
   }
   if ( !spec.weights.empty() ) {
      if ( spec.weights.size() != n ) { throw ConfigError( "weight vector size does not match entity count" ); }
      if ( std::any_of( spec.weights.begin(), spec.weights.end(), []( double x ) { return !( x > 0.0 ); } ) ) {
         throw ConfigError( "partition weights must be positive" );
      }
   }
   std::vector<int> parts( n, 0 );
   std::vector<int> ids( n );
   std::iota( ids.begin(), ids.end(), 0 );
   Bisector( points, spec, parts ).run( std::move( ids ), 0, spec.nparts );
   return parts;
}

OwnershipMap build_overlapping_dd( const InterfaceMesh& mesh, std::span<const RankId> assignment, int nranks )
{
   if ( nranks < 1 ) { throw ConfigError( "nranks must be >= 1" ); }
   if ( assignment.size() != mesh.elems.size() ) {
      throw ConfigError( "assignment does not cover every element" );
   }
   OwnershipMap map;
   map.nranks = nranks;
   map.elem_owner.assign( assignment.begin(), assignment.end() );
   for ( RankId r : map.elem_owner ) {
      if ( r < 0 || r >= nranks ) { throw ConfigError( "element owner outside [0, nranks)" ); }
   }

   map.node_owner.assign( mesh.coords.size(), -1 );
   // ranks owning an element adjacent to each node, in ascending element order
   std::vector<std::vector<RankId>> node_ranks( mesh.coords.size() );
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      for ( NodeId n : mesh.elems[e] ) {
         if ( map.node_owner[n] < 0 ) { map.node_owner[n] = map.elem_owner[e]; }
         node_ranks[n].push_back( map.elem_owner[e] );
      }
   }
   for ( RankId& r : map.node_owner ) {
      if ( r < 0 ) { r = 0; }
   }
   for ( auto& v : node_ranks ) {
      std::sort( v.begin(), v.end() );
      v.erase( std::unique( v.begin(), v.end() ), v.end() );
   }

   map.ghost_elems.assign( static_cast<std::size_t>( nranks ), {} );
   map.ghost_nodes.assign( static_cast<std::size_t>( nranks ), {} );
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      const RankId owner = map.elem_owner[e];
      for ( NodeId n : mesh.elems[e] ) {
         for ( RankId r : node_ranks[n] ) {
            if ( r != owner ) { map.ghost_elems[r].push_back( e ); }
         }
         if ( map.node_owner[n] != owner ) { map.ghost_nodes[owner].push_back( n ); }
      }
   }
   for ( auto* sets : { &map.ghost_elems, &map.ghost_nodes } ) {
      for ( auto& v : *sets ) {
         std::sort( v.begin(), v.end() );
         v.erase( std::unique( v.begin(), v.end() ), v.end() );
      }
   }
   return map;
}

OwnershipMap interface_dd_from_bulk( const InterfaceMesh& mesh, std::span<const RankId> bulk_owner_of_face, int nranks )
{
   return build_overlapping_dd( mesh, bulk_owner_of_face, nranks );
}

OwnershipMap independent_interface_dd( const InterfaceMesh& mesh, const PartitionSpec& spec )
{
   if ( mesh.num_elems() < spec.nparts ) {
      throw InfeasiblePartition( "interface has " + std::to_string( mesh.num_elems() ) + " elements for " +
                                 std::to_string( spec.nparts ) + " ranks" );
   }
   std::vector<Vec3> centroids;
   centroids.reserve( mesh.elems.size() );
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      centroids.push_back( mesh.centroid( e ) );
   }
   if ( spec.weights.empty() ) {
      const std::vector<int> parts = rcb_partition( centroids, spec );
      return build_overlapping_dd( mesh, parts, spec.nparts );
   }
   if ( spec.weights.size() != mesh.elems.size() ) { throw ConfigError( "one weight per element expected" ); }

   const double base = *std::min_element( spec.weights.begin(), spec.weights.end() );
   std::vector<int> active, idle;
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      ( spec.weights[e] > base ? active : idle ).push_back( e );
   }
   if ( static_cast<int>( active.size() ) < spec.nparts || static_cast<int>( idle.size() ) < spec.nparts ) {
      const std::vector<int> parts = rcb_partition( centroids, spec );
      return build_overlapping_dd( mesh, parts, spec.nparts );
   }

   std::vector<int> parts( mesh.elems.size(), 0 );
   auto split = [&]( const std::vector<int>& ids, bool weighted ) {
      std::vector<Vec3> pts;
      PartitionSpec sub;
      sub.nparts = spec.nparts;
      sub.tol = spec.tol;
      for ( int e : ids ) {
         pts.push_back( centroids[e] );
         if ( weighted ) { sub.weights.push_back( spec.weights[e] ); }
      }
      const std::vector<int> sp = rcb_partition( pts, sub );
      for ( std::size_t k = 0; k < ids.size(); ++k ) {
         parts[ids[k]] = sp[k];
      }
   };
   split( active, true );
   split( idle, false );
   return build_overlapping_dd( mesh, parts, spec.nparts );
}

BulkDecomposition decompose_bulk( const Scenario& scenario, int nranks )
{
   if ( nranks < 1 ) { throw ConfigError( "nranks must be >= 1" ); }
   BulkDecomposition bulk;
   bulk.nranks = nranks;
   bulk.bulk_elems.assign( static_cast<std::size_t>( nranks ), 0.0 );
   bulk.bulk_nodes.assign( static_cast<std::size_t>( nranks ), 0.0 );

   const int slave_ranks = nranks == 1 ? 1 : ( nranks + 1 ) / 2;
   const int master_first = nranks == 1 ? 0 : slave_ranks;
   const int master_ranks = nranks == 1 ? 1 : nranks - slave_ranks;

   auto split = [&]( const BulkProxy& proxy, int first, int count, std::vector<RankId>& face_owner ) {
      PartitionSpec spec;
      spec.nparts = count;
      std::vector<int> parts = rcb_partition( proxy.cells, spec );
      for ( std::size_t c = 0; c < parts.size(); ++c ) {
         const RankId r = first + parts[c];
         bulk.bulk_elems[r] += proxy.elems_per_cell;
         bulk.bulk_nodes[r] += proxy.nodes_per_cell;
      }
      face_owner.clear();
      for ( int c : proxy.face_cell ) {
         face_owner.push_back( first + parts[static_cast<std::size_t>( c )] );
      }
   };
   split( scenario.slave_bulk, 0, slave_ranks, bulk.slave_face_owner );
   split( scenario.master_bulk, master_first, master_ranks, bulk.master_face_owner );
   return bulk;
}

void write_ownership_csv( const OwnershipMap& map, std::ostream& out )
{
   out << "entity_kind,entity_id,owner\n";
   for ( std::size_t n = 0; n < map.node_owner.size(); ++n ) {
      out << "node," << n << ',' << map.node_owner[n] << '\n';
   }
   for ( std::size_t e = 0; e < map.elem_owner.size(); ++e ) {
      out << "elem," << e << ',' << map.elem_owner[e] << '\n';
   }
}

void write_ghost_csv( const OwnershipMap& map, std::ostream& out )
{
   out << "rank,entity_kind,entity_id\n";
   for ( int p = 0; p < map.nranks; ++p ) {
      for ( NodeId n : map.ghost_nodes[p] ) {
         out << p << ",node," << n << '\n';
      }
      for ( ElemId e : map.ghost_elems[p] ) {
         out << p << ",elem," << e << '\n';
      }
   }
}

} // namespace mortarbench
