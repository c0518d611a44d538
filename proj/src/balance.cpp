#include "mortarbench/balance.hpp"

#include "mortarbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mortarbench
{

double imbalance_ratio( std::span<const double> values )
{
   if ( values.empty() ) { throw ConfigError( "imbalance of an empty set" ); }
   const auto [lo, hi] = std::minmax_element( values.begin(), values.end() );
   if ( *hi <= 0.0 ) { return 1.0; }
   if ( *lo <= 0.0 ) { return std::numeric_limits<double>::infinity(); }
   return *hi / *lo;
}

ImbalanceReport measure_imbalance( std::span<const double> clocks, std::span<const double> counts )
{
   if ( clocks.size() != counts.size() ) { throw ConfigError( "one clock and one count per rank expected" ); }
   ImbalanceReport r;
   r.eta_t = imbalance_ratio( clocks );
   r.eta_e = imbalance_ratio( counts );
   r.clocks.assign( clocks.begin(), clocks.end() );
   r.counts.assign( counts.begin(), counts.end() );
   return r;
}

void validate( const LbPolicy& policy )
{
   if ( !( policy.eta_t_hat >= 1.0 ) ) { throw ConfigError( "eta_t threshold must be >= 1" ); }
   if ( !( policy.eta_e_threshold() >= 1.0 ) ) { throw ConfigError( "eta_e threshold must be >= 1" ); }
   if ( !( policy.part_tol >= 1.0 ) ) { throw ConfigError( "partition tolerance must be >= 1" ); }
}

bool should_rebalance( const ImbalanceReport& report, const LbPolicy& policy )
{
   if ( policy.mode != LbMode::dynamic ) { return false; }
   return report.eta_t >= policy.eta_t_hat || report.eta_e >= policy.eta_e_threshold();
}

namespace
{

/// Old owners ship the elements that change hands; returns the number of moved elements.
long migrate( SimWorld& world, const InterfaceMesh& mesh, const OwnershipMap& from, const OwnershipMap& to,
              bool slave_side )
{
   const int P = world.nranks();
   long moved = 0;
   for ( ElemId e = 0; e < mesh.num_elems(); ++e ) {
      if ( from.elem_owner[e] != to.elem_owner[e] ) { ++moved; }
   }
   if ( moved == 0 ) { return 0; }

   world.for_each_rank( [&]( RankId src ) {
      const RankState& rs = world.rank_state( src );
      const std::vector<ElemData>& store = slave_side ? rs.slave_local : rs.master_owned;
      std::vector<std::vector<ElemData>> out( static_cast<std::size_t>( P ) );
      for ( const ElemData& d : store ) {
         const RankId dst = to.elem_owner[d.id];
         if ( dst != src ) { out[dst].push_back( d ); }
      }
      for ( RankId dst = 0; dst < P; ++dst ) {
         if ( out[dst].empty() ) { continue; }
         std::vector<NodeId> nodes;
         for ( const ElemData& d : out[dst] ) {
            for ( NodeId n : d.nodes ) {
               if ( to.node_owner[n] == dst && from.node_owner[n] != dst ) { nodes.push_back( n ); }
            }
         }
         std::sort( nodes.begin(), nodes.end() );
         nodes.erase( std::unique( nodes.begin(), nodes.end() ), nodes.end() );
         Message m;
         m.src = src;
         m.dst = dst;
         m.tag = Tag::redistribution;
         m.payload_elems = static_cast<long>( out[dst].size() );
         m.payload_nodes = static_cast<long>( nodes.size() );
         ByteWriter w;
         encode_elems( w, out[dst] );
         m.payload = w.take();
         world.post( std::move( m ) );
      }
   } );
   world.deliver();
   // the records arrive through the router; the step barrier rebuilds the same data from the kinematics
   world.for_each_rank( [&]( RankId p ) {
      RankState& rs = world.rank_state( p );
      std::erase_if( rs.inbox, []( const Message& m ) { return m.tag == Tag::redistribution; } );
   } );
   return moved;
}

double total( const std::vector<double>& v )
{
   double s = 0.0;
   for ( double x : v ) {
      s += x;
   }
   return s;
}

std::vector<double> owned_counts( const OwnershipMap& dd )
{
   std::vector<double> c( static_cast<std::size_t>( dd.nranks ), 0.0 );
   for ( RankId r : dd.elem_owner ) {
      c[r] += 1.0;
   }
   return c;
}

} // namespace

RebalanceResult rebalance_interface( SimWorld& world, std::span<const double> weights, double part_tol )
{
   const InterfaceMesh& slave = world.scenario().slave;
   const InterfaceMesh& master = world.scenario().master;
   if ( !weights.empty() && weights.size() != slave.elems.size() ) {
      throw ConfigError( "one rebalance weight per slave element expected" );
   }
   const double before = total( world.charged( Tag::redistribution ) );

   PartitionSpec spec;
   spec.nparts = world.nranks();
   spec.tol = part_tol;
   spec.weights.assign( weights.begin(), weights.end() );
   OwnershipMap new_slave = independent_interface_dd( slave, spec );

   PartitionSpec mspec;
   mspec.nparts = world.nranks();
   mspec.tol = part_tol;
   OwnershipMap new_master = independent_interface_dd( master, mspec );

   RebalanceResult r;
   r.migrated_elems = migrate( world, slave, world.slave_dd(), new_slave, true );
   r.migrated_elems += migrate( world, master, world.master_dd(), new_master, false );
   world.set_slave_dd( std::move( new_slave ) );
   world.set_master_dd( std::move( new_master ) );
   world.refresh_local_data();
   r.redist_cost = total( world.charged( Tag::redistribution ) ) - before;
   return r;
}

LbDecision lb_step( SimWorld& world, const LbPolicy& policy, const StepStats* last_step )
{
   validate( policy );
   LbDecision d;
   d.step = world.step();
   if ( last_step ) {
      const ImbalanceReport rep = measure_imbalance( last_step->work, last_step->owned_slave_elems );
      d.eta_t = rep.eta_t;
      d.eta_e = rep.eta_e;
      d.fired = should_rebalance( rep, policy );
   } else {
      // no clock yet: both ratios from the current ownership
      const std::vector<double> counts = owned_counts( world.slave_dd() );
      d.eta_t = d.eta_e = imbalance_ratio( counts );
   }

   std::vector<double> weights;
   switch ( policy.mode ) {
      case LbMode::none: d.fired = false; break;
      case LbMode::static_once: d.fired = world.step() == 0; break;
      case LbMode::dynamic:
         if ( world.step() == 0 ) {
            d.fired = true;
         } else if ( d.fired && last_step ) {
            weights.reserve( last_step->slave_cells.size() );
            for ( double c : last_step->slave_cells ) {
               weights.push_back( 1.0 + c );
            }
         }
         break;
   }
   if ( d.fired ) {
      const RebalanceResult r = rebalance_interface( world, weights, policy.part_tol );
      d.migrated_elems = r.migrated_elems;
      d.redist_cost = r.redist_cost;
   }
   return d;
}

void write_decision_log( const std::vector<LbDecision>& log, std::ostream& out )
{
   const auto old = out.precision( 17 );
   out << "step,eta_t,eta_e,fired,migrated_elems,redist_cost\n";
   for ( const LbDecision& d : log ) {
      out << d.step << ',' << d.eta_t << ',' << d.eta_e << ',' << ( d.fired ? 1 : 0 ) << ',' << d.migrated_elems << ','
          << d.redist_cost << '\n';
   }
   out.precision( old );
}

std::string to_string( LbMode mode )
{
   switch ( mode ) {
      case LbMode::none: return "none";
      case LbMode::static_once: return "static";
      case LbMode::dynamic: return "dynamic";
   }
   return "none";
}

LbMode lb_mode_from_string( const std::string& s )
{
   if ( s == "none" ) { return LbMode::none; }
   if ( s == "static" ) { return LbMode::static_once; }
   if ( s == "dynamic" ) { return LbMode::dynamic; }
   throw ConfigError( "unknown load-balancing mode '" + s + "'" );
}

} // namespace mortarbench
