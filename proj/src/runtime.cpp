#include "mortarbench/runtime.hpp"

#include "mortarbench/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <random>
#include <set>
#include <string>
#include <thread>

namespace mortarbench
{

namespace
{

thread_local RankId tl_running_rank = -1;

struct RunningRank
{
   explicit RunningRank( RankId p ) { tl_running_rank = p; }
   ~RunningRank() { tl_running_rank = -1; }
};

} // namespace

ElemData elem_data( const InterfaceMesh& mesh, ElemId e )
{
   ElemData d;
   d.id = e;
   d.nodes = mesh.elems[e];
   for ( std::size_t a = 0; a < 4; ++a ) {
      d.x[a] = mesh.coords[d.nodes[a]];
      if ( !mesh.normals.empty() ) { d.n[a] = mesh.normals[d.nodes[a]]; }
   }
   return d;
}

void encode_elems( ByteWriter& out, std::span<const ElemData> elems )
{
   out.put( static_cast<std::int64_t>( elems.size() ) );
   for ( const ElemData& d : elems ) {
      out.put( d );
   }
}

std::vector<ElemData> decode_elems( ByteReader& in )
{
   const auto count = in.get<std::int64_t>();
   if ( count < 0 ) { throw Error( "corrupt element payload" ); }
   std::vector<ElemData> elems;
   elems.reserve( static_cast<std::size_t>( count ) );
   for ( std::int64_t i = 0; i < count; ++i ) {
      elems.push_back( in.get<ElemData>() );
   }
   return elems;
}

SimWorld::SimWorld( int nranks, Scenario scenario, WorldConfig config )
   : nranks_( nranks ), scenario_( std::move( scenario ) ), config_( config )
{
   if ( nranks < 1 ) { throw ConfigError( "nranks must be >= 1, got " + std::to_string( nranks ) ); }
   if ( config_.cost.a < 0.0 || config_.cost.b < 0.0 ) { throw ConfigError( "cost coefficients must be >= 0" ); }
   if ( config_.threads < 1 ) { config_.threads = 1; }

   bulk_ = decompose_bulk( scenario_, nranks_ );
   row_dd_ = interface_dd_from_bulk( scenario_.slave, bulk_.slave_face_owner, nranks_ );
   slave_dd_ = row_dd_;
   master_dd_ = interface_dd_from_bulk( scenario_.master, bulk_.master_face_owner, nranks_ );

   ranks_.resize( static_cast<std::size_t>( nranks_ ) );
   for ( RankId p = 0; p < nranks_; ++p ) {
      ranks_[p].rank = p;
   }
   next_seq_.assign( static_cast<std::size_t>( nranks_ ), 0 );
   charged_ghost_.assign( static_cast<std::size_t>( nranks_ ), 0.0 );
   charged_redist_.assign( static_cast<std::size_t>( nranks_ ), 0.0 );
   charged_asm_.assign( static_cast<std::size_t>( nranks_ ), 0.0 );
}

void SimWorld::check_rank( RankId p, const char* what ) const
{
   if ( p < 0 || p >= nranks_ ) {
      throw RoutingError( std::string( what ) + ": rank " + std::to_string( p ) + " outside [0, " +
                          std::to_string( nranks_ ) + ")" );
   }
}

void SimWorld::set_slave_dd( OwnershipMap map )
{
   if ( map.nranks != nranks_ || map.elem_owner.size() != scenario_.slave.elems.size() ) {
      throw ConfigError( "slave decomposition does not match the world" );
   }
   slave_dd_ = std::move( map );
}

void SimWorld::set_master_dd( OwnershipMap map )
{
   if ( map.nranks != nranks_ || map.elem_owner.size() != scenario_.master.elems.size() ) {
      throw ConfigError( "master decomposition does not match the world" );
   }
   master_dd_ = std::move( map );
}

RankState& SimWorld::rank_state( RankId p )
{
   check_rank( p, "rank_state" );
   if ( tl_running_rank >= 0 && tl_running_rank != p ) {
      throw Error( "rank " + std::to_string( tl_running_rank ) + " read the private state of rank " +
                   std::to_string( p ) );
   }
   return ranks_[p];
}

const RankState& SimWorld::rank_state( RankId p ) const
{
   return const_cast<SimWorld*>( this )->rank_state( p );
}

void SimWorld::begin_step( int step )
{
   if ( step < 0 || step >= scenario_.steps ) {
      throw ConfigError( "step " + std::to_string( step ) + " outside the scenario schedule" );
   }
   step_ = step;
   advance_step( scenario_, step );
   std::fill( charged_ghost_.begin(), charged_ghost_.end(), 0.0 );
   std::fill( charged_redist_.begin(), charged_redist_.end(), 0.0 );
   std::fill( charged_asm_.begin(), charged_asm_.end(), 0.0 );
   std::fill( next_seq_.begin(), next_seq_.end(), 0 );
   messages_ = 0;
   pending_.clear();
   for ( RankState& r : ranks_ ) {
      r.inbox.clear();
      r.master_ghost.clear();
      r.ghost_ma_nodes = r.ghost_ma_elems = 0;
      r.visible_ma_nodes = r.visible_ma_elems = 0;
      r.work_units = 0;
      r.wall_seconds = 0.0;
   }
   refresh_local_data();
}

void SimWorld::refresh_local_data()
{
   for ( RankState& r : ranks_ ) {
      r.slave_local.clear();
      r.master_owned.clear();
   }
   for ( ElemId e = 0; e < scenario_.slave.num_elems(); ++e ) {
      ranks_[slave_dd_.elem_owner[e]].slave_local.push_back( elem_data( scenario_.slave, e ) );
   }
   for ( ElemId e = 0; e < scenario_.master.num_elems(); ++e ) {
      ranks_[master_dd_.elem_owner[e]].master_owned.push_back( elem_data( scenario_.master, e ) );
   }
}

void SimWorld::for_each_rank( const std::function<void( RankId )>& fn )
{
   last_order_.resize( static_cast<std::size_t>( nranks_ ) );
   for ( RankId p = 0; p < nranks_; ++p ) {
      last_order_[p] = p;
   }
   std::mt19937_64 rng( config_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>( step_ + 1 ) );
   std::shuffle( last_order_.begin(), last_order_.end(), rng );

   const int workers = std::min( config_.threads, nranks_ );
   if ( workers <= 1 ) {
      for ( RankId p : last_order_ ) {
         RunningRank guard( p );
         fn( p );
      }
      return;
   }

   std::atomic<std::size_t> next { 0 };
   std::exception_ptr failure;
   std::mutex failure_mutex;
   auto work = [&]() {
      for ( ;; ) {
         const std::size_t i = next.fetch_add( 1 );
         if ( i >= last_order_.size() ) { return; }
         try {
            RunningRank guard( last_order_[i] );
            fn( last_order_[i] );
         } catch ( ... ) {
            std::lock_guard lock( failure_mutex );
            if ( !failure ) { failure = std::current_exception(); }
         }
      }
   };
   std::vector<std::thread> pool;
   for ( int w = 0; w < workers; ++w ) {
      pool.emplace_back( work );
   }
   for ( auto& t : pool ) {
      t.join();
   }
   if ( failure ) { std::rethrow_exception( failure ); }
}

void SimWorld::post( Message msg )
{
   check_rank( msg.src, "message source" );
   check_rank( msg.dst, "message destination" );
   std::lock_guard lock( *router_mutex_ );
   msg.seq = next_seq_[msg.src]++;
   pending_.push_back( std::move( msg ) );
}

void SimWorld::deliver()
{
   std::vector<Message> batch;
   {
      std::lock_guard lock( *router_mutex_ );
      batch.swap( pending_ );
   }
   std::sort( batch.begin(), batch.end(), []( const Message& a, const Message& b ) {
      if ( a.dst != b.dst ) { return a.dst < b.dst; }
      if ( a.src != b.src ) { return a.src < b.src; }
      if ( a.tag != b.tag ) { return a.tag < b.tag; }
      return a.seq < b.seq;
   } );
   for ( Message& m : batch ) {
      if ( m.src != m.dst ) {
         const double cost = config_.cost.g( static_cast<double>( m.payload_nodes ), static_cast<double>( m.payload_elems ) );
         switch ( m.tag ) {
            case Tag::ghost: charged_ghost_[m.dst] += cost; break;
            case Tag::redistribution: charged_redist_[m.dst] += cost; break;
            case Tag::assembly: charged_asm_[m.dst] += cost; break;
         }
         ++messages_;
      }
      ranks_[m.dst].inbox.push_back( std::move( m ) );
   }
}

void SimWorld::add_work( RankId p, long quad_points, double seconds )
{
   check_rank( p, "add_work" );
   ranks_[p].work_units += quad_points;
   ranks_[p].wall_seconds += seconds;
}

const std::vector<double>& SimWorld::charged( Tag tag ) const
{
   switch ( tag ) {
      case Tag::ghost: return charged_ghost_;
      case Tag::redistribution: return charged_redist_;
      case Tag::assembly: return charged_asm_;
   }
   return charged_ghost_;
}

SimWorld spawn_world( int nranks, Scenario scenario, WorldConfig config )
{
   return SimWorld( nranks, std::move( scenario ), config );
}

void exchange( SimWorld& world, std::vector<Message> messages )
{
   for ( Message& m : messages ) {
      world.post( std::move( m ) );
   }
   world.deliver();
}

CostLedger ledger_snapshot( const SimWorld& world )
{
   const int P = world.nranks();
   const CostModel& g = world.cost();
   CostLedger led;
   led.nranks = P;
   led.c_ma = world.charged( Tag::ghost );
   led.c_redist = world.charged( Tag::redistribution );
   led.c_asm = world.charged( Tag::assembly );
   led.messages = world.message_count();
   led.S_bulk.resize( P );
   led.S_sl.resize( P );
   led.S_ma.resize( P );
   led.S.resize( P );
   led.W.resize( P );
   led.t.resize( P );

   const OwnershipMap& sl = world.slave_dd();
   std::vector<long> sl_nodes( P, 0 ), sl_elems( P, 0 );
   for ( RankId r : sl.node_owner ) {
      ++sl_nodes[r];
   }
   for ( RankId r : sl.elem_owner ) {
      ++sl_elems[r];
   }
   for ( RankId p = 0; p < P; ++p ) {
      led.C += led.c_ma[p];
      const RankState& rs = world.rank_state( p );
      led.S_bulk[p] = g.g( world.bulk().bulk_nodes[p], world.bulk().bulk_elems[p] );
      led.S_sl[p] = g.g( static_cast<double>( sl_nodes[p] + static_cast<long>( sl.ghost_nodes[p].size() ) ),
                         static_cast<double>( sl_elems[p] + static_cast<long>( sl.ghost_elems[p].size() ) ) );
      led.S_ma[p] = g.g( static_cast<double>( rs.visible_ma_nodes ), static_cast<double>( rs.visible_ma_elems ) );
      led.S[p] = led.S_bulk[p] + led.S_sl[p] + led.S_ma[p];
      led.W[p] = rs.work_units;
      led.t[p] = rs.wall_seconds;
   }
   return led;
}

WorkClock work_clock( const SimWorld& world, RankId p )
{
   const RankState& rs = world.rank_state( p );
   return { rs.work_units, rs.wall_seconds };
}

} // namespace mortarbench
