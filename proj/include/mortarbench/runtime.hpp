#pragma once

#include "mortarbench/error.hpp"
#include "mortarbench/geomesh.hpp"
#include "mortarbench/partition.hpp"

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <type_traits>
#include <vector>

namespace mortarbench
{

/// Communication channels. Only `ghost` carries master data and enters C.
enum class Tag : int { ghost = 1, redistribution = 2, assembly = 3 };

/// g(n, e) = a * n + b * e, in dimensionless cost units.
struct CostModel
{
   double a = 1.0;
   double b = 1.0;

   double g( double nodes, double elems ) const { return a * nodes + b * elems; }

   friend bool operator==( const CostModel&, const CostModel& ) = default;
};

struct Message
{
   RankId src = 0;
   RankId dst = 0;
   Tag tag = Tag::ghost;
   long payload_nodes = 0;
   long payload_elems = 0;
   std::vector<std::byte> payload;
   long seq = 0; ///< assigned by the router, per source rank
};

/// Append-only byte buffer for trivially copyable records.
class ByteWriter
{
public:
   template <typename T>
   void put( const T& value )
   {
      static_assert( std::is_trivially_copyable_v<T> );
      const auto* p = reinterpret_cast<const std::byte*>( &value );
      bytes_.insert( bytes_.end(), p, p + sizeof( T ) );
   }

   std::vector<std::byte> take() { return std::move( bytes_ ); }

private:
   std::vector<std::byte> bytes_;
};

class ByteReader
{
public:
   explicit ByteReader( std::span<const std::byte> bytes ) : bytes_( bytes ) {}

   template <typename T>
   T get()
   {
      static_assert( std::is_trivially_copyable_v<T> );
      if ( pos_ + sizeof( T ) > bytes_.size() ) { throw Error( "truncated message payload" ); }
      T value;
      std::memcpy( &value, bytes_.data() + pos_, sizeof( T ) );
      pos_ += sizeof( T );
      return value;
   }

   bool done() const { return pos_ == bytes_.size(); }

private:
   std::span<const std::byte> bytes_;
   std::size_t pos_ = 0;
};

/// Element record as held in a rank's private store.
struct ElemData
{
   ElemId id = 0;
   Quad nodes {};
   std::array<Vec3, 4> x {};
   std::array<Vec3, 4> n {}; ///< nodal normals; only meaningful on the slave side
};

/// Everything a rank may read while evaluating. Filled at step barriers and from its inbox.
struct RankState
{
   RankId rank = 0;
   std::vector<ElemData> slave_local;  ///< owned slave elements, ascending id
   std::vector<ElemData> master_owned; ///< owned master elements, ascending id
   std::vector<ElemData> master_ghost; ///< decoded from ghost messages, ascending id
   std::vector<Message> inbox;

   long ghost_ma_nodes = 0;   ///< master nodes received for evaluation and not owned here
   long ghost_ma_elems = 0;   ///< master elements received for evaluation
   long visible_ma_nodes = 0; ///< owned, DD-ghost and received master nodes
   long visible_ma_elems = 0;

   long work_units = 0;
   double wall_seconds = 0.0;
};

/// Per-step counters, per rank unless noted.
struct CostLedger
{
   int nranks = 1;
   std::vector<double> c_ma;     ///< incoming master-data cost
   std::vector<double> c_redist; ///< incoming redistribution cost
   std::vector<double> c_asm;    ///< incoming assembly cost
   double C = 0.0;               ///< sum of c_ma
   std::vector<double> S_bulk;
   std::vector<double> S_sl;
   std::vector<double> S_ma;
   std::vector<double> S; ///< S_bulk + S_sl + S_ma
   std::vector<long> W;
   std::vector<double> t;
   long messages = 0; ///< messages between distinct ranks

   friend bool operator==( const CostLedger&, const CostLedger& ) = default;
};

struct WorldConfig
{
   CostModel cost;
   std::uint64_t seed = 0;
   int threads = 1; ///< worker threads used by for_each_rank
};

/// In-process stand-in for a distributed-memory job.
class SimWorld
{
public:
   SimWorld( int nranks, Scenario scenario, WorldConfig config );

   int nranks() const { return nranks_; }
   const WorldConfig& config() const { return config_; }
   const CostModel& cost() const { return config_.cost; }
   int step() const { return step_; }

   Scenario& scenario() { return scenario_; }
   const Scenario& scenario() const { return scenario_; }

   const BulkDecomposition& bulk() const { return bulk_; }

   /// Current interface decompositions.
   const OwnershipMap& slave_dd() const { return slave_dd_; }
   const OwnershipMap& master_dd() const { return master_dd_; }
   void set_slave_dd( OwnershipMap map );
   void set_master_dd( OwnershipMap map );

   /// Fixed bulk-aligned slave decomposition that owns the rows of D and M.
   const OwnershipMap& row_dd() const { return row_dd_; }

   /// Private state of rank p. Inside for_each_rank only the running rank's state is reachable.
   RankState& rank_state( RankId p );
   const RankState& rank_state( RankId p ) const;

   /// Step barrier: moves the slave, zeroes per-step counters and rebuilds every rank's
   /// owned slave and master records from the current decomposition.
   void begin_step( int step );

   /// Rebuilds owned records without touching the counters (after a repartition).
   void refresh_local_data();

   /// Runs fn(p) for every rank in a seed-dependent order, optionally on worker threads.
   void for_each_rank( const std::function<void( RankId )>& fn );

   /// Order used by the last for_each_rank call.
   const std::vector<RankId>& last_order() const { return last_order_; }

   /// Thread-safe submission; delivery happens in deliver().
   void post( Message msg );

   /// Sorts pending messages into inboxes by (src, tag, seq) and charges the ledger.
   void deliver();

   void add_work( RankId p, long quad_points, double seconds );

   /// Raw per-step charge counters (sums of g over delivered messages).
   const std::vector<double>& charged( Tag tag ) const;
   long message_count() const { return messages_; }

private:
   void check_rank( RankId p, const char* what ) const;

   int nranks_;
   Scenario scenario_;
   WorldConfig config_;
   int step_ = -1;

   BulkDecomposition bulk_;
   OwnershipMap slave_dd_;
   OwnershipMap master_dd_;
   OwnershipMap row_dd_;

   std::vector<RankState> ranks_;
   std::vector<RankId> last_order_;

   std::unique_ptr<std::mutex> router_mutex_ = std::make_unique<std::mutex>();
   std::vector<Message> pending_;
   std::vector<long> next_seq_;

   std::vector<double> charged_ghost_;
   std::vector<double> charged_redist_;
   std::vector<double> charged_asm_;
   long messages_ = 0;
};

/// Creates a world with bulk-aligned interface decompositions. Throws ConfigError for nranks < 1.
SimWorld spawn_world( int nranks, Scenario scenario, WorldConfig config = {} );

/// Posts all messages and delivers them.
void exchange( SimWorld& world, std::vector<Message> messages );

/// Consistent copy of the counters with the memory proxies recomputed.
CostLedger ledger_snapshot( const SimWorld& world );

struct WorkClock
{
   long work_units = 0;
   double wall_seconds = 0.0;
};

WorkClock work_clock( const SimWorld& world, RankId p );

/// Serialization of element records used by ghost and migration messages.
void encode_elems( ByteWriter& out, std::span<const ElemData> elems );
std::vector<ElemData> decode_elems( ByteReader& in );

/// Record of element e as currently stored in the scenario.
ElemData elem_data( const InterfaceMesh& mesh, ElemId e );

} // namespace mortarbench
