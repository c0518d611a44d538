#pragma once

#include "mortarbench/geomesh.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace mortarbench
{

using RankId = int;

/// Overlapping decomposition of one mesh: unique owners plus a one-element ghost layer per rank.
struct OwnershipMap
{
   int nranks = 1;
   std::vector<RankId> elem_owner;
   std::vector<RankId> node_owner;
   std::vector<std::vector<ElemId>> ghost_elems; ///< per rank, sorted
   std::vector<std::vector<NodeId>> ghost_nodes; ///< per rank, sorted

   std::vector<ElemId> owned_elems( RankId p ) const;
   std::vector<NodeId> owned_nodes( RankId p ) const;
   std::vector<long> owned_elem_counts() const;

   friend bool operator==( const OwnershipMap&, const OwnershipMap& ) = default;
};

struct PartitionSpec
{
   int nparts = 1;
   double tol = 1.03;           ///< allowed max part weight / ideal part weight
   std::vector<double> weights; ///< per entity, empty = uniform
};

/// Recursive coordinate bisection at the weighted median, ties broken by entity id.
/// Returns a part id per point. Throws InfeasiblePartition if nparts exceeds the point count.
std::vector<int> rcb_partition( std::span<const Vec3> points, const PartitionSpec& spec );

/// Ownership plus ghost layer for an element assignment.
///
/// A node belongs to the owner of its lowest-id adjacent element. Rank p ghosts every
/// foreign element sharing a node with one of its elements, and every foreign node of
/// its own elements.
OwnershipMap build_overlapping_dd( const InterfaceMesh& mesh, std::span<const RankId> assignment, int nranks );

/// Interface decomposition inherited from the bulk; ranks may end up owning nothing.
OwnershipMap interface_dd_from_bulk( const InterfaceMesh& mesh, std::span<const RankId> bulk_owner_of_face, int nranks );

/// Interface decomposition over all ranks, independent of the bulk.
///
/// With weights, elements heavier than the lightest one are bisected at the weighted median
/// and the remaining elements by count, each into all parts, so every rank receives a share
/// of the weighted region while element counts stay balanced. If either group has fewer
/// elements than parts a single weighted bisection is used instead.
/// Throws InfeasiblePartition when the mesh has fewer elements than ranks.
OwnershipMap independent_interface_dd( const InterfaceMesh& mesh, const PartitionSpec& spec );

/// Fixed volume decomposition of both bodies (slave body on the lower half of the ranks).
struct BulkDecomposition
{
   int nranks = 1;
   std::vector<RankId> slave_face_owner;
   std::vector<RankId> master_face_owner;
   std::vector<double> bulk_elems; ///< per rank
   std::vector<double> bulk_nodes; ///< per rank
};

BulkDecomposition decompose_bulk( const Scenario& scenario, int nranks );

/// CSV: entity_kind, entity_id, owner
void write_ownership_csv( const OwnershipMap& map, std::ostream& out );

/// CSV: rank, entity_kind, entity_id
void write_ghost_csv( const OwnershipMap& map, std::ostream& out );

} // namespace mortarbench
