#pragma once

#include "mortarbench/runtime.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace mortarbench
{

/// Master elements each rank must receive, with the rank that owns each of them.
struct GhostPlan
{
   int nranks = 1;
   std::vector<std::vector<ElemId>> elems;  ///< per rank, ascending
   std::vector<std::vector<RankId>> source; ///< parallel to elems

   friend bool operator==( const GhostPlan&, const GhostPlan& ) = default;
};

/// Every master element a rank does not own.
GhostPlan plan_redundant( const OwnershipMap& master_dd );

/// Cartesian bins over the interface bounding box.
///
/// Slave elements are registered by centroid. Master elements are registered in every
/// bin touched by their bounding box inflated by the search tolerance, so a master that
/// the contact search can pair with a slave always shares a bin with that slave's
/// inflated box.
struct BinGrid
{
   Aabb bbox;        ///< all interface nodes, expanded by beta_min
   double beta_min = 0.0;
   Vec3 beta;        ///< actual bin edge per axis, >= beta_min
   std::array<int, 3> dims { 1, 1, 1 };
   double search_tol = 0.0;
   std::vector<std::vector<ElemId>> slave_bins;
   std::vector<std::vector<ElemId>> master_bins;
   std::vector<Vec3> slave_snapshot; ///< slave coordinates at build time

   int num_bins() const { return dims[0] * dims[1] * dims[2]; }
   std::array<int, 3> cell_of( const Vec3& p ) const;
   int bin_index( const std::array<int, 3>& c ) const { return ( c[0] * dims[1] + c[1] ) * dims[2] + c[2]; }

   /// Inclusive cell ranges covered by a box, clipped to the grid.
   std::array<std::array<int, 2>, 3> cell_range( const Aabb& box ) const;
};

/// beta_min = largest slave edge + 2 dt v.
double bin_size( const InterfaceMesh& slave, double dt, double mean_velocity );

/// Throws GeometryError on an empty interface and ConfigError on negative dt or velocity.
BinGrid build_bin_grid( const InterfaceMesh& slave, const InterfaceMesh& master, double dt, double mean_velocity,
                        double search_tol );

/// Masters in the bins of p's slave elements and their 27-neighbourhoods, minus p's own.
/// Throws StaleGridError if any slave node moved more than beta_min since the grid was built.
GhostPlan plan_binning( const BinGrid& grid, const InterfaceMesh& slave, const OwnershipMap& slave_dd,
                        const OwnershipMap& master_dd );

/// Sends planned master elements from their owners and decodes them into each rank's
/// master_ghost store. Charged under the ghost tag.
void execute_ghost_plan( SimWorld& world, const GhostPlan& plan );

GhostPlan ghost_redundant( SimWorld& world );
GhostPlan ghost_binning( SimWorld& world, const BinGrid& grid );

/// schedule[i][s] = rank hosting master subdomain s in iteration i, i.e. (s + i) mod P.
std::vector<std::vector<RankId>> round_robin_schedule( int nranks );

/// Ships master subdomain (p - i) mod P to each rank p for iteration i.
/// Afterwards rank p's hosted masters are master_owned when it hosts itself, master_ghost otherwise.
void host_round_robin( SimWorld& world, int iteration );

/// CSV: rank, master_elem_id, source_rank
void write_ghost_plan_csv( const GhostPlan& plan, std::ostream& out );

} // namespace mortarbench
