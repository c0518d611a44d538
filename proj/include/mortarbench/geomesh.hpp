#pragma once

#include "mortarbench/vec.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace mortarbench
{

/// Dense per-side identifiers in [0, count).
using NodeId = int;
using ElemId = int;

enum class Side { slave, master };

/// Bilinear quadrilateral, counter-clockwise w.r.t. the outward normal.
using Quad = std::array<NodeId, 4>;

/// One side of a coupling interface.
struct InterfaceMesh
{
   Side side = Side::slave;
   std::vector<Vec3> coords;
   std::vector<Quad> elems;
   std::vector<Vec3> normals;

   int num_nodes() const { return static_cast<int>( coords.size() ); }
   int num_elems() const { return static_cast<int>( elems.size() ); }

   std::array<Vec3, 4> corners( ElemId e ) const;
   Vec3 centroid( ElemId e ) const;
   Aabb bounds( ElemId e ) const;
   Aabb bounds() const;

   /// Largest element edge length over the whole mesh.
   double max_edge() const;
};

/// Scale-aware degeneracy threshold: 1e-12 times the squared bounding-box diagonal.
double area_tolerance( const InterfaceMesh& mesh );

/// Throws GeometryError on dangling node references, degenerate facets or non-unit normals.
void validate( const InterfaceMesh& mesh );

/// Un-normalized facet normal, cross product of the two diagonals (twice the projected area).
Vec3 facet_cross( const std::array<Vec3, 4>& x );

/// Normalized cross(d1, d2); throws GeometryError if the diagonals are (nearly) parallel.
Vec3 facet_normal( const std::array<Vec3, 4>& x, double area_tol );

/// Per-node normalized sum of adjacent facet normals.
///
/// Adjacent facets are summed in ascending element id so that any two callers
/// seeing the same adjacency produce bit-identical normals.
std::vector<Vec3> averaged_nodal_normals( const InterfaceMesh& mesh );

/// Flat approximation of one element: center, averaged normal and an orthonormal in-plane basis.
struct FacetPlane
{
   Vec3 origin;
   Vec3 normal;
   Vec3 e1;
   Vec3 e2;

   Vec2 to_plane( const Vec3& p ) const
   {
      const Vec3 d = p - origin;
      return { dot( d, e1 ), dot( d, e2 ) };
   }
   Vec3 to_space( const Vec2& q ) const { return origin + q.x * e1 + q.y * e2; }
};

FacetPlane facet_plane( const InterfaceMesh& mesh, ElemId e );

/// Same construction from raw corner positions and nodal normals.
FacetPlane facet_plane( const std::array<Vec3, 4>& x, const std::array<Vec3, 4>& n );

/// Rotation by `angle` about the axis (point, dir), followed by a translation.
struct RigidTransform
{
   Vec3 axis_point;
   Vec3 axis_dir { 0.0, 1.0, 0.0 };
   double angle = 0.0;
   Vec3 translation;

   Vec3 apply( const Vec3& p ) const;
};

/// Coarse stand-in for one body's volume mesh: cell centroids in the reference
/// configuration plus the cell each interface facet sits on.
struct BulkProxy
{
   std::vector<Vec3> cells;
   std::vector<int> face_cell;
   double elems_per_cell = 1.0;
   double nodes_per_cell = 1.0;
};

enum class ScenarioKind { two_block, moving_patch, custom };

struct Scenario
{
   ScenarioKind kind = ScenarioKind::custom;
   int refine = 1;
   int steps = 1;
   int approach_steps = 0;
   double dt = 1.0;

   InterfaceMesh slave;
   InterfaceMesh master;
   std::vector<Vec3> slave_reference;

   /// Cumulative slave transform for each step, measured from the reference configuration.
   std::vector<RigidTransform> motion;

   BulkProxy slave_bulk;
   BulkProxy master_bulk;
};

/// Two flat block faces: slave 0.8 x 0.8 over master 1.0 x 1.0, both (5m) x (5m), penetration 0.001.
Scenario build_two_block_scenario( int refine, int steps = 1, double dt = 1.0 );

/// Short hollow cylinder (slave = outer surface) pressed onto a flat block top,
/// approaching for `approach_steps` and then rolling 180 degrees in place.
Scenario build_moving_patch_scenario( int refine, int steps, int approach_steps, double dt = 0.01 );

/// Cylinder and block dimensions used by build_moving_patch_scenario.
struct MovingPatchGeometry
{
   static constexpr double radius = 1.0;
   static constexpr double inner_radius = 0.7;
   static constexpr double length = 0.8;
   static constexpr double initial_gap = 0.2;
   static constexpr double penetration = 0.01;
   static constexpr int circ_per_refine = 48;
   static constexpr int axial_per_refine = 8;
};

/// Moves the slave to motion[step] and recomputes its nodal normals. Master is untouched.
void advance_step( Scenario& scenario, int step );

/// Plain-text scenario description.
struct ScenarioConfig
{
   std::string scenario = "two_block";
   int refine = 1;
   int steps = 1;
   int approach_steps = 0;
   double dt = 1.0;

   friend bool operator==( const ScenarioConfig&, const ScenarioConfig& ) = default;
};

Scenario make_scenario( const ScenarioConfig& config );

/// Legacy-VTK ASCII polydata dump for inspection.
void write_vtk( const InterfaceMesh& mesh, std::ostream& out );

} // namespace mortarbench
