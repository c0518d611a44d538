#pragma once

#include "mortarbench/runtime.hpp"

#include <array>
#include <compare>
#include <iosfwd>
#include <span>
#include <vector>

namespace mortarbench
{

enum class BasisKind { standard, dual };

using Mat4 = std::array<std::array<double, 4>, 4>;

struct MortarOptions
{
   BasisKind basis = BasisKind::dual;
   int quad_order = 5;
   double search_tol = -1.0; ///< absolute; negative selects 0.5 * largest slave edge
   double angle_tol = 0.17364817766693041; ///< cos(80 deg)
   double vertex_tol = 1e-10;    ///< relative to the slave element size
   double cell_area_tol = 1e-12; ///< relative to the squared slave element size
   double param_tol = 1e-8;
};

struct CandidatePair
{
   ElemId slave = 0;
   ElemId master = 0;

   friend auto operator<=>( const CandidatePair&, const CandidatePair& ) = default;
};

/// All pairs whose bounding boxes, each inflated by search_tol, intersect; sorted by (slave, master).
std::vector<CandidatePair> contact_search( std::span<const ElemData> slaves, std::span<const ElemData> masters,
                                           double search_tol );

/// Bilinear shape functions at (xi, eta); corners ordered (-1,-1), (1,-1), (1,1), (-1,1).
std::array<double, 4> shape_values( const Vec2& xi );
std::array<Vec2, 4> shape_gradients( const Vec2& xi );

/// Corner positions in the plane basis. Projection runs along the plane normal.
std::array<Vec2, 4> project_to_plane( const std::array<Vec3, 4>& x, const FacetPlane& plane );

/// True when the master facet normal is not sufficiently anti-parallel to the slave plane normal.
bool back_facing( const FacetPlane& slave_plane, const std::array<Vec3, 4>& master_x, double angle_tol );

/// Signed shoelace area, positive for counter-clockwise polygons.
double polygon_area( std::span<const Vec2> poly );

/// Non-strict convexity with counter-clockwise orientation; `tol` absorbs collinear round-off.
bool is_convex_ccw( std::span<const Vec2> poly, double tol );

/// Sutherland-Hodgman clip of `master` against the half-planes of `slave`.
///
/// Consecutive vertices closer than vertex_tol are merged. Returns an empty polygon when
/// fewer than three vertices survive or the area is below area_tol. Throws GeometryError if
/// either input is not convex and counter-clockwise.
std::vector<Vec2> clip_polygons( std::span<const Vec2> slave, std::span<const Vec2> master, double vertex_tol,
                                 double area_tol );

struct Triangle2
{
   std::array<Vec2, 3> v;

   double area() const { return 0.5 * cross( v[1] - v[0], v[2] - v[0] ); }
};

/// Centroid fan: one triangle per polygon edge.
std::vector<Triangle2> triangulate( std::span<const Vec2> poly );

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to one.
struct QuadRule
{
   int degree = 0;
   std::vector<Vec2> points;
   std::vector<double> weights;
};

/// Smallest available rule exact for polynomials of the requested degree.
/// Degrees up to 5 use 1, 3, 6 and 7 point symmetric rules, higher degrees a collapsed
/// Gauss-Legendre product. The default order 5 selects the 7-point rule.
const QuadRule& triangle_rule( int order );

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre( int n, std::vector<double>& nodes, std::vector<double>& weights );

struct InverseMap
{
   bool ok = false;
   Vec2 xi;
   int iterations = 0;
};

/// Damped Newton inversion of the bilinear map spanned by `corners` (at most 30 iterations,
/// residual <= 1e-12 times the element diameter). Fails when the result leaves
/// [-1 - param_tol, 1 + param_tol]^2.
InverseMap inverse_map( const std::array<Vec2, 4>& corners, const Vec2& p, double param_tol = 1e-8 );

Vec2 forward_map( const std::array<Vec2, 4>& corners, const Vec2& xi );

/// A_e = D_e M_e^{-1} by 3x3 Gauss on the element, so that Phi_j = sum_k A_e[j][k] N_k
/// satisfies int Phi_j N_k = delta_jk int N_k. Throws GeometryError for a singular M_e.
Mat4 dual_shape_coefficients( const std::array<Vec2, 4>& corners );

/// Element mass matrix int N_k N_l and lumped integrals int N_k by 3x3 Gauss.
Mat4 element_mass( const std::array<Vec2, 4>& corners, std::array<double, 4>* integrals = nullptr );

/// Per-slave-element quantities reused across its pairs.
struct SlaveFacet
{
   ElemData elem;
   FacetPlane plane;
   std::array<Vec2, 4> corners; ///< in the plane basis
   double size = 0.0;           ///< largest edge
   double area = 0.0;           ///< projected area
   Mat4 A {};                   ///< identity for the standard basis
};

SlaveFacet prepare_slave( const ElemData& slave, BasisKind basis );

enum class PairStatus { integrated, back_facing, empty_clip };

struct PairResult
{
   PairStatus status = PairStatus::empty_clip;
   Mat4 D {};                ///< D[j][k], local slave corners
   Mat4 M {};                ///< M[j][l], local master corners
   int cells = 0;
   long quad_points = 0;
   long failed_points = 0;
   double area = 0.0;        ///< summed clip-polygon area
};

/// Segment-based integration of one slave/master pair.
PairResult integrate_pair( const SlaveFacet& slave, const ElemData& master, const MortarOptions& options );

struct Triplet
{
   int row = 0;
   int col = 0;
   double value = 0.0;

   friend bool operator==( const Triplet&, const Triplet& ) = default;
};

/// Per slave element evaluation record.
struct SlaveDiagnostics
{
   ElemId elem = 0;
   long candidates = 0;
   long integrated = 0;
   long back_facing = 0;
   long empty_clip = 0;
   long failed_points = 0;
   long cells = 0;
   double covered_area = 0.0;
   double projected_area = 0.0;

   double covered_fraction() const { return projected_area > 0.0 ? covered_area / projected_area : 0.0; }
};

/// Unassembled contributions of one rank.
struct LocalMortar
{
   std::vector<Triplet> D;
   std::vector<Triplet> M;
   long quad_points = 0;
   long cells = 0;
   std::vector<SlaveDiagnostics> slaves; ///< ascending element id

   /// Appends `other` (a later round-robin iteration) and merges per-element records.
   void absorb( LocalMortar&& other );
};

/// Search, project, clip, triangulate and integrate every pair of the given element sets.
/// Iteration order is sorted pairs, so the output is deterministic.
LocalMortar evaluate_elements( std::span<const ElemData> slaves, std::span<const ElemData> masters,
                               const MortarOptions& options );

/// Runs evaluate_elements on every rank over its owned slaves and visible masters and adds the
/// quadrature point count to the rank's work clock. With rr_iteration >= 0 only the master
/// subdomain hosted in that round-robin iteration is used.
std::vector<LocalMortar> evaluate_interface( SimWorld& world, const MortarOptions& options, int rr_iteration = -1,
                                             bool wall_clock = false );

/// Assembled scalar coupling matrices; triplets sorted by (row, col) without duplicates.
struct MortarMatrices
{
   int slave_nodes = 0;
   int master_nodes = 0;
   std::vector<Triplet> D;
   std::vector<Triplet> M;
};

/// Sorts by (row, col) and sums duplicates in input order.
std::vector<Triplet> sum_duplicates( std::vector<Triplet> triplets );

/// Ships triplets to the owners of their rows (assembly tag) and sums them there.
/// Throws AssemblyError for rows outside the slave node range.
MortarMatrices assemble_offprocess( SimWorld& world, const std::vector<LocalMortar>& locals );

/// Single-context reference: every slave against every master.
MortarMatrices assemble_serial( const Scenario& scenario, const MortarOptions& options );

double frobenius_norm( const std::vector<Triplet>& a );

/// ||a - b||_F over the union of both patterns; inputs must be sorted and duplicate-free.
double frobenius_difference( const std::vector<Triplet>& a, const std::vector<Triplet>& b );

/// max(rel. Frobenius difference of D, of M).
double relative_difference( const MortarMatrices& a, const MortarMatrices& b );

/// Entry lookup in a sorted triplet list (0 when absent).
double entry( const std::vector<Triplet>& a, int row, int col );

void write_matrix_market( const std::vector<Triplet>& a, int rows, int cols, std::ostream& out );

/// CSV: slave_elem, rank, candidate_pairs, integrated_pairs, back_facing, empty_clip,
/// failed_points, cells, covered_fraction
void write_diagnostics_csv( const std::vector<LocalMortar>& locals, std::ostream& out );

} // namespace mortarbench
