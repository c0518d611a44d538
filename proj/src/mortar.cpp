#include "mortarbench/mortar.hpp"

#include "mortarbench/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <string>

namespace mortarbench
{

// ---------------------------------------------------------------- search

std::vector<CandidatePair> contact_search( std::span<const ElemData> slaves, std::span<const ElemData> masters,
                                           double search_tol )
{
   auto box_of = [search_tol]( const ElemData& d ) {
      Aabb b;
      for ( const Vec3& x : d.x ) {
         b.expand( x );
      }
      b.inflate( search_tol );
      return b;
   };
   std::vector<Aabb> mbox;
   mbox.reserve( masters.size() );
   for ( const ElemData& d : masters ) {
      mbox.push_back( box_of( d ) );
   }
   // sweep along x over masters sorted by their lower bound
   std::vector<std::size_t> order( masters.size() );
   for ( std::size_t i = 0; i < order.size(); ++i ) {
      order[i] = i;
   }
   std::sort( order.begin(), order.end(),
              [&]( std::size_t a, std::size_t b ) { return mbox[a].lo.x < mbox[b].lo.x; } );

   std::vector<CandidatePair> pairs;
   for ( const ElemData& s : slaves ) {
      const Aabb sb = box_of( s );
      for ( std::size_t i : order ) {
         if ( mbox[i].lo.x > sb.hi.x ) { break; }
         if ( sb.overlaps( mbox[i] ) ) { pairs.push_back( { s.id, masters[i].id } ); }
      }
   }
   std::sort( pairs.begin(), pairs.end() );
   pairs.erase( std::unique( pairs.begin(), pairs.end() ), pairs.end() );
   return pairs;
}

// ---------------------------------------------------------------- shape functions

std::array<double, 4> shape_values( const Vec2& xi )
{
   const double a = 1.0 - xi.x, b = 1.0 + xi.x, c = 1.0 - xi.y, d = 1.0 + xi.y;
   return { 0.25 * a * c, 0.25 * b * c, 0.25 * b * d, 0.25 * a * d };
}

std::array<Vec2, 4> shape_gradients( const Vec2& xi )
{
   const double a = 1.0 - xi.x, b = 1.0 + xi.x, c = 1.0 - xi.y, d = 1.0 + xi.y;
   return { Vec2 { -0.25 * c, -0.25 * a }, Vec2 { 0.25 * c, -0.25 * b }, Vec2 { 0.25 * d, 0.25 * b },
            Vec2 { -0.25 * d, 0.25 * a } };
}

Vec2 forward_map( const std::array<Vec2, 4>& corners, const Vec2& xi )
{
   const auto N = shape_values( xi );
   Vec2 p;
   for ( std::size_t a = 0; a < 4; ++a ) {
      p += N[a] * corners[a];
   }
   return p;
}

InverseMap inverse_map( const std::array<Vec2, 4>& corners, const Vec2& p, double param_tol )
{
   double diam = 0.0;
   for ( std::size_t a = 0; a < 4; ++a ) {
      for ( std::size_t b = a + 1; b < 4; ++b ) {
         diam = std::max( diam, norm( corners[a] - corners[b] ) );
      }
   }
   const double tol = 1e-12 * diam;

   InverseMap out;
   Vec2 xi;
   Vec2 r = forward_map( corners, xi ) - p;
   double rn = norm( r );
   for ( int it = 0; it < 30 && rn > tol; ++it ) {
      const auto dN = shape_gradients( xi );
      Vec2 jx, jy; // columns d x / d xi, d x / d eta
      for ( std::size_t a = 0; a < 4; ++a ) {
         jx += dN[a].x * corners[a];
         jy += dN[a].y * corners[a];
      }
      const double det = cross( jx, jy );
      if ( det == 0.0 ) { return out; }
      const Vec2 step { -( jy.y * r.x - jy.x * r.y ) / det, -( -jx.y * r.x + jx.x * r.y ) / det };
      double lambda = 1.0;
      Vec2 trial = xi + step;
      Vec2 rt = forward_map( corners, trial ) - p;
      while ( norm( rt ) > rn && lambda > 1.0 / 64.0 ) {
         lambda *= 0.5;
         trial = xi + lambda * step;
         rt = forward_map( corners, trial ) - p;
      }
      xi = trial;
      r = rt;
      rn = norm( r );
      out.iterations = it + 1;
   }
   out.xi = xi;
   const double bound = 1.0 + param_tol;
   out.ok = rn <= tol && std::abs( xi.x ) <= bound && std::abs( xi.y ) <= bound;
   return out;
}

namespace
{

constexpr std::array<double, 3> gauss3_points { -0.7745966692414834, 0.0, 0.7745966692414834 };
constexpr std::array<double, 3> gauss3_weights { 5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0 };

} // namespace

Mat4 element_mass( const std::array<Vec2, 4>& corners, std::array<double, 4>* integrals )
{
   Mat4 m {};
   std::array<double, 4> lumped {};
   for ( std::size_t i = 0; i < 3; ++i ) {
      for ( std::size_t j = 0; j < 3; ++j ) {
         const Vec2 xi { gauss3_points[i], gauss3_points[j] };
         const auto N = shape_values( xi );
         const auto dN = shape_gradients( xi );
         Vec2 jx, jy;
         for ( std::size_t a = 0; a < 4; ++a ) {
            jx += dN[a].x * corners[a];
            jy += dN[a].y * corners[a];
         }
         const double det = cross( jx, jy );
         if ( !( det > 0.0 ) ) { throw GeometryError( "element Jacobian is not positive" ); }
         const double w = gauss3_weights[i] * gauss3_weights[j] * det;
         for ( std::size_t k = 0; k < 4; ++k ) {
            lumped[k] += N[k] * w;
            for ( std::size_t l = 0; l < 4; ++l ) {
               m[k][l] += N[k] * N[l] * w;
            }
         }
      }
   }
   if ( integrals ) { *integrals = lumped; }
   return m;
}

Mat4 dual_shape_coefficients( const std::array<Vec2, 4>& corners )
{
   std::array<double, 4> lumped {};
   const Mat4 m = element_mass( corners, &lumped );
   Eigen::Matrix4d Me;
   for ( int k = 0; k < 4; ++k ) {
      for ( int l = 0; l < 4; ++l ) {
         Me( k, l ) = m[k][l];
      }
   }
   Eigen::FullPivLU<Eigen::Matrix4d> lu( Me );
   lu.setThreshold( 1e-14 );
   if ( !lu.isInvertible() ) { throw GeometryError( "singular element mass matrix" ); }
   const Eigen::Matrix4d De = Eigen::Vector4d( lumped[0], lumped[1], lumped[2], lumped[3] ).asDiagonal();
   const Eigen::Matrix4d A = De * lu.inverse();
   Mat4 out {};
   for ( int j = 0; j < 4; ++j ) {
      for ( int k = 0; k < 4; ++k ) {
         out[j][k] = A( j, k );
      }
   }
   return out;
}

// ---------------------------------------------------------------- quadrature

void gauss_legendre( int n, std::vector<double>& nodes, std::vector<double>& weights )
{
   if ( n < 1 ) { throw ConfigError( "Gauss-Legendre order must be >= 1" ); }
   nodes.assign( static_cast<std::size_t>( n ), 0.0 );
   weights.assign( static_cast<std::size_t>( n ), 0.0 );
   for ( int i = 0; i < n; ++i ) {
      double x = std::cos( std::numbers::pi * ( i + 0.75 ) / ( n + 0.5 ) );
      double dp = 1.0;
      for ( int it = 0; it < 100; ++it ) {
         double p0 = 1.0, p1 = x;
         for ( int k = 2; k <= n; ++k ) {
            const double pk = ( ( 2.0 * k - 1.0 ) * x * p1 - ( k - 1.0 ) * p0 ) / k;
            p0 = p1;
            p1 = pk;
         }
         if ( n == 1 ) { p0 = 1.0; }
         dp = n * ( x * p1 - p0 ) / ( x * x - 1.0 );
         const double dx = p1 / dp;
         x -= dx;
         if ( std::abs( dx ) < 1e-16 ) { break; }
      }
      nodes[i] = x;
      weights[i] = 2.0 / ( ( 1.0 - x * x ) * dp * dp );
   }
   std::reverse( nodes.begin(), nodes.end() );
   std::reverse( weights.begin(), weights.end() );
}

namespace
{

QuadRule symmetric_rule( int degree, const std::vector<std::array<double, 3>>& orbits )
{
   // orbit (a, b, w): b < 0 marks the centroid, b == 0 a 3-point orbit (a, a, 1 - 2a)
   QuadRule rule;
   rule.degree = degree;
   for ( const auto& [a, kind, w] : orbits ) {
      if ( kind < 0.0 ) {
         rule.points.push_back( { 1.0 / 3.0, 1.0 / 3.0 } );
         rule.weights.push_back( w );
         continue;
      }
      const double c = 1.0 - 2.0 * a;
      for ( const Vec2& p : { Vec2 { a, a }, Vec2 { c, a }, Vec2 { a, c } } ) {
         rule.points.push_back( p );
         rule.weights.push_back( w );
      }
   }
   return rule;
}

QuadRule collapsed_rule( int degree )
{
   const int n = ( degree + 3 ) / 2; // ceil((degree + 2) / 2)
   std::vector<double> x, w;
   gauss_legendre( n, x, w );
   QuadRule rule;
   rule.degree = degree;
   for ( int i = 0; i < n; ++i ) {
      const double u = 0.5 * ( x[i] + 1.0 );
      for ( int j = 0; j < n; ++j ) {
         const double v = 0.5 * ( x[j] + 1.0 );
         rule.points.push_back( { u, v * ( 1.0 - u ) } );
         rule.weights.push_back( 2.0 * ( 0.5 * w[i] ) * ( 0.5 * w[j] ) * ( 1.0 - u ) );
      }
   }
   return rule;
}

constexpr int max_rule_order = 20;

std::vector<QuadRule> make_rules()
{
   const double s15 = std::sqrt( 15.0 );
   std::vector<QuadRule> rules( max_rule_order + 1 );
   const QuadRule one = symmetric_rule( 1, { { 0.0, -1.0, 1.0 } } );
   const QuadRule three = symmetric_rule( 2, { { 1.0 / 6.0, 0.0, 1.0 / 3.0 } } );
   const QuadRule six = symmetric_rule( 4, { { 0.445948490915965, 0.0, 0.223381589678011 },
                                            { 0.091576213509771, 0.0, 0.109951743655322 } } );
   const QuadRule seven = symmetric_rule( 5, { { 0.0, -1.0, 9.0 / 40.0 },
                                              { ( 6.0 - s15 ) / 21.0, 0.0, ( 155.0 - s15 ) / 1200.0 },
                                              { ( 6.0 + s15 ) / 21.0, 0.0, ( 155.0 + s15 ) / 1200.0 } } );
   rules[0] = rules[1] = one;
   rules[2] = three;
   rules[3] = rules[4] = six;
   rules[5] = seven;
   for ( int q = 6; q <= max_rule_order; ++q ) {
      rules[q] = collapsed_rule( q );
   }
   // the tabulated weights carry 15 digits; rescale so that each rule integrates 1 exactly
   for ( QuadRule& r : rules ) {
      double sum = 0.0;
      for ( double w : r.weights ) {
         sum += w;
      }
      for ( double& w : r.weights ) {
         w /= sum;
      }
   }
   return rules;
}

} // namespace

const QuadRule& triangle_rule( int order )
{
   static const std::vector<QuadRule> rules = make_rules();
   if ( order < 1 || order > max_rule_order ) {
      throw ConfigError( "quadrature order must be in [1, " + std::to_string( max_rule_order ) + "]" );
   }
   return rules[static_cast<std::size_t>( order )];
}

// ---------------------------------------------------------------- geometry

std::array<Vec2, 4> project_to_plane( const std::array<Vec3, 4>& x, const FacetPlane& plane )
{
   std::array<Vec2, 4> out;
   for ( std::size_t a = 0; a < 4; ++a ) {
      out[a] = plane.to_plane( x[a] );
   }
   return out;
}

bool back_facing( const FacetPlane& slave_plane, const std::array<Vec3, 4>& master_x, double angle_tol )
{
   const Vec3 c = facet_cross( master_x );
   const double len = norm( c );
   if ( len == 0.0 ) { return true; }
   return dot( slave_plane.normal, c ) / len > -angle_tol;
}

double polygon_area( std::span<const Vec2> poly )
{
   double a = 0.0;
   for ( std::size_t i = 0; i < poly.size(); ++i ) {
      a += cross( poly[i], poly[( i + 1 ) % poly.size()] );
   }
   return 0.5 * a;
}

bool is_convex_ccw( std::span<const Vec2> poly, double tol )
{
   const std::size_t n = poly.size();
   if ( n < 3 ) { return false; }
   for ( std::size_t i = 0; i < n; ++i ) {
      const Vec2& a = poly[( i + n - 1 ) % n];
      const Vec2& b = poly[i];
      const Vec2& c = poly[( i + 1 ) % n];
      if ( cross( b - a, c - b ) < -tol ) { return false; }
   }
   return polygon_area( poly ) > 0.0;
}

std::vector<Vec2> clip_polygons( std::span<const Vec2> slave, std::span<const Vec2> master, double vertex_tol,
                                 double area_tol )
{
   if ( !is_convex_ccw( slave, area_tol ) ) { throw GeometryError( "slave clip polygon is not convex" ); }
   if ( !is_convex_ccw( master, area_tol ) ) { throw GeometryError( "master clip polygon is not convex" ); }

   std::vector<Vec2> out( master.begin(), master.end() );
   std::vector<Vec2> in;
   for ( std::size_t i = 0; i < slave.size() && !out.empty(); ++i ) {
      const Vec2 a = slave[i];
      const Vec2 edge = slave[( i + 1 ) % slave.size()] - a;
      in.swap( out );
      out.clear();
      for ( std::size_t j = 0; j < in.size(); ++j ) {
         const Vec2& prev = in[( j + in.size() - 1 ) % in.size()];
         const Vec2& cur = in[j];
         const double dp = cross( edge, prev - a );
         const double dc = cross( edge, cur - a );
         if ( dc >= 0.0 ) {
            if ( dp < 0.0 ) { out.push_back( prev + ( dp / ( dp - dc ) ) * ( cur - prev ) ); }
            out.push_back( cur );
         } else if ( dp >= 0.0 ) {
            out.push_back( prev + ( dp / ( dp - dc ) ) * ( cur - prev ) );
         }
      }
   }

   std::vector<Vec2> merged;
   for ( const Vec2& p : out ) {
      if ( merged.empty() || norm( p - merged.back() ) > vertex_tol ) { merged.push_back( p ); }
   }
   while ( merged.size() > 1 && norm( merged.front() - merged.back() ) <= vertex_tol ) {
      merged.pop_back();
   }
   if ( merged.size() < 3 || polygon_area( merged ) < area_tol ) { return {}; }
   return merged;
}

std::vector<Triangle2> triangulate( std::span<const Vec2> poly )
{
   Vec2 c;
   for ( const Vec2& p : poly ) {
      c += p;
   }
   c *= 1.0 / static_cast<double>( poly.size() );
   std::vector<Triangle2> cells;
   cells.reserve( poly.size() );
   for ( std::size_t i = 0; i < poly.size(); ++i ) {
      cells.push_back( { { poly[i], poly[( i + 1 ) % poly.size()], c } } );
   }
   return cells;
}

// ---------------------------------------------------------------- pair integration

SlaveFacet prepare_slave( const ElemData& slave, BasisKind basis )
{
   SlaveFacet s;
   s.elem = slave;
   s.plane = facet_plane( slave.x, slave.n );
   s.corners = project_to_plane( slave.x, s.plane );
   for ( std::size_t a = 0; a < 4; ++a ) {
      s.size = std::max( s.size, norm( slave.x[( a + 1 ) % 4] - slave.x[a] ) );
   }
   s.area = polygon_area( s.corners );
   if ( !is_convex_ccw( s.corners, 1e-12 * s.size * s.size ) ) {
      throw GeometryError( "slave element " + std::to_string( slave.id ) + " projects to a non-convex polygon" );
   }
   if ( basis == BasisKind::dual ) {
      s.A = dual_shape_coefficients( s.corners );
   } else {
      for ( std::size_t j = 0; j < 4; ++j ) {
         s.A[j][j] = 1.0;
      }
   }
   return s;
}

PairResult integrate_pair( const SlaveFacet& slave, const ElemData& master, const MortarOptions& options )
{
   PairResult res;
   if ( back_facing( slave.plane, master.x, options.angle_tol ) ) {
      res.status = PairStatus::back_facing;
      return res;
   }
   const double h = slave.size;
   const double vtol = options.vertex_tol * h;
   const double atol = options.cell_area_tol * h * h;

   const std::array<Vec2, 4> mc = project_to_plane( master.x, slave.plane );
   std::array<Vec2, 4> ccw = mc;
   if ( polygon_area( ccw ) < 0.0 ) { std::reverse( ccw.begin(), ccw.end() ); }

   std::vector<std::vector<Vec2>> pieces;
   if ( is_convex_ccw( ccw, atol ) ) {
      pieces.emplace_back( ccw.begin(), ccw.end() );
   } else {
      // warped master: split through the reflex corner into two triangles
      std::size_t r = 0;
      for ( std::size_t i = 0; i < 4; ++i ) {
         if ( cross( ccw[i] - ccw[( i + 3 ) % 4], ccw[( i + 1 ) % 4] - ccw[i] ) < 0.0 ) { r = i; }
      }
      for ( const std::array<std::size_t, 3>& t : { std::array<std::size_t, 3> { r, r + 1, r + 2 },
                                                    std::array<std::size_t, 3> { r, r + 2, r + 3 } } ) {
         std::vector<Vec2> tri { ccw[t[0] % 4], ccw[t[1] % 4], ccw[t[2] % 4] };
         if ( polygon_area( tri ) > atol ) { pieces.push_back( std::move( tri ) ); }
      }
   }

   const QuadRule& rule = triangle_rule( options.quad_order );
   for ( const auto& piece : pieces ) {
      const std::vector<Vec2> poly = clip_polygons( slave.corners, piece, vtol, atol );
      if ( poly.empty() ) { continue; }
      res.area += polygon_area( poly );
      for ( const Triangle2& cell : triangulate( poly ) ) {
         const double area = cell.area();
         ++res.cells;
         for ( std::size_t q = 0; q < rule.points.size(); ++q ) {
            ++res.quad_points;
            const Vec2 p = cell.v[0] + rule.points[q].x * ( cell.v[1] - cell.v[0] ) +
                           rule.points[q].y * ( cell.v[2] - cell.v[0] );
            const InverseMap xs = inverse_map( slave.corners, p, options.param_tol );
            const InverseMap xm = inverse_map( mc, p, options.param_tol );
            if ( !xs.ok || !xm.ok ) {
               ++res.failed_points;
               continue;
            }
            const double w = rule.weights[q] * area;
            const auto Ns = shape_values( xs.xi );
            const auto Nm = shape_values( xm.xi );
            for ( std::size_t j = 0; j < 4; ++j ) {
               double phi = 0.0;
               for ( std::size_t k = 0; k < 4; ++k ) {
                  phi += slave.A[j][k] * Ns[k];
               }
               for ( std::size_t k = 0; k < 4; ++k ) {
                  res.D[j][k] += phi * Ns[k] * w;
                  res.M[j][k] += phi * Nm[k] * w;
               }
            }
         }
      }
   }
   res.status = res.cells > 0 ? PairStatus::integrated : PairStatus::empty_clip;
   return res;
}

// ---------------------------------------------------------------- evaluation

void LocalMortar::absorb( LocalMortar&& other )
{
   D.insert( D.end(), other.D.begin(), other.D.end() );
   M.insert( M.end(), other.M.begin(), other.M.end() );
   quad_points += other.quad_points;
   cells += other.cells;
   if ( slaves.empty() ) {
      slaves = std::move( other.slaves );
      return;
   }
   if ( slaves.size() != other.slaves.size() ) { throw Error( "merging evaluations of different slave sets" ); }
   for ( std::size_t i = 0; i < slaves.size(); ++i ) {
      SlaveDiagnostics& a = slaves[i];
      const SlaveDiagnostics& b = other.slaves[i];
      a.candidates += b.candidates;
      a.integrated += b.integrated;
      a.back_facing += b.back_facing;
      a.empty_clip += b.empty_clip;
      a.failed_points += b.failed_points;
      a.cells += b.cells;
      a.covered_area += b.covered_area;
   }
}

LocalMortar evaluate_elements( std::span<const ElemData> slaves, std::span<const ElemData> masters,
                               const MortarOptions& options )
{
   LocalMortar out;
   std::vector<SlaveFacet> facets;
   facets.reserve( slaves.size() );
   for ( const ElemData& s : slaves ) {
      facets.push_back( prepare_slave( s, options.basis ) );
      SlaveDiagnostics d;
      d.elem = s.id;
      d.projected_area = facets.back().area;
      out.slaves.push_back( d );
   }
   std::map<ElemId, std::size_t> sidx, midx;
   for ( std::size_t i = 0; i < slaves.size(); ++i ) {
      sidx[slaves[i].id] = i;
   }
   for ( std::size_t i = 0; i < masters.size(); ++i ) {
      midx[masters[i].id] = i;
   }

   for ( const CandidatePair& pair : contact_search( slaves, masters, options.search_tol ) ) {
      const std::size_t si = sidx.at( pair.slave );
      const SlaveFacet& sf = facets[si];
      const ElemData& m = masters[midx.at( pair.master )];
      SlaveDiagnostics& diag = out.slaves[si];
      ++diag.candidates;
      const PairResult res = integrate_pair( sf, m, options );
      out.quad_points += res.quad_points;
      out.cells += res.cells;
      diag.cells += res.cells;
      diag.failed_points += res.failed_points;
      switch ( res.status ) {
         case PairStatus::back_facing: ++diag.back_facing; continue;
         case PairStatus::empty_clip: ++diag.empty_clip; continue;
         case PairStatus::integrated: ++diag.integrated; break;
      }
      diag.covered_area += res.area;
      for ( std::size_t j = 0; j < 4; ++j ) {
         for ( std::size_t k = 0; k < 4; ++k ) {
            out.D.push_back( { sf.elem.nodes[j], sf.elem.nodes[k], res.D[j][k] } );
            out.M.push_back( { sf.elem.nodes[j], m.nodes[k], res.M[j][k] } );
         }
      }
   }
   std::sort( out.slaves.begin(), out.slaves.end(),
              []( const SlaveDiagnostics& a, const SlaveDiagnostics& b ) { return a.elem < b.elem; } );
   return out;
}

namespace
{

MortarOptions resolved( const MortarOptions& options, const InterfaceMesh& slave )
{
   MortarOptions o = options;
   if ( o.search_tol < 0.0 ) { o.search_tol = 0.5 * slave.max_edge(); }
   return o;
}

std::vector<ElemData> merged_by_id( const std::vector<ElemData>& a, const std::vector<ElemData>& b )
{
   std::vector<ElemData> out;
   out.reserve( a.size() + b.size() );
   std::merge( a.begin(), a.end(), b.begin(), b.end(), std::back_inserter( out ),
               []( const ElemData& x, const ElemData& y ) { return x.id < y.id; } );
   return out;
}

} // namespace

std::vector<LocalMortar> evaluate_interface( SimWorld& world, const MortarOptions& options, int rr_iteration,
                                             bool wall_clock )
{
   const MortarOptions opt = resolved( options, world.scenario().slave );
   const int P = world.nranks();
   std::vector<LocalMortar> locals( static_cast<std::size_t>( P ) );
   world.for_each_rank( [&]( RankId p ) {
      const auto t0 = std::chrono::steady_clock::now();
      const RankState& rs = world.rank_state( p );
      std::vector<ElemData> masters;
      if ( rr_iteration < 0 ) {
         masters = merged_by_id( rs.master_owned, rs.master_ghost );
      } else {
         const RankId hosted = ( ( p - rr_iteration ) % P + P ) % P;
         masters = hosted == p ? rs.master_owned : rs.master_ghost;
      }
      locals[p] = evaluate_elements( rs.slave_local, masters, opt );
      const double secs =
         wall_clock ? std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count() : 0.0;
      world.add_work( p, locals[p].quad_points, secs );
   } );
   return locals;
}

// ---------------------------------------------------------------- assembly

std::vector<Triplet> sum_duplicates( std::vector<Triplet> t )
{
   std::stable_sort( t.begin(), t.end(), []( const Triplet& a, const Triplet& b ) {
      return a.row < b.row || ( a.row == b.row && a.col < b.col );
   } );
   std::vector<Triplet> out;
   for ( const Triplet& x : t ) {
      if ( !out.empty() && out.back().row == x.row && out.back().col == x.col ) {
         out.back().value += x.value;
      } else {
         out.push_back( x );
      }
   }
   return out;
}

namespace
{

void check_triplets( const std::vector<Triplet>& t, int rows, int cols, const char* what )
{
   for ( const Triplet& x : t ) {
      if ( x.row < 0 || x.row >= rows || x.col < 0 || x.col >= cols ) {
         throw AssemblyError( std::string( what ) + " triplet (" + std::to_string( x.row ) + ", " +
                              std::to_string( x.col ) + ") addresses an unknown node" );
      }
   }
}

void put_triplets( ByteWriter& w, const std::vector<Triplet>& t )
{
   w.put( static_cast<std::int64_t>( t.size() ) );
   for ( const Triplet& x : t ) {
      w.put( x );
   }
}

void get_triplets( ByteReader& r, std::vector<Triplet>& t )
{
   const auto n = r.get<std::int64_t>();
   for ( std::int64_t i = 0; i < n; ++i ) {
      t.push_back( r.get<Triplet>() );
   }
}

} // namespace

MortarMatrices assemble_offprocess( SimWorld& world, const std::vector<LocalMortar>& locals )
{
   const int P = world.nranks();
   if ( static_cast<int>( locals.size() ) != P ) { throw AssemblyError( "one local contribution per rank expected" ); }
   const int rows = world.scenario().slave.num_nodes();
   const int mcols = world.scenario().master.num_nodes();
   const std::vector<RankId>& row_owner = world.row_dd().node_owner;

   std::vector<std::vector<Triplet>> kept_d( static_cast<std::size_t>( P ) ), kept_m( static_cast<std::size_t>( P ) );
   world.for_each_rank( [&]( RankId p ) {
      check_triplets( locals[p].D, rows, rows, "D" );
      check_triplets( locals[p].M, rows, mcols, "M" );
      std::vector<std::vector<Triplet>> d( static_cast<std::size_t>( P ) ), m( static_cast<std::size_t>( P ) );
      for ( const Triplet& x : locals[p].D ) {
         d[row_owner[x.row]].push_back( x );
      }
      for ( const Triplet& x : locals[p].M ) {
         m[row_owner[x.row]].push_back( x );
      }
      for ( RankId dst = 0; dst < P; ++dst ) {
         if ( dst == p ) {
            kept_d[p] = std::move( d[dst] );
            kept_m[p] = std::move( m[dst] );
            continue;
         }
         if ( d[dst].empty() && m[dst].empty() ) { continue; }
         std::vector<int> rows_sent;
         for ( const auto* t : { &d[dst], &m[dst] } ) {
            for ( const Triplet& x : *t ) {
               rows_sent.push_back( x.row );
            }
         }
         std::sort( rows_sent.begin(), rows_sent.end() );
         rows_sent.erase( std::unique( rows_sent.begin(), rows_sent.end() ), rows_sent.end() );
         Message msg;
         msg.src = p;
         msg.dst = dst;
         msg.tag = Tag::assembly;
         msg.payload_nodes = static_cast<long>( rows_sent.size() );
         ByteWriter w;
         put_triplets( w, d[dst] );
         put_triplets( w, m[dst] );
         msg.payload = w.take();
         world.post( std::move( msg ) );
      }
   } );
   world.deliver();

   std::vector<std::vector<Triplet>> owned_d( static_cast<std::size_t>( P ) ), owned_m( static_cast<std::size_t>( P ) );
   world.for_each_rank( [&]( RankId p ) {
      RankState& rs = world.rank_state( p );
      std::vector<Triplet> d = std::move( kept_d[p] );
      std::vector<Triplet> m = std::move( kept_m[p] );
      std::vector<Message> rest;
      for ( Message& msg : rs.inbox ) {
         if ( msg.tag != Tag::assembly ) {
            rest.push_back( std::move( msg ) );
            continue;
         }
         ByteReader r( msg.payload );
         get_triplets( r, d );
         get_triplets( r, m );
      }
      rs.inbox = std::move( rest );
      owned_d[p] = sum_duplicates( std::move( d ) );
      owned_m[p] = sum_duplicates( std::move( m ) );
   } );

   MortarMatrices out;
   out.slave_nodes = rows;
   out.master_nodes = mcols;
   for ( RankId p = 0; p < P; ++p ) {
      out.D.insert( out.D.end(), owned_d[p].begin(), owned_d[p].end() );
      out.M.insert( out.M.end(), owned_m[p].begin(), owned_m[p].end() );
   }
   out.D = sum_duplicates( std::move( out.D ) );
   out.M = sum_duplicates( std::move( out.M ) );
   return out;
}

MortarMatrices assemble_serial( const Scenario& scenario, const MortarOptions& options )
{
   std::vector<ElemData> slaves, masters;
   for ( ElemId e = 0; e < scenario.slave.num_elems(); ++e ) {
      slaves.push_back( elem_data( scenario.slave, e ) );
   }
   for ( ElemId e = 0; e < scenario.master.num_elems(); ++e ) {
      masters.push_back( elem_data( scenario.master, e ) );
   }
   LocalMortar local = evaluate_elements( slaves, masters, resolved( options, scenario.slave ) );
   MortarMatrices out;
   out.slave_nodes = scenario.slave.num_nodes();
   out.master_nodes = scenario.master.num_nodes();
   out.D = sum_duplicates( std::move( local.D ) );
   out.M = sum_duplicates( std::move( local.M ) );
   return out;
}

double frobenius_norm( const std::vector<Triplet>& a )
{
   double s = 0.0;
   for ( const Triplet& x : a ) {
      s += x.value * x.value;
   }
   return std::sqrt( s );
}

double frobenius_difference( const std::vector<Triplet>& a, const std::vector<Triplet>& b )
{
   auto less = []( const Triplet& x, const Triplet& y ) { return x.row < y.row || ( x.row == y.row && x.col < y.col ); };
   double s = 0.0;
   std::size_t i = 0, j = 0;
   while ( i < a.size() || j < b.size() ) {
      double d;
      if ( j == b.size() || ( i < a.size() && less( a[i], b[j] ) ) ) {
         d = a[i++].value;
      } else if ( i == a.size() || less( b[j], a[i] ) ) {
         d = b[j++].value;
      } else {
         d = a[i++].value - b[j++].value;
      }
      s += d * d;
   }
   return std::sqrt( s );
}

double relative_difference( const MortarMatrices& a, const MortarMatrices& b )
{
   auto rel = []( const std::vector<Triplet>& x, const std::vector<Triplet>& y ) {
      const double ref = frobenius_norm( y );
      const double diff = frobenius_difference( x, y );
      return ref > 0.0 ? diff / ref : diff;
   };
   return std::max( rel( a.D, b.D ), rel( a.M, b.M ) );
}

double entry( const std::vector<Triplet>& a, int row, int col )
{
   auto it = std::lower_bound( a.begin(), a.end(), Triplet { row, col, 0.0 }, []( const Triplet& x, const Triplet& y ) {
      return x.row < y.row || ( x.row == y.row && x.col < y.col );
   } );
   return ( it != a.end() && it->row == row && it->col == col ) ? it->value : 0.0;
}

void write_matrix_market( const std::vector<Triplet>& a, int rows, int cols, std::ostream& out )
{
   const auto old = out.precision( 17 );
   out << "%%MatrixMarket matrix coordinate real general\n";
   out << rows << ' ' << cols << ' ' << a.size() << '\n';
   for ( const Triplet& x : a ) {
      out << x.row + 1 << ' ' << x.col + 1 << ' ' << x.value << '\n';
   }
   out.precision( old );
}

void write_diagnostics_csv( const std::vector<LocalMortar>& locals, std::ostream& out )
{
   out << "slave_elem,rank,candidate_pairs,integrated_pairs,back_facing,empty_clip,failed_points,cells,covered_fraction\n";
   std::vector<std::pair<const SlaveDiagnostics*, int>> rows;
   for ( std::size_t p = 0; p < locals.size(); ++p ) {
      for ( const SlaveDiagnostics& d : locals[p].slaves ) {
         rows.emplace_back( &d, static_cast<int>( p ) );
      }
   }
   std::sort( rows.begin(), rows.end(), []( const auto& a, const auto& b ) { return a.first->elem < b.first->elem; } );
   const auto old = out.precision( 15 );
   for ( const auto& [d, p] : rows ) {
      out << d->elem << ',' << p << ',' << d->candidates << ',' << d->integrated << ',' << d->back_facing << ','
          << d->empty_clip << ',' << d->failed_points << ',' << d->cells << ',' << d->covered_fraction() << '\n';
   }
   out.precision( old );
}

} // namespace mortarbench
