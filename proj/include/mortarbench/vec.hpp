#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace mortarbench
{

/// Plain 3-vector with value semantics.
struct Vec3
{
   double x = 0.0;
   double y = 0.0;
   double z = 0.0;

   constexpr double operator[]( std::size_t i ) const { return i == 0 ? x : ( i == 1 ? y : z ); }
   constexpr double& operator[]( std::size_t i ) { return i == 0 ? x : ( i == 1 ? y : z ); }

   constexpr Vec3& operator+=( const Vec3& o ) { x += o.x; y += o.y; z += o.z; return *this; }
   constexpr Vec3& operator-=( const Vec3& o ) { x -= o.x; y -= o.y; z -= o.z; return *this; }
   constexpr Vec3& operator*=( double s ) { x *= s; y *= s; z *= s; return *this; }

   friend constexpr bool operator==( const Vec3&, const Vec3& ) = default;
};

constexpr Vec3 operator+( Vec3 a, const Vec3& b ) { return a += b; }
constexpr Vec3 operator-( Vec3 a, const Vec3& b ) { return a -= b; }
constexpr Vec3 operator-( const Vec3& a ) { return { -a.x, -a.y, -a.z }; }
constexpr Vec3 operator*( Vec3 a, double s ) { return a *= s; }
constexpr Vec3 operator*( double s, Vec3 a ) { return a *= s; }

constexpr double dot( const Vec3& a, const Vec3& b ) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross( const Vec3& a, const Vec3& b )
{
   return { a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x };
}

inline double norm( const Vec3& a ) { return std::sqrt( dot( a, a ) ); }

/// 2-vector used for coordinates in a facet plane basis.
struct Vec2
{
   double x = 0.0;
   double y = 0.0;

   constexpr Vec2& operator+=( const Vec2& o ) { x += o.x; y += o.y; return *this; }
   constexpr Vec2& operator-=( const Vec2& o ) { x -= o.x; y -= o.y; return *this; }
   constexpr Vec2& operator*=( double s ) { x *= s; y *= s; return *this; }

   friend constexpr bool operator==( const Vec2&, const Vec2& ) = default;
};

constexpr Vec2 operator+( Vec2 a, const Vec2& b ) { return a += b; }
constexpr Vec2 operator-( Vec2 a, const Vec2& b ) { return a -= b; }
constexpr Vec2 operator*( Vec2 a, double s ) { return a *= s; }
constexpr Vec2 operator*( double s, Vec2 a ) { return a *= s; }

constexpr double dot( const Vec2& a, const Vec2& b ) { return a.x * b.x + a.y * b.y; }

/// z-component of the 3D cross product of two in-plane vectors.
constexpr double cross( const Vec2& a, const Vec2& b ) { return a.x * b.y - a.y * b.x; }

inline double norm( const Vec2& a ) { return std::sqrt( dot( a, a ) ); }

/// Axis-aligned bounding box.
struct Aabb
{
   Vec3 lo { HUGE_VAL, HUGE_VAL, HUGE_VAL };
   Vec3 hi { -HUGE_VAL, -HUGE_VAL, -HUGE_VAL };

   void expand( const Vec3& p )
   {
      for ( std::size_t d = 0; d < 3; ++d ) {
         lo[d] = std::min( lo[d], p[d] );
         hi[d] = std::max( hi[d], p[d] );
      }
   }

   void inflate( double t )
   {
      for ( std::size_t d = 0; d < 3; ++d ) {
         lo[d] -= t;
         hi[d] += t;
      }
   }

   bool empty() const { return lo.x > hi.x; }

   bool overlaps( const Aabb& o ) const
   {
      for ( std::size_t d = 0; d < 3; ++d ) {
         if ( lo[d] > o.hi[d] || o.lo[d] > hi[d] ) { return false; }
      }
      return true;
   }

   Vec3 extent() const { return hi - lo; }
};

} // namespace mortarbench
