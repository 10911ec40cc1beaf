#pragma once

#include <string>
#include <vector>

#include "ellab/types.hpp"

namespace ellab {

enum class Shape {
  Interval,
  UnitSquare,
  Rectangle,
  Disk,
  Ellipse,
  RegularPolygon,
  ConvexPolygon,
  Stadium,
};

// Description of a computational domain. All shapes are convex; Disk, Ellipse
// and Interval are the strictly convex ones. The stadium is kept as a
// non-strictly-convex control case.
struct DomainSpec {
  Shape shape = Shape::UnitSquare;
  double a = 0, b = 1;          // interval endpoints
  double width = 1, height = 1; // rectangle
  double radius = 1;            // disk, regular polygon circumradius, stadium cap
  double rx = 1, ry = 1;        // ellipse semi-axes
  int sides = 3;                // regular polygon
  double half_length = 1;       // stadium straight half-length
  std::vector<Vec2> vertices;   // convex polygon, CCW after validation

  static DomainSpec interval(double a, double b);
  static DomainSpec unit_square();
  static DomainSpec rectangle(double w, double h);
  static DomainSpec disk(double r);
  static DomainSpec ellipse(double rx, double ry);
  static DomainSpec regular_polygon(int k, double r);
  static DomainSpec convex_polygon(std::vector<Vec2> verts);
  static DomainSpec stadium(double l, double r);

  int dimension() const { return shape == Shape::Interval ? 1 : 2; }
  bool strictly_convex() const;
  double diameter() const;

  // Point membership (closed domain). 1D uses p.x().
  bool contains(const Vec2& p) const;
  // Distance to the analytic boundary for points inside; conservative
  // (never overestimates) for the ellipse.
  double inner_distance(const Vec2& p) const;

  // Canonical text form, also the CLI syntax and the cache-key source.
  std::string canonical() const;

  // Throws std::invalid_argument on degenerate input.
  void validate() const;
};

// Parses the CLI domain syntax, e.g. "interval:0,3.14159", "unitsquare",
// "disk:1", "ellipse:1,0.6", "regpoly:6,1", "polygon:0,0;1,0;0.5,1",
// "stadium:1,0.5", "rectangle:2,1".
DomainSpec parse_domain(const std::string& text);

}  // namespace ellab
