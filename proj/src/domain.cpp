#include "ellab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ellab/io.hpp"

namespace ellab {

namespace {

double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

double point_segment_distance(const Vec2& p, const Vec2& s0, const Vec2& s1) {
  const Vec2 d = s1 - s0;
  const double len2 = d.squaredNorm();
  double t = len2 > 0 ? (p - s0).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s0 + t * d)).norm();
}

}  // namespace

DomainSpec DomainSpec::interval(double a, double b) {
  DomainSpec s;
  s.shape = Shape::Interval;
  s.a = a;
  s.b = b;
  s.validate();
  return s;
}

DomainSpec DomainSpec::unit_square() {
  DomainSpec s;
  s.shape = Shape::UnitSquare;
  s.width = s.height = 1;
  return s;
}

DomainSpec DomainSpec::rectangle(double w, double h) {
  DomainSpec s;
  s.shape = Shape::Rectangle;
  s.width = w;
  s.height = h;
  s.validate();
  return s;
}

DomainSpec DomainSpec::disk(double r) {
  DomainSpec s;
  s.shape = Shape::Disk;
  s.radius = r;
  s.validate();
  return s;
}

DomainSpec DomainSpec::ellipse(double rx, double ry) {
  DomainSpec s;
  s.shape = Shape::Ellipse;
  s.rx = rx;
  s.ry = ry;
  s.validate();
  return s;
}

DomainSpec DomainSpec::regular_polygon(int k, double r) {
  DomainSpec s;
  s.shape = Shape::RegularPolygon;
  s.sides = k;
  s.radius = r;
  s.validate();
  return s;
}

DomainSpec DomainSpec::convex_polygon(std::vector<Vec2> verts) {
  DomainSpec s;
  s.shape = Shape::ConvexPolygon;
  s.vertices = std::move(verts);
  // Normalize to CCW before the convexity check.
  double area2 = 0;
  const std::size_t n = s.vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    area2 += cross2(s.vertices[i], s.vertices[(i + 1) % n]);
  if (area2 < 0) std::reverse(s.vertices.begin(), s.vertices.end());
  s.validate();
  return s;
}

DomainSpec DomainSpec::stadium(double l, double r) {
  DomainSpec s;
  s.shape = Shape::Stadium;
  s.half_length = l;
  s.radius = r;
  s.validate();
  return s;
}

bool DomainSpec::strictly_convex() const {
  switch (shape) {
    case Shape::Interval:
    case Shape::Disk:
    case Shape::Ellipse:
      return true;
    default:
      return false;
  }
}

double DomainSpec::diameter() const {
  switch (shape) {
    case Shape::Interval:
      return b - a;
    case Shape::UnitSquare:
      return std::sqrt(2.0);
    case Shape::Rectangle:
      return std::hypot(width, height);
    case Shape::Disk:
      return 2 * radius;
    case Shape::Ellipse:
      return 2 * std::max(rx, ry);
    case Shape::RegularPolygon:
      return 2 * radius;
    case Shape::ConvexPolygon: {
      double d = 0;
      for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j)
          d = std::max(d, (vertices[i] - vertices[j]).norm());
      return d;
    }
    case Shape::Stadium:
      return 2 * (half_length + radius);
  }
  return 0;
}

bool DomainSpec::contains(const Vec2& p) const {
  switch (shape) {
    case Shape::Interval:
      return p.x() >= a && p.x() <= b;
    case Shape::UnitSquare:
      return p.x() >= 0 && p.x() <= 1 && p.y() >= 0 && p.y() <= 1;
    case Shape::Rectangle:
      return p.x() >= 0 && p.x() <= width && p.y() >= 0 && p.y() <= height;
    case Shape::Disk:
      return p.norm() <= radius;
    case Shape::Ellipse: {
      const double q = (p.x() / rx) * (p.x() / rx) + (p.y() / ry) * (p.y() / ry);
      return q <= 1.0;
    }
    case Shape::RegularPolygon:
    case Shape::ConvexPolygon: {
      std::vector<Vec2> vs = vertices;
      if (shape == Shape::RegularPolygon) {
        vs.clear();
        for (int i = 0; i < sides; ++i) {
          const double t = 2 * M_PI * i / sides;
          vs.emplace_back(radius * std::cos(t), radius * std::sin(t));
        }
      }
      for (std::size_t i = 0; i < vs.size(); ++i) {
        const Vec2& u = vs[i];
        const Vec2& v = vs[(i + 1) % vs.size()];
        if (cross2(v - u, p - u) < -1e-14 * diameter() * diameter()) return false;
      }
      return true;
    }
    case Shape::Stadium:
      return point_segment_distance(p, Vec2(-half_length, 0), Vec2(half_length, 0)) <= radius;
  }
  return false;
}

double DomainSpec::inner_distance(const Vec2& p) const {
  switch (shape) {
    case Shape::Interval:
      return std::min(p.x() - a, b - p.x());
    case Shape::UnitSquare:
      return std::min(std::min(p.x(), 1 - p.x()), std::min(p.y(), 1 - p.y()));
    case Shape::Rectangle:
      return std::min(std::min(p.x(), width - p.x()), std::min(p.y(), height - p.y()));
    case Shape::Disk:
      return radius - p.norm();
    case Shape::Ellipse: {
      const double rho = std::sqrt((p.x() / rx) * (p.x() / rx) + (p.y() / ry) * (p.y() / ry));
      return (1 - rho) * std::min(rx, ry);
    }
    case Shape::RegularPolygon:
    case Shape::ConvexPolygon: {
      std::vector<Vec2> vs = vertices;
      if (shape == Shape::RegularPolygon) {
        vs.clear();
        for (int i = 0; i < sides; ++i) {
          const double t = 2 * M_PI * i / sides;
          vs.emplace_back(radius * std::cos(t), radius * std::sin(t));
        }
      }
      double d = std::numeric_limits<double>::max();
      for (std::size_t i = 0; i < vs.size(); ++i)
        d = std::min(d, point_segment_distance(p, vs[i], vs[(i + 1) % vs.size()]));
      return d;
    }
    case Shape::Stadium:
      return radius - point_segment_distance(p, Vec2(-half_length, 0), Vec2(half_length, 0));
  }
  return 0;
}

std::string DomainSpec::canonical() const {
  std::ostringstream os;
  switch (shape) {
    case Shape::Interval:
      os << "interval:" << format_double(a) << "," << format_double(b);
      break;
    case Shape::UnitSquare:
      os << "unitsquare";
      break;
    case Shape::Rectangle:
      os << "rectangle:" << format_double(width) << "," << format_double(height);
      break;
    case Shape::Disk:
      os << "disk:" << format_double(radius);
      break;
    case Shape::Ellipse:
      os << "ellipse:" << format_double(rx) << "," << format_double(ry);
      break;
    case Shape::RegularPolygon:
      os << "regpoly:" << sides << "," << format_double(radius);
      break;
    case Shape::ConvexPolygon: {
      os << "polygon:";
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (i) os << ";";
        os << format_double(vertices[i].x()) << "," << format_double(vertices[i].y());
      }
      break;
    }
    case Shape::Stadium:
      os << "stadium:" << format_double(half_length) << "," << format_double(radius);
      break;
  }
  return os.str();
}

void DomainSpec::validate() const {
  switch (shape) {
    case Shape::Interval:
      if (!(b > a)) throw std::invalid_argument("interval: requires a < b");
      break;
    case Shape::UnitSquare:
      break;
    case Shape::Rectangle:
      if (!(width > 0 && height > 0)) throw std::invalid_argument("rectangle: sides must be positive");
      break;
    case Shape::Disk:
      if (!(radius > 0)) throw std::invalid_argument("disk: radius must be positive");
      break;
    case Shape::Ellipse:
      if (!(rx > 0 && ry > 0)) throw std::invalid_argument("ellipse: semi-axes must be positive");
      break;
    case Shape::RegularPolygon:
      if (sides < 3) throw std::invalid_argument("regpoly: needs at least 3 sides");
      if (!(radius > 0)) throw std::invalid_argument("regpoly: radius must be positive");
      break;
    case Shape::ConvexPolygon: {
      const std::size_t n = vertices.size();
      if (n < 3) throw std::invalid_argument("polygon: needs at least 3 vertices");
      const double scale2 = diameter() * diameter();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if ((vertices[i] - vertices[j]).squaredNorm() <= 1e-24 * scale2)
            throw std::invalid_argument("polygon: repeated vertex");
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
        const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
        const double c = cross2(e0, e1);
        if (c <= 1e-14 * scale2)
          throw std::invalid_argument("polygon: not strictly convex (collinear or reflex vertex)");
      }
      break;
    }
    case Shape::Stadium:
      if (!(half_length > 0 && radius > 0))
        throw std::invalid_argument("stadium: length and radius must be positive");
      break;
  }
}

DomainSpec parse_domain(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto nums = [&args]() {
    std::vector<double> out;
    std::stringstream ss(args);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok));
    return out;
  };
  if (kind == "interval") {
    auto v = nums();
    if (v.size() != 2) throw std::invalid_argument("interval:a,b");
    return DomainSpec::interval(v[0], v[1]);
  }
  if (kind == "unitsquare") return DomainSpec::unit_square();
  if (kind == "rectangle") {
    auto v = nums();
    if (v.size() != 2) throw std::invalid_argument("rectangle:w,h");
    return DomainSpec::rectangle(v[0], v[1]);
  }
  if (kind == "disk") {
    auto v = nums();
    if (v.size() != 1) throw std::invalid_argument("disk:r");
    return DomainSpec::disk(v[0]);
  }
  if (kind == "ellipse") {
    auto v = nums();
    if (v.size() != 2) throw std::invalid_argument("ellipse:rx,ry");
    return DomainSpec::ellipse(v[0], v[1]);
  }
  if (kind == "regpoly") {
    auto v = nums();
    if (v.size() != 2) throw std::invalid_argument("regpoly:k,r");
    return DomainSpec::regular_polygon(static_cast<int>(v[0]), v[1]);
  }
  if (kind == "polygon") {
    std::vector<Vec2> verts;
    std::stringstream ss(args);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("polygon:x,y;x,y;...");
      verts.emplace_back(parse_double(pair.substr(0, comma)), parse_double(pair.substr(comma + 1)));
    }
    return DomainSpec::convex_polygon(std::move(verts));
  }
  if (kind == "stadium") {
    auto v = nums();
    if (v.size() != 2) throw std::invalid_argument("stadium:l,r");
    return DomainSpec::stadium(v[0], v[1]);
  }
  throw std::invalid_argument("unknown domain '" + kind + "'");
}

}  // namespace ellab
