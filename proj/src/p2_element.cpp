#include "grinlens/p2_element.hpp"

#include <cmath>

namespace grinlens::p2 {

namespace {

TriangleRule make_degree4() {
  TriangleRule r;
  const double a1 = 0.445948490915965, b1 = 1.0 - 2.0 * a1, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, b2 = 1.0 - 2.0 * a2, w2 = 0.109951743655322;
  // barycentric (b, a, a) and permutations; reference coords are (L1, L2)
  const std::array<std::array<double, 3>, 6> bary = {{{b1, a1, a1},
                                                       {a1, b1, a1},
                                                       {a1, a1, b1},
                                                       {b2, a2, a2},
                                                       {a2, b2, a2},
                                                       {a2, a2, b2}}};
  for (int k = 0; k < 6; ++k) {
    r.points.push_back({bary[k][1], bary[k][2]});
    r.weights.push_back(0.5 * (k < 3 ? w1 : w2));
  }
  return r;
}

}  // namespace

const TriangleRule& degree4_rule() {
  static const TriangleRule rule = make_degree4();
  return rule;
}

LineRule gauss_line_rule(int n) {
  LineRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2v = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2v;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.points[i] = 0.5 * (1.0 - x);
    r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

TriangleRule collapsed_gauss_rule(int n) {
  const LineRule g = gauss_line_rule(n);
  TriangleRule r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      r.points.push_back({u, v * (1.0 - u)});
      r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  return r;
}

std::array<double, kNodes> shape(RefPoint p) {
  const double l0 = 1.0 - p.xi - p.eta, l1 = p.xi, l2 = p.eta;
  return {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
          4.0 * l0 * l1,         4.0 * l1 * l2,         4.0 * l2 * l0};
}

std::array<std::array<double, 2>, kNodes> shape_grad(RefPoint p) {
  const double l0 = 1.0 - p.xi - p.eta, l1 = p.xi, l2 = p.eta;
  // dL0 = (-1,-1), dL1 = (1,0), dL2 = (0,1)
  return {{{-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)},
           {4.0 * l1 - 1.0, 0.0},
           {0.0, 4.0 * l2 - 1.0},
           {4.0 * (l0 - l1), -4.0 * l1},
           {4.0 * l2, 4.0 * l1},
           {-4.0 * l2, 4.0 * (l0 - l2)}}};
}

std::array<double, 3> edge_shape(double s) {
  return {(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)};
}

std::array<double, 3> edge_shape_grad(double s) { return {4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0}; }

MappedPoint map_point(const std::array<Vec2, kNodes>& nodes, RefPoint p) {
  MappedPoint m;
  m.value = shape(p);
  const auto g = shape_grad(p);
  double j00 = 0, j01 = 0, j10 = 0, j11 = 0;  // J = dx/dxi
  for (int k = 0; k < kNodes; ++k) {
    m.x = m.x + nodes[k] * m.value[k];
    j00 += nodes[k].x * g[k][0];
    j01 += nodes[k].x * g[k][1];
    j10 += nodes[k].y * g[k][0];
    j11 += nodes[k].y * g[k][1];
  }
  m.det_j = j00 * j11 - j01 * j10;
  const double inv = 1.0 / m.det_j;
  // grad_x N = J^{-T} grad_xi N
  for (int k = 0; k < kNodes; ++k) {
    const double gx = (j11 * g[k][0] - j10 * g[k][1]) * inv;
    const double gy = (-j01 * g[k][0] + j00 * g[k][1]) * inv;
    m.grad[k] = {gx, gy};
  }
  return m;
}

double element_area(const std::array<Vec2, kNodes>& nodes) {
  const auto& rule = degree4_rule();
  double a = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) a += rule.weights[q] * map_point(nodes, rule.points[q]).det_j;
  return a;
}

}  // namespace grinlens::p2
