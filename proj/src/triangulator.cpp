#include "triangulator.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <queue>
#include <unordered_map>
#include <utility>

namespace grinlens::detail {

namespace {

constexpr int kNone = -1;

inline int nx(int i) { return (i + 1) % 3; }
inline int pv(int i) { return (i + 2) % 3; }

class Cdt {
public:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> n{kNone, kNone, kNone};   // neighbour across edge i (opposite v[i])
    std::array<int, 3> seg{kNone, kNone, kNone}; // constraining segment across edge i
    bool alive = true;
  };

  explicit Cdt(const Pslg& pslg) : segs_(pslg.segments) {
    if (pslg.points.size() < 3) throw Error("triangulate: fewer than three points");
    double xmin = pslg.points[0].x, xmax = xmin, ymin = pslg.points[0].y, ymax = ymin;
    for (const auto& p : pslg.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const Vec2 c{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
    const double m = 50.0 * std::max(xmax - xmin, ymax - ymin);
    pts_ = {{c.x - m, c.y - m}, {c.x + m, c.y - m}, {c.x, c.y + m}};
    vtri_ = {0, 0, 0};
    tris_.push_back(Tri{{0, 1, 2}});
    for (auto& s : segs_) {
      s.a += 3;
      s.b += 3;
    }
    for (const auto& p : pslg.points) {
      const int t = locate_free(p);
      insert(p, {t}, kNone, kNone);
    }
  }

  void recover_segments() {
    for (int s = 0; s < static_cast<int>(segs_.size()); ++s) recover(s);
    lawson_all();
    remove_exterior();
  }

  void refine(const RefineOptions& opts) {
    opts_ = opts;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (tris_[t].alive) push_if_bad(t);
    while (!queue_.empty()) {
      const auto [score, t] = queue_.top();
      queue_.pop();
      if (!tris_[t].alive || !is_bad(t)) continue;
      if (pts_.size() > opts_.max_points) throw Error("triangulate: refinement exceeded point budget");
      split_triangle(t);
    }
  }

  Triangulation extract() const {
    Triangulation out;
    out.points.assign(pts_.begin() + 3, pts_.end());
    std::vector<int> remap(tris_.size(), kNone);
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      const Tri& T = tris_[t];
      if (!T.alive) continue;
      remap[t] = static_cast<int>(out.triangles.size());
      out.triangles.push_back({T.v[0] - 3, T.v[1] - 3, T.v[2] - 3});
      std::array<int, 3> ec{};
      for (int i = 0; i < 3; ++i) ec[i] = T.seg[i] == kNone ? -2 : segs_[T.seg[i]].curve;
      out.edge_curve.push_back(ec);
    }
    // Connected components across unconstrained edges.
    out.component.assign(out.triangles.size(), kNone);
    int comp = 0;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (remap[t] == kNone || out.component[remap[t]] != kNone) continue;
      std::vector<int> stack{t};
      out.component[remap[t]] = comp;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int i = 0; i < 3; ++i) {
          const int nb = tris_[u].n[i];
          if (nb == kNone || tris_[u].seg[i] != kNone) continue;
          if (out.component[remap[nb]] != kNone) continue;
          out.component[remap[nb]] = comp;
          stack.push_back(nb);
        }
      }
      ++comp;
    }
    out.num_components = comp;
    return out;
  }

private:
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vtri_;
  std::vector<PslgSegment> segs_;
  std::vector<int> stamp_;
  int stamp_counter_ = 0;
  RefineOptions opts_;
  std::priority_queue<std::pair<double, int>> queue_;

  // --- basic topology -----------------------------------------------------

  int local_of(int t, int v) const {
    const auto& T = tris_[t];
    for (int i = 0; i < 3; ++i)
      if (T.v[i] == v) return i;
    return kNone;
  }

  int nb_index(int t, int nb) const {
    for (int i = 0; i < 3; ++i)
      if (tris_[t].n[i] == nb) return i;
    return kNone;
  }

  /// Triangles incident to vertex v, in fan order.
  std::vector<int> fan(int v) const {
    std::vector<int> out;
    const int start = vtri_[v];
    int t = start;
    // counter-clockwise rotation: across the edge opposite v's successor
    while (true) {
      out.push_back(t);
      const int k = local_of(t, v);
      const int next = tris_[t].n[nx(k)];
      if (next == kNone) break;
      if (next == start) return out;
      t = next;
    }
    t = start;
    while (true) {
      const int k = local_of(t, v);
      const int next = tris_[t].n[pv(k)];
      if (next == kNone || next == start) break;
      out.push_back(next);
      t = next;
    }
    return out;
  }

  /// Returns (t, i) with edge i of t joining a and b, or (kNone, kNone).
  std::pair<int, int> find_edge(int a, int b) const {
    for (int t : fan(a)) {
      const int k = local_of(t, a);
      const auto& T = tris_[t];
      if (T.v[nx(k)] == b) return {t, pv(k)};
      if (T.v[pv(k)] == b) return {t, nx(k)};
    }
    return {kNone, kNone};
  }

  void set_vtri(int t) {
    for (int v : tris_[t].v) vtri_[v] = t;
  }

  void next_stamp() {
    ++stamp_counter_;
    if (stamp_.size() < tris_.size()) stamp_.resize(tris_.size() * 2 + 16, 0);
  }
  bool marked(int t) const { return t < static_cast<int>(stamp_.size()) && stamp_[t] == stamp_counter_; }
  void mark(int t) {
    if (t >= static_cast<int>(stamp_.size())) stamp_.resize(tris_.size() * 2 + 16, 0);
    stamp_[t] = stamp_counter_;
  }

  bool in_circle(int t, Vec2 p) const {
    const auto& T = tris_[t];
    return incircle(pts_[T.v[0]], pts_[T.v[1]], pts_[T.v[2]], p) > 0;
  }

  // --- point location -----------------------------------------------------

  int locate_free(Vec2 p) const {
    int t = tris_.size() - 1;
    while (!tris_[t].alive) --t;
    std::size_t guard = 0;
    int rot = 0;
    while (guard++ < 4 * tris_.size() + 100) {
      const auto& T = tris_[t];
      bool moved = false;
      for (int r = 0; r < 3; ++r) {
        const int i = (r + rot) % 3;
        if (orient2d(pts_[T.v[nx(i)]], pts_[T.v[pv(i)]], p) < 0 && T.n[i] != kNone) {
          t = T.n[i];
          moved = true;
          break;
        }
      }
      rot = (rot + 1) % 3;
      if (!moved) return t;
    }
    for (int u = 0; u < static_cast<int>(tris_.size()); ++u) {
      if (!tris_[u].alive) continue;
      const auto& T = tris_[u];
      if (orient2d(pts_[T.v[0]], pts_[T.v[1]], p) >= 0 && orient2d(pts_[T.v[1]], pts_[T.v[2]], p) >= 0 &&
          orient2d(pts_[T.v[2]], pts_[T.v[0]], p) >= 0)
        return u;
    }
    throw Error("triangulate: point location failed");
  }

  struct WalkResult {
    int tri = kNone;
    int blocked_edge = kNone;  // edge index of tri that stops the walk
  };

  /// Straight walk from the centroid of `start` towards p, stopping at
  /// constrained or boundary edges.
  WalkResult walk(int start, Vec2 p) const {
    const auto& S = tris_[start];
    const Vec2 q = (pts_[S.v[0]] + pts_[S.v[1]] + pts_[S.v[2]]) / 3.0;
    int t = start;
    int from = kNone;
    for (std::size_t guard = 0; guard < tris_.size() + 10; ++guard) {
      const auto& T = tris_[t];
      int exit = kNone;
      for (int i = 0; i < 3; ++i) {
        if (T.n[i] == from && from != kNone) continue;
        const Vec2 u = pts_[T.v[nx(i)]], w = pts_[T.v[pv(i)]];
        if (orient2d(u, w, p) >= 0) continue;
        const int ou = orient2d(q, p, u), ow = orient2d(q, p, w);
        if (ou * ow <= 0) {
          exit = i;
          break;
        }
      }
      if (exit == kNone) {
        for (int i = 0; i < 3; ++i) {
          const Vec2 u = pts_[T.v[nx(i)]], w = pts_[T.v[pv(i)]];
          if (orient2d(u, w, p) == 0 && (T.seg[i] != kNone || T.n[i] == kNone)) return {t, i};
        }
        return {t, kNone};
      }
      if (T.seg[exit] != kNone || T.n[exit] == kNone) return {t, exit};
      from = t;
      t = T.n[exit];
    }
    return {start, kNone};
  }

  // --- insertion ----------------------------------------------------------

  /// Bowyer-Watson insertion of p. `seeds` are forced into the cavity; the
  /// optional edge (skip_a, skip_b) may contain p and is not re-triangulated.
  int insert(Vec2 p, std::vector<int> seeds, int skip_a, int skip_b) {
    const int vid = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vtri_.push_back(kNone);

    next_stamp();
    std::vector<int> cavity;
    for (int s : seeds) {
      if (s == kNone || marked(s)) continue;
      mark(s);
      cavity.push_back(s);
    }
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const int t = cavity[k];
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb == kNone || tris_[t].seg[i] != kNone || marked(nb)) continue;
        if (in_circle(nb, p)) {
          mark(nb);
          cavity.push_back(nb);
        }
      }
    }

    auto is_skip = [&](int u, int w) {
      return (u == skip_a && w == skip_b) || (u == skip_b && w == skip_a);
    };

    // Keep the cavity star-shaped with respect to p.
    const std::size_t nseeds = seeds.size();
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t k = 0; k < cavity.size(); ++k) {
        const int t = cavity[k];
        if (t == kNone) continue;
        for (int i = 0; i < 3; ++i) {
          const int nb = tris_[t].n[i];
          if (nb != kNone && marked(nb)) continue;
          const int u = tris_[t].v[nx(i)], w = tris_[t].v[pv(i)];
          if (is_skip(u, w)) continue;
          if (orient2d(pts_[u], pts_[w], p) <= 0) {
            if (k < nseeds) throw Error("triangulate: insertion cavity is not star-shaped");
            stamp_[t] = 0;
            cavity[k] = kNone;
            changed = true;
            break;
          }
        }
      }
    }
    std::erase(cavity, kNone);

    struct BEdge {
      int u, w, outside, seg;
    };
    std::vector<BEdge> boundary;
    for (int t : cavity) {
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb != kNone && marked(nb)) continue;
        const int u = tris_[t].v[nx(i)], w = tris_[t].v[pv(i)];
        if (is_skip(u, w)) continue;
        boundary.push_back({u, w, nb, tris_[t].seg[i]});
      }
    }

    std::unordered_map<int, int> by_first, by_second;
    std::vector<int> created;
    for (const auto& e : boundary) {
      Tri T;
      T.v = {e.u, e.w, vid};
      T.n[2] = e.outside;
      T.seg[2] = e.seg;
      const int id = static_cast<int>(tris_.size());
      tris_.push_back(T);
      created.push_back(id);
      if (e.outside != kNone) {
        auto& O = tris_[e.outside];
        for (int j = 0; j < 3; ++j) {
          const int a = O.v[nx(j)], b = O.v[pv(j)];
          if (a == e.w && b == e.u) {
            O.n[j] = id;
            break;
          }
        }
      }
      by_first[e.u] = id;
      by_second[e.w] = id;
    }
    for (int id : created) {
      auto& T = tris_[id];
      // edge opposite u is (w, p): neighbour starts at w
      if (auto it = by_first.find(T.v[1]); it != by_first.end()) T.n[0] = it->second;
      // edge opposite w is (p, u): neighbour ends at u
      if (auto it = by_second.find(T.v[0]); it != by_second.end()) T.n[1] = it->second;
    }
    for (int t : cavity) tris_[t].alive = false;
    for (int id : created) set_vtri(id);
    if (vtri_[vid] == kNone) throw Error("triangulate: empty insertion cavity");
    return vid;
  }

  void set_segment(int a, int b, int s) {
    const auto [t, i] = find_edge(a, b);
    if (t == kNone) throw Error("triangulate: constrained edge missing after split");
    tris_[t].seg[i] = s;
    const int nb = tris_[t].n[i];
    if (nb != kNone) tris_[nb].seg[nb_index(nb, t)] = s;
  }

  int split_segment(int t, int i) {
    const int s = tris_[t].seg[i];
    const int a = segs_[s].a, b = segs_[s].b;
    {
      const int u = tris_[t].v[nx(i)], w = tris_[t].v[pv(i)];
      if (!((u == a && w == b) || (u == b && w == a)))
        throw Error("triangulate: stale segment on edge");
    }
    const Vec2 m = (pts_[a] + pts_[b]) * 0.5;
    const int nb = tris_[t].n[i];
    tris_[t].seg[i] = kNone;
    if (nb != kNone) tris_[nb].seg[nb_index(nb, t)] = kNone;
    std::vector<int> seeds{t};
    if (nb != kNone) seeds.push_back(nb);
    const int vid = insert(m, seeds, nb == kNone ? a : kNone, nb == kNone ? b : kNone);
    PslgSegment second = segs_[s];
    segs_[s].b = vid;
    second.a = vid;
    segs_.push_back(second);
    const int s2 = static_cast<int>(segs_.size()) - 1;
    set_segment(a, vid, s);
    set_segment(vid, b, s2);
    return vid;
  }

  // --- segment recovery ---------------------------------------------------

  bool crosses(int a, int b, int x, int y) const {
    if (x == a || x == b || y == a || y == b) return false;
    const Vec2 A = pts_[a], B = pts_[b], X = pts_[x], Y = pts_[y];
    return orient2d(A, B, X) * orient2d(A, B, Y) < 0 && orient2d(X, Y, A) * orient2d(X, Y, B) < 0;
  }

  /// Flips edge i of triangle t. Returns false when the quad is not convex.
  bool flip(int t, int i) {
    const int t2 = tris_[t].n[i];
    if (t2 == kNone) return false;
    Tri A = tris_[t];
    Tri B = tris_[t2];
    const int x = A.v[i], u = A.v[nx(i)], w = A.v[pv(i)];
    const int j = nb_index(t2, t);
    const int y = B.v[j];
    if (orient2d(pts_[x], pts_[u], pts_[y]) <= 0 || orient2d(pts_[y], pts_[w], pts_[x]) <= 0) return false;
    const int nWX = A.n[nx(i)], sWX = A.seg[nx(i)];
    const int nXU = A.n[pv(i)], sXU = A.seg[pv(i)];
    // in B: v[j] = y, v[j+1] = w, v[j+2] = u
    const int nUY = B.n[nx(j)], sUY = B.seg[nx(j)];
    const int nYW = B.n[pv(j)], sYW = B.seg[pv(j)];

    Tri& P = tris_[t];
    P.v = {x, u, y};
    P.n = {nUY, t2, nXU};
    P.seg = {sUY, kNone, sXU};
    Tri& Q = tris_[t2];
    Q.v = {y, w, x};
    Q.n = {nWX, t, nYW};
    Q.seg = {sWX, kNone, sYW};
    if (nUY != kNone) tris_[nUY].n[nb_index(nUY, t2)] = t;
    if (nWX != kNone) tris_[nWX].n[nb_index(nWX, t)] = t2;
    set_vtri(t);
    set_vtri(t2);
    return true;
  }

  void recover(int s) {
    const int a = segs_[s].a, b = segs_[s].b;
    if (auto [t, i] = find_edge(a, b); t != kNone) {
      set_segment(a, b, s);
      return;
    }
    // Collect the edges crossed by segment ab.
    std::deque<std::pair<int, int>> crossing;
    int t = kNone, p = kNone, q = kNone;
    for (int f : fan(a)) {
      const int k = local_of(f, a);
      const int v1 = tris_[f].v[nx(k)], v2 = tris_[f].v[pv(k)];
      if (orient2d(pts_[a], pts_[v1], pts_[b]) > 0 && orient2d(pts_[a], pts_[v2], pts_[b]) < 0) {
        t = f;
        p = v1;
        q = v2;
        break;
      }
    }
    if (t == kNone) throw Error("triangulate: cannot start segment recovery");
    // p lies right of ab, q left.
    while (true) {
      crossing.emplace_back(p, q);
      const auto [tt, ii] = find_edge(p, q);
      int nb = tris_[tt].n[ii];
      if (nb == t) nb = tt;
      if (nb == kNone) throw Error("triangulate: segment leaves the triangulation");
      const int j = local_of(nb, p);
      int r = kNone;
      for (int m = 0; m < 3; ++m)
        if (tris_[nb].v[m] != p && tris_[nb].v[m] != q) r = tris_[nb].v[m];
      (void)j;
      if (r == b) break;
      const int o = orient2d(pts_[a], pts_[b], pts_[r]);
      if (o == 0) throw Error("triangulate: vertex lies on a constrained segment");
      if (o > 0)
        q = r;
      else
        p = r;
      t = nb;
    }

    std::size_t guard = 0;
    while (!crossing.empty()) {
      if (++guard > 100000 + 100 * crossing.size()) throw Error("triangulate: segment recovery stalled");
      const auto [u, w] = crossing.front();
      crossing.pop_front();
      const auto [tt, ii] = find_edge(u, w);
      if (tt == kNone) continue;
      if (!flip(tt, ii)) {
        crossing.emplace_back(u, w);
        continue;
      }
      const int x = tris_[tt].v[0], y = tris_[tt].v[2];
      if (crosses(a, b, x, y)) crossing.emplace_back(x, y);
    }
    set_segment(a, b, s);
  }

  void lawson_all() {
    std::vector<std::pair<int, int>> stack;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!tris_[t].alive) continue;
      for (int i = 0; i < 3; ++i) stack.emplace_back(t, i);
    }
    while (!stack.empty()) {
      const auto [t, i] = stack.back();
      stack.pop_back();
      if (!tris_[t].alive) continue;
      const int nb = tris_[t].n[i];
      if (nb == kNone || tris_[t].seg[i] != kNone) continue;
      const int y = tris_[nb].v[nb_index(nb, t)];
      if (!in_circle(t, pts_[y])) continue;
      if (!flip(t, i)) continue;
      for (int k = 0; k < 3; ++k) {
        stack.emplace_back(t, k);
        stack.emplace_back(nb, k);
      }
    }
  }

  void remove_exterior() {
    std::vector<int> stack;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!tris_[t].alive) continue;
      for (int v : tris_[t].v)
        if (v < 3) {
          stack.push_back(t);
          break;
        }
    }
    std::vector<char> dead(tris_.size(), 0);
    for (int t : stack) dead[t] = 1;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb == kNone || tris_[t].seg[i] != kNone || dead[nb]) continue;
        dead[nb] = 1;
        stack.push_back(nb);
      }
    }
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!dead[t] || !tris_[t].alive) continue;
      tris_[t].alive = false;
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb != kNone && !dead[nb]) tris_[nb].n[nb_index(nb, t)] = kNone;
      }
    }
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (tris_[t].alive) set_vtri(t);
  }

  // --- refinement ---------------------------------------------------------

  struct Shape {
    double longest = 0.0;
    double shortest = 0.0;
    double radius = 0.0;
  };

  Shape shape(int t) const {
    const auto& T = tris_[t];
    const Vec2 a = pts_[T.v[0]], b = pts_[T.v[1]], c = pts_[T.v[2]];
    const double l0 = distance(b, c), l1 = distance(c, a), l2 = distance(a, b);
    const double area = std::abs(triangle_area(a, b, c));
    Shape s;
    s.longest = std::max({l0, l1, l2});
    s.shortest = std::min({l0, l1, l2});
    s.radius = area > 0 ? l0 * l1 * l2 / (4.0 * area) : std::numeric_limits<double>::infinity();
    return s;
  }

  /// A constrained edge of t or of its neighbours whose diametral circle holds p.
  std::pair<int, int> encroached(int t, Vec2 p) const {
    std::array<int, 4> near{t, tris_[t].n[0], tris_[t].n[1], tris_[t].n[2]};
    for (int u : near) {
      if (u == kNone) continue;
      for (int i = 0; i < 3; ++i) {
        if (tris_[u].seg[i] == kNone) continue;
        const Vec2 a = pts_[tris_[u].v[nx(i)]], b = pts_[tris_[u].v[pv(i)]];
        if (dot(a - p, b - p) < 0) return {u, i};
      }
    }
    return {kNone, kNone};
  }

  bool contains(int t, Vec2 p) const {
    const auto& T = tris_[t];
    for (int i = 0; i < 3; ++i)
      if (orient2d(pts_[T.v[nx(i)]], pts_[T.v[pv(i)]], p) <= 0) return false;
    return true;
  }

  bool is_bad(int t) const {
    const Shape s = shape(t);
    if (s.longest > opts_.max_edge) return true;
    return s.shortest > opts_.quality_min_edge && s.radius > opts_.max_radius_edge * s.shortest;
  }

  void push_if_bad(int t) {
    if (is_bad(t)) queue_.emplace(shape(t).longest, t);
  }

  void split_triangle(int t) {
    const std::size_t before = tris_.size();
    const auto& T = tris_[t];
    const Vec2 a = pts_[T.v[0]], b = pts_[T.v[1]], c = pts_[T.v[2]];
    const Vec2 cc = circumcenter(a, b, c);
    const Shape sh = shape(t);
    const WalkResult w = walk(t, cc);
    bool done = false;
    if (w.blocked_edge != kNone) {
      const int s = tris_[w.tri].seg[w.blocked_edge];
      if (s != kNone && segs_[s].splittable &&
          distance(pts_[segs_[s].a], pts_[segs_[s].b]) > 2.0 * opts_.quality_min_edge) {
        split_segment(w.tri, w.blocked_edge);
        done = true;
      }
    } else if (w.tri != kNone && contains(w.tri, cc)) {
      const auto [et, ei] = encroached(w.tri, cc);
      if (et != kNone) {
        const int s = tris_[et].seg[ei];
        if (segs_[s].splittable && distance(pts_[segs_[s].a], pts_[segs_[s].b]) > 2.0 * opts_.quality_min_edge) {
          split_segment(et, ei);
          done = true;
        }
      } else {
        const auto& C = tris_[w.tri];
        double dmin = std::numeric_limits<double>::infinity();
        for (int v : C.v) dmin = std::min(dmin, distance(pts_[v], cc));
        if (dmin > 1e-3 * sh.shortest) {
          insert(cc, {w.tri}, kNone, kNone);
          done = true;
        }
      }
    }
    // Fall back to the centroid only for oversized triangles; a poorly shaped
    // triangle whose circumcentre is unreachable is kept.
    if (!done && sh.longest > opts_.max_edge) {
      insert((a + b + c) / 3.0, {t}, kNone, kNone);
      done = true;
    }
    if (done && tris_[t].alive) push_if_bad(t);
    for (std::size_t u = before; u < tris_.size(); ++u)
      if (tris_[u].alive) push_if_bad(static_cast<int>(u));
  }
};

}  // namespace

Triangulation triangulate(const Pslg& pslg, const RefineOptions& opts) {
  for (const auto& s : pslg.segments)
    if (s.a < 0 || s.b < 0 || s.a >= static_cast<int>(pslg.points.size()) ||
        s.b >= static_cast<int>(pslg.points.size()) || s.a == s.b)
      throw Error("triangulate: invalid segment");
  Cdt cdt(pslg);
  cdt.recover_segments();
  if (opts.max_edge > 0) cdt.refine(opts);
  return cdt.extract();
}

}  // namespace grinlens::detail
