#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {

using chfb::Point;

namespace {

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

bool adjacent(Point a, Point b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) == 1; }

}  // namespace

std::vector<Point> random_walk(chfb::Rng& rng, int n) {
  std::vector<Point> path{{30, 30}};
  int dir = static_cast<int>(rng.below(8));
  while (static_cast<int>(path.size()) < n) {
    // Mostly keep heading, sometimes bend by 45 degrees.
    const double r = rng.uniform();
    if (r < 0.2) dir = (dir + 1) % 8;
    else if (r < 0.4) dir = (dir + 7) % 8;
    const Point last = path.back();
    path.push_back({last.x + kDx[dir], last.y + kDy[dir]});
  }
  return path;
}

std::vector<Point> random_closed_contour(chfb::Rng& rng, int max_points) {
  if (rng.uniform() < 0.5) {
    // Out and back: p_0 .. p_k .. p_1, closing next to p_0.
    const int k = rng.uniform_int(1, max_points / 2);
    auto out = random_walk(rng, k + 1);
    std::vector<Point> pts = out;
    for (int i = k - 1; i >= 1; --i) pts.push_back(out[static_cast<std::size_t>(i)]);
    return pts;
  }
  // Loop: wander away, then step greedily (with jitter) until adjacent to the start.
  while (true) {
    const int away = rng.uniform_int(2, max_points / 2);
    auto pts = random_walk(rng, away);
    const Point start = pts.front();
    while (static_cast<int>(pts.size()) < max_points && !(pts.size() > 2 && adjacent(pts.back(), start))) {
      const Point last = pts.back();
      int sx = (start.x > last.x) - (start.x < last.x);
      int sy = (start.y > last.y) - (start.y < last.y);
      if (rng.uniform() < 0.3) {
        const int d = static_cast<int>(rng.below(8));
        sx = kDx[d];
        sy = kDy[d];
      }
      const Point next{last.x + sx, last.y + sy};
      if (next == start) continue;
      pts.push_back(next);
    }
    if (pts.size() > 2 && adjacent(pts.back(), start)) return pts;
  }
}

std::pair<std::size_t, std::size_t> refinement_indices(const std::vector<Point>& points) {
  const std::size_t m = points.size();
  // 1-based arrays; slot 0 unused.
  std::vector<long> d(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    d[i] = std::labs(long{points[0].x} - points[i - 1].x) + std::labs(long{points[0].y} - points[i - 1].y);
  }
  long d_max = -1;
  std::size_t i_dmax = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    if (d[i] > d_max) {
      d_max = d[i];
      i_dmax = i;
    }
  }
  enum Status { None, Inc, Dec };
  std::vector<Status> status(m + 1, None);
  for (std::size_t i = 2; i <= m; ++i) {
    if (d[i] > d[i - 1]) status[i] = Inc;
    else if (d[i] < d[i - 1]) status[i] = Dec;
    else status[i] = status[i - 1];
  }
  std::vector<std::pair<std::size_t, long>> v;
  for (std::size_t i = 3; i <= m; ++i) {
    if (status[i - 1] != None && status[i] != status[i - 1]) v.emplace_back(i, d[i]);
  }
  const double t = 0.25 * static_cast<double>(d_max);
  std::size_t i_dmin = 0;
  long d_min = std::numeric_limits<long>::max();
  for (const auto& [i, di] : v) {
    if (di < d_min) {
      d_min = di;
      i_dmin = i;
    }
  }
  if (!v.empty() && static_cast<double>(d_min) < t) {
    const double i0 = static_cast<double>(i_dmin - 1);
    const double last = static_cast<double>(m - 1);
    return {static_cast<std::size_t>(std::ceil(i0 / 2.0)), static_cast<std::size_t>(std::ceil((i0 + last) / 2.0))};
  }
  return {0, i_dmax - 1};
}

int atan2_quantized(Point a, Point b) {
  double deg = std::atan2(static_cast<double>(b.y - a.y), static_cast<double>(b.x - a.x)) * 180.0 / std::numbers::pi;
  deg = std::fmod(deg + 360.0, 180.0);
  int q = static_cast<int>(std::lround(deg / 45.0)) * 45;
  return q == 180 ? 0 : q;
}

std::vector<chfb::Merge> reference_agglomeration(const std::vector<Point>& points) {
  const int n = static_cast<int>(points.size());
  struct Cluster {
    int id;
    std::vector<int> members;
  };
  std::vector<Cluster> live;
  for (int i = 0; i < n; ++i) live.push_back({i, {i}});
  auto linkage = [&](const Cluster& a, const Cluster& b) {
    double best = 0.0;
    for (int p : a.members) {
      for (int q : b.members) {
        const double dx = points[p].x - points[q].x;
        const double dy = points[p].y - points[q].y;
        best = std::max(best, std::sqrt(dx * dx + dy * dy));
      }
    }
    return best;
  };
  auto min_leaf = [](const Cluster& c) { return *std::min_element(c.members.begin(), c.members.end()); };
  std::vector<chfb::Merge> merges;
  for (int k = 0; k < n - 1; ++k) {
    std::size_t bi = 0, bj = 0;
    double bd = std::numeric_limits<double>::infinity();
    std::pair<int, int> bkey{n, n};
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = 0; j < live.size(); ++j) {
        if (i == j) continue;
        const int li = min_leaf(live[i]);
        const int lj = min_leaf(live[j]);
        if (li > lj) continue;
        const double dist = linkage(live[i], live[j]);
        const std::pair<int, int> key{li, lj};
        if (dist < bd || (dist == bd && key < bkey)) {
          bd = dist;
          bkey = key;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster merged{n + k, live[bi].members};
    merged.members.insert(merged.members.end(), live[bj].members.begin(), live[bj].members.end());
    merges.push_back({std::min(live[bi].id, live[bj].id), std::max(live[bi].id, live[bj].id), bd,
                      static_cast<int>(merged.members.size())});
    const std::size_t hi = std::max(bi, bj), lo = std::min(bi, bj);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(hi));
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(lo));
    live.push_back(std::move(merged));
  }
  return merges;
}

double pairwise_auc(const std::vector<chfb::ScoredLabel>& scored) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& p : scored) {
    if (!p.positive) continue;
    for (const auto& q : scored) {
      if (q.positive) continue;
      pairs += 1.0;
      if (p.score > q.score) wins += 1.0;
      else if (p.score == q.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

EigenPairs jacobi_eigen(Eigen::MatrixXd a, double tol, int max_sweeps) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < tol * tol) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  EigenPairs out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

chfb::Gradients numeric_gradient(const chfb::NetworkModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 double eps) {
  chfb::Gradients g;
  chfb::NetworkModel probe = model;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::MatrixXd gw(model.weights[l].rows(), model.weights[l].cols());
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) {
        const double w = model.weights[l](r, c);
        probe.weights[l](r, c) = w + eps;
        const double up = chfb::loss(probe, x, y);
        probe.weights[l](r, c) = w - eps;
        const double down = chfb::loss(probe, x, y);
        probe.weights[l](r, c) = w;
        gw(r, c) = (up - down) / (2.0 * eps);
      }
    }
    g.weights.push_back(gw);
    Eigen::VectorXd gb(model.biases[l].size());
    for (Eigen::Index r = 0; r < gb.size(); ++r) {
      const double b = model.biases[l](r);
      probe.biases[l](r) = b + eps;
      const double up = chfb::loss(probe, x, y);
      probe.biases[l](r) = b - eps;
      const double down = chfb::loss(probe, x, y);
      probe.biases[l](r) = b;
      gb(r) = (up - down) / (2.0 * eps);
    }
    g.biases.push_back(gb);
  }
  return g;
}

double gradient_relative_error(const chfb::Gradients& a, const chfb::Gradients& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    diff += (a.weights[l] - b.weights[l]).squaredNorm() + (a.biases[l] - b.biases[l]).squaredNorm();
    na += a.weights[l].squaredNorm() + a.biases[l].squaredNorm();
    nb += b.weights[l].squaredNorm() + b.biases[l].squaredNorm();
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace oracle
