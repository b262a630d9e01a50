#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks: dense matrices instead of sparse,
// SVD instead of integer elimination or CG, brute force instead of wedges.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvf/complex.hpp"

namespace oracle {

using gvf::Edge;
using gvf::NodeKind;
using gvf::SimplicialComplex;
using gvf::Triangle;
using gvf::Vertex;

// Boundary matrices straight from the definitions.
inline Eigen::MatrixXd dense_b1(const SimplicialComplex& k) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k.num_vertices()),
                                            static_cast<Eigen::Index>(k.num_edges()));
  for (std::size_t e = 0; e < k.num_edges(); ++e) {
    b(k.edges()[e][0], static_cast<Eigen::Index>(e)) = -1;
    b(k.edges()[e][1], static_cast<Eigen::Index>(e)) = 1;
  }
  return b;
}

inline Eigen::MatrixXd dense_b2(const SimplicialComplex& k) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k.num_edges()),
                                            static_cast<Eigen::Index>(k.num_triangles()));
  const auto find = [&](int u, int v) {
    for (std::size_t e = 0; e < k.num_edges(); ++e) {
      if (k.edges()[e][0] == u && k.edges()[e][1] == v) return static_cast<Eigen::Index>(e);
    }
    return Eigen::Index{-1};
  };
  for (std::size_t t = 0; t < k.num_triangles(); ++t) {
    const auto [a, b_, c] = k.triangles()[t];
    // d[a,b,c] = [b,c] - [a,c] + [a,b]
    b(find(b_, c), static_cast<Eigen::Index>(t)) += 1;
    b(find(a, c), static_cast<Eigen::Index>(t)) -= 1;
    b(find(a, b_), static_cast<Eigen::Index>(t)) += 1;
  }
  return b;
}

inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max<double>(1.0, s.size() ? s(0) : 0.0);
  Eigen::MatrixXd sinv = Eigen::MatrixXd::Zero(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) sinv(i, i) = 1.0 / s(i);
  }
  return svd.matrixV() * sinv * svd.matrixU().transpose();
}

inline std::size_t numeric_rank(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > 1e-9 * std::max(1.0, s(0)) ? 1 : 0;
  return r;
}

struct DenseHhd {
  Eigen::MatrixXd gradient, curl, harmonic;
};

// Orthogonal projections onto im(B1^T) and im(B2) via pseudoinverses.
inline DenseHhd dense_hhd(const SimplicialComplex& k, const Eigen::MatrixXd& f) {
  const Eigen::MatrixXd b1t = dense_b1(k).transpose();
  const Eigen::MatrixXd b2 = dense_b2(k);
  DenseHhd d;
  d.gradient = b1t * (pinv(b1t) * f);
  d.curl = b2.cols() ? Eigen::MatrixXd(b2 * (pinv(b2) * f)) : Eigen::MatrixXd::Zero(f.rows(), f.cols());
  d.harmonic = f - d.gradient - d.curl;
  return d;
}

inline std::size_t components(const SimplicialComplex& k) {
  const auto adj = k.adjacency();
  std::vector<char> seen(adj.size(), 0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < adj.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          stack.push_back(static_cast<std::size_t>(w));
        }
      }
    }
  }
  return count;
}

// Every closing triad with at least two kinds, by exhaustive enumeration.
inline std::vector<Triangle> brute_triangles(const std::vector<Vertex>& vs, const std::vector<Edge>& edges) {
  std::set<std::pair<int, int>> es;
  for (const auto& e : edges) es.insert({e[0], e[1]});
  const int n = static_cast<int>(vs.size());
  std::vector<Triangle> out;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!es.count({a, b})) continue;
      for (int c = b + 1; c < n; ++c) {
        if (!es.count({a, c}) || !es.count({b, c})) continue;
        const auto ka = vs[static_cast<std::size_t>(a)].kind;
        const auto kb = vs[static_cast<std::size_t>(b)].kind;
        const auto kc = vs[static_cast<std::size_t>(c)].kind;
        if (ka == kb && kb == kc) continue;
        out.push_back({a, b, c});
      }
    }
  }
  return out;
}

// Full-table DTW by recursion with memoisation.
inline double dtw(const std::vector<double>& a, const std::vector<double>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> double {
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
    const double cost = std::abs(a[i] - b[j]);
    double best;
    if (i == 0 && j == 0) {
      best = cost;
    } else if (i == 0) {
      best = cost + go(0, j - 1);
    } else if (j == 0) {
      best = cost + go(i - 1, 0);
    } else {
      best = cost + std::min({go(i - 1, j), go(i, j - 1), go(i - 1, j - 1)});
    }
    memo[{i, j}] = best;
    return best;
  };
  return go(a.size() - 1, b.size() - 1);
}

// Random complex: mixed kinds, edges with probability p, each closing triad
// kept with probability q (closure holds by construction).
inline SimplicialComplex random_complex(std::mt19937_64& rng, int n, double p, double q) {
  std::vector<Vertex> vs;
  std::uniform_int_distribution<int> kind(0, 3);
  for (int i = 0; i < n; ++i) vs.push_back({"v" + std::to_string(i), static_cast<NodeKind>(kind(rng))});
  std::bernoulli_distribution pe(p), pt(q);
  std::vector<Edge> es;
  std::set<std::pair<int, int>> has;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (pe(rng)) {
        es.push_back({a, b});
        has.insert({a, b});
      }
    }
  }
  std::vector<Triangle> ts;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        if (has.count({a, b}) && has.count({a, c}) && has.count({b, c}) && pt(rng)) ts.push_back({a, b, c});
      }
    }
  }
  return SimplicialComplex::from_simplices(vs, es, ts);
}

inline SimplicialComplex make(std::vector<NodeKind> kinds, std::vector<Edge> es, std::vector<Triangle> ts) {
  std::vector<Vertex> vs;
  for (std::size_t i = 0; i < kinds.size(); ++i) vs.push_back({"v" + std::to_string(i), kinds[i]});
  return SimplicialComplex::from_simplices(vs, es, ts);
}

inline SimplicialComplex hollow_triangle() {
  return make({NodeKind::Agent, NodeKind::Agent, NodeKind::Agent}, {{0, 1}, {0, 2}, {1, 2}}, {});
}

inline SimplicialComplex filled_triangle() {
  return make({NodeKind::Agent, NodeKind::Agent, NodeKind::EnvSensor}, {{0, 1}, {0, 2}, {1, 2}}, {{0, 1, 2}});
}

// Central differences of a scalar function of one parameter entry.
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double x0 = x;
  x = x0 + h;
  const double up = f();
  x = x0 - h;
  const double down = f();
  x = x0;
  return (up - down) / (2 * h);
}

// Logistic regression by Newton's method with a tiny ridge; returns the
// training accuracy.
inline double logistic_accuracy(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd a(n, x.cols() + 1);
  a << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = y[static_cast<std::size_t>(i)];
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd p = (1.0 + (-(a * w)).array().exp()).inverse().matrix();
    const Eigen::VectorXd g = a.transpose() * (p - t) + 1e-4 * w;
    const Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd h = a.transpose() * s.asDiagonal() * a;
    h.diagonal().array() += 1e-4;
    w -= h.ldlt().solve(g);
  }
  int correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) correct += ((a.row(i).dot(w) > 0) == (t(i) > 0.5)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace oracle
