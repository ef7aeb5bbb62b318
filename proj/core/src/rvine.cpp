#include "vcmm/rvine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "numerics.hpp"
#include "vcmm/errors.hpp"

namespace vcmm {

using detail::clamp_unit;

namespace {

using Mask = std::uint64_t;

Mask bit(int v) { return Mask{1} << v; }

Mask edge_mask(const VineEdge& e) {
  Mask m = bit(e.a) | bit(e.b);
  for (int c : e.conditioning) m |= bit(c);
  return m;
}

std::vector<int> mask_members(Mask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    parent[y] = x;
    return true;
  }
};

double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

VineCopula::VineCopula(int dim, std::vector<std::vector<VineEdge>> trees, int truncation)
    : dim_(dim), truncation_(truncation), trees_(std::move(trees)) {
  link_and_validate();
}

VineCopula VineCopula::independence(int dim) {
  if (dim < 1) throw DomainError("vine dimension must be positive");
  std::vector<std::vector<VineEdge>> trees(static_cast<std::size_t>(dim - 1));
  for (int m = 0; m < dim - 1; ++m) {
    for (int i = 0; i + m + 1 < dim; ++i) {
      VineEdge e;
      e.a = i;
      e.b = i + m + 1;
      for (int c = i + 1; c < i + m + 1; ++c) e.conditioning.push_back(c);
      trees[static_cast<std::size_t>(m)].push_back(std::move(e));
    }
  }
  return VineCopula(dim, std::move(trees), dim - 1);
}

void VineCopula::link_and_validate() {
  const int d = dim_;
  if (d < 1 || d > 62) throw DomainError("vine dimension must be in [1, 62]");
  if (static_cast<int>(trees_.size()) != d - 1)
    throw DomainError("a " + std::to_string(d) + "-dimensional vine needs " +
                      std::to_string(d - 1) + " trees");
  if (d == 1 ? truncation_ != 0 : (truncation_ < 1 || truncation_ > d - 1))
    throw DomainError("truncation level " + std::to_string(truncation_) + " out of range");

  links_.assign(trees_.size(), {});
  std::vector<Mask> prev_masks;
  for (std::size_t m = 0; m < trees_.size(); ++m) {
    auto& tree = trees_[m];
    const std::string where = "tree " + std::to_string(m + 1) + ": ";
    if (static_cast<int>(tree.size()) != d - 1 - static_cast<int>(m))
      throw DomainError(where + "wrong number of edges");
    std::vector<Mask> masks;
    UnionFind uf(m == 0 ? static_cast<std::size_t>(d) : prev_masks.size());
    for (auto& e : tree) {
      std::sort(e.conditioning.begin(), e.conditioning.end());
      if (e.a < 0 || e.a >= d || e.b < 0 || e.b >= d || e.a == e.b)
        throw DomainError(where + "bad conditioned pair");
      if (e.conditioning.size() != m ||
          std::adjacent_find(e.conditioning.begin(), e.conditioning.end()) !=
              e.conditioning.end())
        throw DomainError(where + "conditioning set must have " + std::to_string(m) +
                          " distinct variables");
      for (int c : e.conditioning)
        if (c < 0 || c >= d || c == e.a || c == e.b)
          throw DomainError(where + "bad conditioning variable");
      if (static_cast<int>(m) >= truncation_ && !e.copula.is_independence())
        throw DomainError(where + "edges above the truncation level must be independence");
      const Mask mask = edge_mask(e);
      if (std::find(masks.begin(), masks.end(), mask) != masks.end())
        throw DomainError(where + "duplicate edge");
      masks.push_back(mask);

      Link link;
      if (m == 0) {
        if (!uf.unite(e.a, e.b)) throw DomainError(where + "edges contain a cycle");
      } else {
        Mask dmask = 0;
        for (int c : e.conditioning) dmask |= bit(c);
        const auto find = [&](Mask target) {
          const auto it = std::find(prev_masks.begin(), prev_masks.end(), target);
          return it == prev_masks.end() ? -1 : static_cast<int>(it - prev_masks.begin());
        };
        link.left = find(dmask | bit(e.a));
        link.right = find(dmask | bit(e.b));
        if (link.left < 0 || link.right < 0)
          throw DomainError(where + "edge does not join two edges of the previous tree");
        if (m >= 2) {
          const Link& l = links_[m - 1][static_cast<std::size_t>(link.left)];
          const Link& r = links_[m - 1][static_cast<std::size_t>(link.right)];
          if (l.left != r.left && l.left != r.right && l.right != r.left && l.right != r.right)
            throw DomainError(where + "proximity condition violated");
        }
        const VineEdge& le = trees_[m - 1][static_cast<std::size_t>(link.left)];
        const VineEdge& re = trees_[m - 1][static_cast<std::size_t>(link.right)];
        link.left_uses_hb = le.b == e.a;
        link.right_uses_hb = re.b == e.b;
        if ((le.a != e.a && le.b != e.a) || (re.a != e.b && re.b != e.b))
          throw DomainError(where + "conditioned variables must be conditioned in the child edges");
        if (!uf.unite(link.left, link.right)) throw DomainError(where + "edges contain a cycle");
      }
      links_[m].push_back(link);
    }
    prev_masks = std::move(masks);
  }
}

void VineCopula::set_copula(std::size_t tree, std::size_t index, PairCopula copula) {
  if (static_cast<int>(tree) >= truncation_ && !copula.is_independence())
    throw DomainError("edges above the truncation level must be independence");
  trees_.at(tree).at(index).copula = std::move(copula);
}

double VineCopula::logpdf(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != dim_) throw DomainError("vine logpdf: dimension mismatch");
  double ll = 0.0;
  std::vector<double> ha, hb, next_a, next_b;
  const std::size_t active = std::min<std::size_t>(trees_.size(), truncation_);
  for (std::size_t m = 0; m < active; ++m) {
    const auto& tree = trees_[m];
    next_a.resize(tree.size());
    next_b.resize(tree.size());
    for (std::size_t k = 0; k < tree.size(); ++k) {
      const VineEdge& e = tree[k];
      double x, y;
      if (m == 0) {
        x = clamp_unit(u[static_cast<std::size_t>(e.a)]);
        y = clamp_unit(u[static_cast<std::size_t>(e.b)]);
      } else {
        const Link& l = links_[m][k];
        x = l.left_uses_hb ? hb[static_cast<std::size_t>(l.left)] : ha[static_cast<std::size_t>(l.left)];
        y = l.right_uses_hb ? hb[static_cast<std::size_t>(l.right)]
                            : ha[static_cast<std::size_t>(l.right)];
      }
      if (e.copula.is_independence()) {
        next_a[k] = x;
        next_b[k] = y;
        continue;
      }
      ll += e.copula.log_pdf(x, y);
      if (m + 1 < active) {
        next_a[k] = clamp_unit(e.copula.h2(x, y));
        next_b[k] = clamp_unit(e.copula.h1(x, y));
      }
    }
    std::swap(ha, next_a);
    std::swap(hb, next_b);
  }
  return ll;
}

std::vector<double> VineCopula::logpdf(const Matrix& u) const {
  std::vector<double> out(u.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) out[i] = logpdf(u.row(i));
  return out;
}

int VineCopula::free_params() const {
  int count = 0;
  for (const auto& tree : trees_)
    for (const auto& e : tree) count += e.copula.n_params();
  return count;
}

RVineMatrix VineCopula::rvine_matrix() const {
  const int d = dim_;
  RVineMatrix mat(static_cast<std::size_t>(d), std::vector<int>(static_cast<std::size_t>(d), -1));
  std::vector<std::vector<bool>> used(trees_.size());
  for (std::size_t m = 0; m < trees_.size(); ++m) used[m].assign(trees_[m].size(), false);
  Mask remaining = d == 62 ? ~Mask{0} >> 2 : bit(d) - 1;

  for (int i = 0; i + 1 < d; ++i) {
    const int top = d - 2 - i;
    const auto& top_tree = trees_[static_cast<std::size_t>(top)];
    std::size_t top_idx = 0;
    while (used[static_cast<std::size_t>(top)][top_idx]) ++top_idx;
    const VineEdge& te = top_tree[top_idx];

    bool placed = false;
    for (int x : {te.a, te.b}) {
      std::vector<std::size_t> picks;
      bool ok = true;
      for (int t = 0; t <= top && ok; ++t) {
        int found = -1;
        const auto& tree = trees_[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < tree.size(); ++k) {
          if (used[static_cast<std::size_t>(t)][k]) continue;
          if (tree[k].a == x || tree[k].b == x) {
            if (found >= 0) {
              ok = false;
              break;
            }
            found = static_cast<int>(k);
          }
        }
        if (found < 0) ok = false;
        picks.push_back(static_cast<std::size_t>(found));
      }
      if (!ok) continue;
      mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = x;
      for (int t = 0; t <= top; ++t) {
        const VineEdge& e = trees_[static_cast<std::size_t>(t)][picks[static_cast<std::size_t>(t)]];
        mat[static_cast<std::size_t>(d - 1 - t)][static_cast<std::size_t>(i)] =
            e.a == x ? e.b : e.a;
        used[static_cast<std::size_t>(t)][picks[static_cast<std::size_t>(t)]] = true;
      }
      remaining &= ~bit(x);
      placed = true;
      break;
    }
    if (!placed) throw DomainError("vine cannot be encoded as an R-vine matrix");
  }
  mat[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(d - 1)] = std::countr_zero(remaining);
  return mat;
}

Matrix VineCopula::sample(std::size_t n, std::uint64_t seed) const {
  const int d = dim_;
  Matrix out(n, static_cast<std::size_t>(d));
  std::mt19937_64 rng(seed);
  if (d == 1) {
    for (std::size_t r = 0; r < n; ++r) out(r, 0) = uniform01(rng);
    return out;
  }
  const RVineMatrix mat = rvine_matrix();
  std::map<std::tuple<int, int, Mask>, const VineEdge*> lookup;
  for (const auto& tree : trees_)
    for (const auto& e : tree) {
      Mask dmask = 0;
      for (int c : e.conditioning) dmask |= bit(c);
      lookup[{std::min(e.a, e.b), std::max(e.a, e.b), dmask}] = &e;
    }

  struct Memo {
    int v;
    Mask s;
    double value;
  };
  std::vector<Memo> memo;
  std::vector<double> u(static_cast<std::size_t>(d));

  // F(v | S) for already sampled variables.
  auto conditional = [&](auto&& self, int v, Mask s) -> double {
    if (s == 0) return u[static_cast<std::size_t>(v)];
    for (const auto& m : memo)
      if (m.v == v && m.s == s) return m.value;
    for (int y : mask_members(s)) {
      const Mask rest = s & ~bit(y);
      auto it = lookup.find({std::min(v, y), std::max(v, y), rest});
      if (it == lookup.end()) continue;
      const VineEdge& e = *it->second;
      const double fv = self(self, v, rest);
      const double fy = self(self, y, rest);
      double value = e.a == v ? e.copula.h2(fv, fy) : e.copula.h1(fy, fv);
      value = clamp_unit(value);
      memo.push_back({v, s, value});
      return value;
    }
    throw DomainError("vine sampling: missing edge");
  };

  for (std::size_t r = 0; r < n; ++r) {
    memo.clear();
    for (int i = d - 1; i >= 0; --i) {
      const auto col = static_cast<std::size_t>(i);
      const int x = mat[col][col];
      double p = uniform01(rng);
      for (int k = i + 1; k < d; ++k) {
        const int y = mat[static_cast<std::size_t>(k)][col];
        Mask s = 0;
        for (int q = k + 1; q < d; ++q) s |= bit(mat[static_cast<std::size_t>(q)][col]);
        const VineEdge& e = *lookup.at({std::min(x, y), std::max(x, y), s});
        if (e.copula.is_independence()) continue;
        const double cond = conditional(conditional, y, s);
        p = e.a == x ? e.copula.hinv(p, cond, HDirection::H2)
                     : e.copula.hinv(p, cond, HDirection::H1);
      }
      u[static_cast<std::size_t>(x)] = p;
    }
    std::copy(u.begin(), u.end(), out.row(r).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Per-tree h-columns: ha = F(a | b, D), hb = F(b | a, D).
struct TreeColumns {
  std::vector<std::vector<double>> ha, hb;
};

EdgeArguments arguments_for(const VineCopula& vine, std::size_t m, std::size_t k,
                            const Matrix& u, const TreeColumns& prev) {
  const VineEdge& e = vine.trees()[m][k];
  EdgeArguments args;
  if (m == 0) {
    args.first = u.column(static_cast<std::size_t>(e.a));
    args.second = u.column(static_cast<std::size_t>(e.b));
    for (double& x : args.first) x = clamp_unit(x);
    for (double& x : args.second) x = clamp_unit(x);
    return args;
  }
  const auto& l = vine.links()[m][k];
  const auto li = static_cast<std::size_t>(l.left);
  const auto ri = static_cast<std::size_t>(l.right);
  args.first = l.left_uses_hb ? prev.hb[li] : prev.ha[li];
  args.second = l.right_uses_hb ? prev.hb[ri] : prev.ha[ri];
  return args;
}

void push_h(const PairCopula& c, const EdgeArguments& args, TreeColumns& cols) {
  if (c.is_independence()) {
    cols.ha.push_back(args.first);
    cols.hb.push_back(args.second);
    return;
  }
  const std::size_t n = args.first.size();
  std::vector<double> ha(n), hb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ha[i] = clamp_unit(c.h2(args.first[i], args.second[i]));
    hb[i] = clamp_unit(c.h1(args.first[i], args.second[i]));
  }
  cols.ha.push_back(std::move(ha));
  cols.hb.push_back(std::move(hb));
}

// Maximum spanning tree by Prim's algorithm. weight < 0 marks an inadmissible
// pair; ties go to the lexicographically smallest (i, j).
std::vector<std::pair<int, int>> max_spanning_tree(const std::vector<std::vector<double>>& weight) {
  const int n = static_cast<int>(weight.size());
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  in[0] = true;
  std::vector<std::pair<int, int>> edges;
  for (int step = 1; step < n; ++step) {
    double best = -1.0;
    std::pair<int, int> pick{-1, -1};
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (in[static_cast<std::size_t>(i)] == in[static_cast<std::size_t>(j)]) continue;
        const double w = weight[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (w < 0.0) continue;
        if (w > best) {
          best = w;
          pick = {i, j};
        }
      }
    }
    if (pick.first < 0) throw DomainError("no admissible spanning tree");
    in[static_cast<std::size_t>(pick.first)] = true;
    in[static_cast<std::size_t>(pick.second)] = true;
    edges.push_back(pick);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

struct Filtered {
  Matrix u;
  std::vector<double> w;
};

Filtered filter_rows(const Matrix& u, std::span<const double> w, double min_weight) {
  if (!w.empty() && w.size() != u.rows()) throw DomainError("weights and data differ in length");
  std::vector<std::size_t> keep;
  Filtered f;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (wi > 0.0 && wi >= min_weight) {
      keep.push_back(i);
      f.w.push_back(wi);
    }
  }
  f.u = u.select_rows(keep);
  return f;
}

bool is_constant(const std::vector<double>& x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

std::vector<std::vector<EdgeArguments>> edge_arguments(const VineCopula& vine, const Matrix& u) {
  if (static_cast<int>(u.cols()) != vine.dim()) throw DomainError("vine: dimension mismatch");
  std::vector<std::vector<EdgeArguments>> out(vine.trees().size());
  TreeColumns prev;
  for (std::size_t m = 0; m < vine.trees().size(); ++m) {
    TreeColumns cur;
    for (std::size_t k = 0; k < vine.trees()[m].size(); ++k) {
      out[m].push_back(arguments_for(vine, m, k, u, prev));
      push_h(vine.trees()[m][k].copula, out[m].back(), cur);
    }
    prev = std::move(cur);
  }
  return out;
}

double weighted_loglik(const VineCopula& vine, const Matrix& u, std::span<const double> w) {
  double ll = 0.0;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (wi > 0.0) ll += wi * vine.logpdf(u.row(i));
  }
  return ll;
}

VineCopula select_structure(const Matrix& u_all, std::span<const double> w_all, int truncation,
                            std::span<const CopulaFamily> candidates) {
  const int d = static_cast<int>(u_all.cols());
  if (d < 1) throw DomainError("select_structure: no variables");
  if (d == 1) return VineCopula(1, {}, 0);
  if (truncation < 1 || truncation > d - 1)
    throw DomainError("truncation level must be in [1, " + std::to_string(d - 1) + "]");
  const Filtered data = filter_rows(u_all, w_all, 0.0);
  if (data.u.rows() < 10) throw DegenerateDataError("vine selection needs at least 10 observations");
  for (int j = 0; j < d; ++j)
    if (is_constant(data.u.column(static_cast<std::size_t>(j))))
      throw DegenerateDataError("Kendall's tau undefined: variable " + std::to_string(j + 1) +
                                " is constant");

  std::vector<std::vector<VineEdge>> trees;
  std::vector<Mask> prev_masks;
  std::vector<VineEdge> prev_edges;
  std::vector<std::pair<int, int>> prev_children;
  TreeColumns prev;
  for (int m = 0; m < d - 1; ++m) {
    const int nodes = d - m;
    // Node columns: variables in tree 1, otherwise both h-values of each edge.
    auto node_column = [&](int node, int var) -> const std::vector<double>& {
      const auto ni = static_cast<std::size_t>(node);
      return prev_edges[ni].a == var ? prev.ha[ni] : prev.hb[ni];
    };
    std::vector<std::vector<double>> columns;
    if (m == 0)
      for (int j = 0; j < d; ++j) {
        columns.push_back(data.u.column(static_cast<std::size_t>(j)));
        for (double& x : columns.back()) x = clamp_unit(x);
      }

    std::vector<std::vector<double>> weight(static_cast<std::size_t>(nodes),
                                            std::vector<double>(static_cast<std::size_t>(nodes), -1.0));
    for (int i = 0; i < nodes; ++i) {
      for (int j = i + 1; j < nodes; ++j) {
        const std::vector<double>* x;
        const std::vector<double>* y;
        if (m == 0) {
          x = &columns[static_cast<std::size_t>(i)];
          y = &columns[static_cast<std::size_t>(j)];
        } else {
          const Mask mi = prev_masks[static_cast<std::size_t>(i)];
          const Mask mj = prev_masks[static_cast<std::size_t>(j)];
          if (std::popcount(mi & mj) != m) continue;
          if (m >= 2) {
            // Proximity: the two edges must share a node of the previous tree.
            const auto [a1, b1] = prev_children[static_cast<std::size_t>(i)];
            const auto [a2, b2] = prev_children[static_cast<std::size_t>(j)];
            if (a1 != a2 && a1 != b2 && b1 != a2 && b1 != b2) continue;
          }
          x = &node_column(i, std::countr_zero(mi & ~mj));
          y = &node_column(j, std::countr_zero(mj & ~mi));
        }
        double tau = 0.0;
        try {
          tau = empirical_tau(*x, *y);
        } catch (const DegenerateDataError&) {
          tau = 0.0;
        }
        weight[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::abs(tau);
        weight[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = std::abs(tau);
      }
    }

    std::vector<VineEdge> edges;
    std::vector<Mask> masks;
    std::vector<std::pair<int, int>> children;
    TreeColumns cur;
    for (auto [i, j] : max_spanning_tree(weight)) {
      children.emplace_back(i, j);
      VineEdge e;
      EdgeArguments args;
      if (m == 0) {
        e.a = i;
        e.b = j;
        args.first = columns[static_cast<std::size_t>(i)];
        args.second = columns[static_cast<std::size_t>(j)];
      } else {
        const Mask mi = prev_masks[static_cast<std::size_t>(i)];
        const Mask mj = prev_masks[static_cast<std::size_t>(j)];
        e.a = std::countr_zero(mi & ~mj);
        e.b = std::countr_zero(mj & ~mi);
        e.conditioning = mask_members(mi & mj);
        args.first = node_column(i, e.a);
        args.second = node_column(j, e.b);
      }
      if (m < truncation) e.copula = fit_bicop(args.first, args.second, data.w, candidates).copula;
      push_h(e.copula, args, cur);
      masks.push_back(edge_mask(e));
      edges.push_back(std::move(e));
    }
    trees.push_back(edges);
    prev_edges = std::move(edges);
    prev_masks = std::move(masks);
    prev_children = std::move(children);
    prev = std::move(cur);
  }
  return VineCopula(d, std::move(trees), truncation);
}

VineCopula refit_parameters(const VineCopula& vine, const Matrix& u_all, std::span<const double> w_all,
                            double min_weight) {
  const Filtered data = filter_rows(u_all, w_all, min_weight);
  if (data.u.rows() < 2) return vine;
  VineCopula out = vine;
  TreeColumns prev;
  const auto& trees = vine.trees();
  for (std::size_t m = 0; m < trees.size(); ++m) {
    TreeColumns cur;
    for (std::size_t k = 0; k < trees[m].size(); ++k) {
      const EdgeArguments args = arguments_for(out, m, k, data.u, prev);
      const PairCopula& current = trees[m][k].copula;
      if (!current.is_independence()) {
        auto edge_ll = [&](const PairCopula& c) {
          double ll = 0.0;
          for (std::size_t i = 0; i < data.w.size(); ++i)
            ll += data.w[i] * c.log_pdf(args.first[i], args.second[i]);
          return ll;
        };
        try {
          const BicopFit fit = fit_bicop_family(args.first, args.second, data.w, current.family(),
                                                current.rotation(), &current);
          if (edge_ll(fit.copula) > edge_ll(current)) out.set_copula(m, k, fit.copula);
        } catch (const Error&) {
          // keep the current parameters
        }
      }
      push_h(out.trees()[m][k].copula, args, cur);
    }
    prev = std::move(cur);
  }
  if (weighted_loglik(out, data.u, data.w) < weighted_loglik(vine, data.u, data.w)) return vine;
  return out;
}

}  // namespace vcmm
