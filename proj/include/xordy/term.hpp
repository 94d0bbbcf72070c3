#ifndef XORDY_TERM_HPP
#define XORDY_TERM_HPP

// Term algebra for the Dolev-Yao intruder model extended with xor:
// hash-consed, always-normalized terms, subterm sets, factors,
// substitution application and a canonical total order.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace xordy {

using TermId = std::uint32_t;

enum class AtomKind : std::uint8_t { Name, Key, Variable };
enum class Shape : std::uint8_t { Atom, Pk, Pair, Senc, Aenc, Xor };

struct TermNode {
  Shape shape = Shape::Atom;
  AtomKind kind = AtomKind::Name;  // atoms only
  std::string label;               // atoms only
  std::vector<TermId> children;    // composites; xor children are a
                                   // canonically sorted duplicate-free set
};

// Un-normalized builder/parser output. An Xor node holds a multiset of
// arbitrary children; everything else mirrors TermNode.
struct RawTerm {
  Shape shape = Shape::Atom;
  AtomKind kind = AtomKind::Name;
  std::string label;
  std::vector<RawTerm> children;

  static RawTerm atom(AtomKind k, std::string lbl) {
    RawTerm r;
    r.shape = Shape::Atom;
    r.kind = k;
    r.label = std::move(lbl);
    return r;
  }
  static RawTerm name(std::string lbl) { return atom(AtomKind::Name, std::move(lbl)); }
  static RawTerm key(std::string lbl) { return atom(AtomKind::Key, std::move(lbl)); }
  static RawTerm variable(std::string lbl) { return atom(AtomKind::Variable, std::move(lbl)); }
  static RawTerm make(Shape s, std::vector<RawTerm> ch) {
    RawTerm r;
    r.shape = s;
    r.children = std::move(ch);
    return r;
  }
  static RawTerm pk(RawTerm k) { return make(Shape::Pk, {std::move(k)}); }
  static RawTerm pair(RawTerm a, RawTerm b) { return make(Shape::Pair, {std::move(a), std::move(b)}); }
  static RawTerm senc(RawTerm p, RawTerm k) { return make(Shape::Senc, {std::move(p), std::move(k)}); }
  static RawTerm aenc(RawTerm p, RawTerm k) { return make(Shape::Aenc, {std::move(p), std::move(k)}); }
  static RawTerm xor_of(std::vector<RawTerm> parts) { return make(Shape::Xor, std::move(parts)); }
};

// Interning arena. Every TermId handed out denotes a normalized term and
// structural equality coincides with id equality. All public entry points
// lock, so the arena behaves as if each intern operation were atomic and
// ids are freely shareable across threads.
class TermArena {
 public:
  TermArena() {
    zero_ = intern_atom(AtomKind::Name, "0");
    secret_ = intern_atom(AtomKind::Name, "secret");
    intruder_ = intern_atom(AtomKind::Name, "I");
  }

  TermArena(const TermArena&) = delete;
  TermArena& operator=(const TermArena&) = delete;

  TermId zero() const { return zero_; }
  TermId secret() const { return secret_; }
  TermId intruder() const { return intruder_; }

  TermId name(std::string_view lbl) {
    std::lock_guard lk(mu_);
    return intern_atom(AtomKind::Name, lbl);
  }
  TermId key(std::string_view lbl) {
    std::lock_guard lk(mu_);
    return intern_atom(AtomKind::Key, lbl);
  }
  TermId variable(std::string_view lbl) {
    std::lock_guard lk(mu_);
    return intern_atom(AtomKind::Variable, lbl);
  }

  TermId pk(TermId k) {
    std::lock_guard lk(mu_);
    if (!is_key_atom_unlocked(k)) throw std::invalid_argument("pk: argument must be a key");
    return intern(Shape::Pk, {k});
  }
  TermId pair(TermId a, TermId b) {
    std::lock_guard lk(mu_);
    return intern(Shape::Pair, {a, b});
  }
  TermId senc(TermId payload, TermId k) {
    std::lock_guard lk(mu_);
    return intern(Shape::Senc, {payload, k});
  }
  TermId aenc(TermId payload, TermId pkterm) {
    std::lock_guard lk(mu_);
    if (nodes_[pkterm].shape != Shape::Pk)
      throw std::invalid_argument("aenc: key position must be pk(.)");
    return intern(Shape::Aenc, {payload, pkterm});
  }

  // Normalizing xor of already-normalized parts: expands factors, counts
  // occurrences mod 2, drops the unit 0, sorts canonically.
  TermId xor_of(std::span<const TermId> parts) {
    std::lock_guard lk(mu_);
    return xor_unlocked(parts);
  }
  TermId xor_of(std::initializer_list<TermId> parts) {
    return xor_of(std::span<const TermId>(parts.begin(), parts.size()));
  }

  const TermNode& node(TermId t) const {
    std::lock_guard lk(mu_);
    return nodes_[t];
  }
  Shape shape(TermId t) const {
    std::lock_guard lk(mu_);
    return nodes_[t].shape;
  }
  bool is_atom(TermId t) const { return shape(t) == Shape::Atom; }
  bool is_standard(TermId t) const { return shape(t) != Shape::Xor; }
  bool is_variable(TermId t) const {
    std::lock_guard lk(mu_);
    return nodes_[t].shape == Shape::Atom && nodes_[t].kind == AtomKind::Variable;
  }
  bool is_key_atom(TermId t) const {
    std::lock_guard lk(mu_);
    return is_key_atom_unlocked(t);
  }
  std::string label(TermId t) const {
    std::lock_guard lk(mu_);
    return nodes_[t].label;
  }
  std::vector<TermId> children(TermId t) const {
    std::lock_guard lk(mu_);
    return nodes_[t].children;
  }
  std::size_t term_count() const {
    std::lock_guard lk(mu_);
    return nodes_.size();
  }

  // Factors per fac(.): {t} for standard t, xor children otherwise.
  // Duplicate-free for normalized terms.
  std::vector<TermId> factors(TermId t) const {
    std::lock_guard lk(mu_);
    if (nodes_[t].shape == Shape::Xor) return nodes_[t].children;
    return {t};
  }

  // st(t), sorted by id. Cached per term.
  const std::vector<TermId>& subterms(TermId t) {
    std::lock_guard lk(mu_);
    return subterms_unlocked(t);
  }

  std::vector<TermId> subterms_of(std::span<const TermId> ts) {
    std::lock_guard lk(mu_);
    std::vector<TermId> out;
    for (TermId t : ts) {
      const auto& s = subterms_unlocked(t);
      out.insert(out.end(), s.begin(), s.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t dag_size(TermId t) { return subterms(t).size(); }
  std::size_t dag_size(std::span<const TermId> ts) { return subterms_of(ts).size(); }

  const std::vector<TermId>& vars(TermId t) {
    std::lock_guard lk(mu_);
    return vars_unlocked(t);
  }
  bool is_ground(TermId t) {
    std::lock_guard lk(mu_);
    return vars_unlocked(t).empty();
  }

  // Canonical total order: atoms first (by kind, then label), composites by
  // shape tag then lexicographic child order.
  int compare(TermId a, TermId b) const {
    std::lock_guard lk(mu_);
    return compare_unlocked(a, b);
  }
  bool less(TermId a, TermId b) const { return compare(a, b) < 0; }

 private:
  struct NodeKey {
    Shape shape;
    AtomKind kind;
    std::string label;
    std::vector<TermId> children;
    bool operator==(const NodeKey& o) const {
      return shape == o.shape && kind == o.kind && label == o.label && children == o.children;
    }
  };
  struct NodeKeyHash {
    std::size_t operator()(const NodeKey& k) const {
      std::size_t h = std::hash<int>()(static_cast<int>(k.shape) * 7 + static_cast<int>(k.kind));
      h ^= std::hash<std::string>()(k.label) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      for (TermId c : k.children)
        h ^= std::hash<TermId>()(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return h;
    }
  };

  bool is_key_atom_unlocked(TermId t) const {
    return nodes_[t].shape == Shape::Atom && nodes_[t].kind == AtomKind::Key;
  }

  TermId intern_atom(AtomKind kind, std::string_view lbl) {
    NodeKey k{Shape::Atom, kind, std::string(lbl), {}};
    if (auto it = intern_.find(k); it != intern_.end()) {
      return it->second;
    }
    // A label may be interned once per kind.
    auto [it2, fresh] = atom_kinds_.emplace(std::string(lbl), kind);
    if (!fresh && it2->second != kind)
      throw std::invalid_argument("atom label '" + std::string(lbl) + "' already used with a different kind");
    return store(std::move(k));
  }

  TermId intern(Shape shape, std::vector<TermId> children) {
    NodeKey k{shape, AtomKind::Name, "", std::move(children)};
    if (auto it = intern_.find(k); it != intern_.end()) return it->second;
    return store(std::move(k));
  }

  TermId store(NodeKey k) {
    TermId id = static_cast<TermId>(nodes_.size());
    nodes_.push_back(TermNode{k.shape, k.kind, k.label, k.children});
    intern_.emplace(std::move(k), id);
    return id;
  }

  TermId xor_unlocked(std::span<const TermId> parts) {
    std::map<TermId, int> count;
    for (TermId p : parts) {
      if (nodes_[p].shape == Shape::Xor) {
        for (TermId f : nodes_[p].children) count[f] ^= 1;
      } else if (p != zero_) {
        count[p] ^= 1;
      }
    }
    std::vector<TermId> live;
    for (auto [t, c] : count)
      if (c) live.push_back(t);
    if (live.empty()) return zero_;
    if (live.size() == 1) return live[0];
    std::sort(live.begin(), live.end(),
              [this](TermId a, TermId b) { return compare_unlocked(a, b) < 0; });
    return intern(Shape::Xor, std::move(live));
  }

  const std::vector<TermId>& subterms_unlocked(TermId t) {
    if (auto it = st_cache_.find(t); it != st_cache_.end()) return *it->second;
    std::vector<TermId> acc{t};
    for (TermId c : nodes_[t].children) {
      const auto& cs = subterms_unlocked(c);
      acc.insert(acc.end(), cs.begin(), cs.end());
    }
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    auto owned = std::make_unique<std::vector<TermId>>(std::move(acc));
    auto* ptr = owned.get();
    st_cache_.emplace(t, std::move(owned));
    return *ptr;
  }

  const std::vector<TermId>& vars_unlocked(TermId t) {
    if (auto it = vars_cache_.find(t); it != vars_cache_.end()) return *it->second;
    std::vector<TermId> acc;
    if (nodes_[t].shape == Shape::Atom) {
      if (nodes_[t].kind == AtomKind::Variable) acc.push_back(t);
    } else {
      for (TermId c : nodes_[t].children) {
        const auto& cs = vars_unlocked(c);
        acc.insert(acc.end(), cs.begin(), cs.end());
      }
      std::sort(acc.begin(), acc.end());
      acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    }
    auto owned = std::make_unique<std::vector<TermId>>(std::move(acc));
    auto* ptr = owned.get();
    vars_cache_.emplace(t, std::move(owned));
    return *ptr;
  }

  int compare_unlocked(TermId a, TermId b) const {
    if (a == b) return 0;
    const TermNode& na = nodes_[a];
    const TermNode& nb = nodes_[b];
    if (na.shape != nb.shape)
      return static_cast<int>(na.shape) < static_cast<int>(nb.shape) ? -1 : 1;
    if (na.shape == Shape::Atom) {
      if (na.kind != nb.kind)
        return static_cast<int>(na.kind) < static_cast<int>(nb.kind) ? -1 : 1;
      return na.label < nb.label ? -1 : 1;
    }
    std::size_t n = std::min(na.children.size(), nb.children.size());
    for (std::size_t i = 0; i < n; ++i) {
      int c = compare_unlocked(na.children[i], nb.children[i]);
      if (c != 0) return c;
    }
    if (na.children.size() != nb.children.size())
      return na.children.size() < nb.children.size() ? -1 : 1;
    return 0;
  }

  mutable std::recursive_mutex mu_;
  std::deque<TermNode> nodes_;  // deque: node references stay valid across interning
  std::unordered_map<NodeKey, TermId, NodeKeyHash> intern_;
  std::unordered_map<std::string, AtomKind> atom_kinds_;
  std::unordered_map<TermId, std::unique_ptr<std::vector<TermId>>> st_cache_;
  std::unordered_map<TermId, std::unique_ptr<std::vector<TermId>>> vars_cache_;
  TermId zero_, secret_, intruder_;
};

// nf(.): total on well-formed raw trees, idempotent by construction.
inline TermId normalize(TermArena& a, const RawTerm& t) {
  switch (t.shape) {
    case Shape::Atom:
      switch (t.kind) {
        case AtomKind::Name: return a.name(t.label);
        case AtomKind::Key: return a.key(t.label);
        case AtomKind::Variable: return a.variable(t.label);
      }
      throw std::logic_error("bad atom kind");
    case Shape::Pk: return a.pk(normalize(a, t.children.at(0)));
    case Shape::Pair: return a.pair(normalize(a, t.children.at(0)), normalize(a, t.children.at(1)));
    case Shape::Senc: return a.senc(normalize(a, t.children.at(0)), normalize(a, t.children.at(1)));
    case Shape::Aenc: return a.aenc(normalize(a, t.children.at(0)), normalize(a, t.children.at(1)));
    case Shape::Xor: {
      std::vector<TermId> parts;
      parts.reserve(t.children.size());
      for (const RawTerm& c : t.children) parts.push_back(normalize(a, c));
      return a.xor_of(parts);
    }
  }
  throw std::logic_error("bad shape");
}

// Finite map from variable atoms to normalized terms.
class Substitution {
 public:
  Substitution() = default;

  void bind(TermId var, TermId value) { map_[var] = value; }
  void unbind(TermId var) { map_.erase(var); }
  bool contains(TermId var) const { return map_.count(var) != 0; }
  TermId lookup(TermId var) const { return map_.at(var); }
  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  const std::map<TermId, TermId>& entries() const { return map_; }

  std::vector<TermId> values() const {
    std::vector<TermId> out;
    out.reserve(map_.size());
    for (auto [v, t] : map_) out.push_back(t);
    return out;
  }

  bool is_ground(TermArena& a) const {
    for (auto [v, t] : map_)
      if (!a.is_ground(t)) return false;
    return true;
  }

  // |sigma|: dag-size of the value set.
  std::size_t dag_size(TermArena& a) const {
    auto vs = values();
    return a.dag_size(vs);
  }

 private:
  std::map<TermId, TermId> map_;
};

// nf(t sigma). Unmapped variables stay put.
inline TermId apply(TermArena& a, TermId t, const Substitution& s) {
  const TermNode& n = a.node(t);
  switch (n.shape) {
    case Shape::Atom:
      if (n.kind == AtomKind::Variable && s.contains(t)) return s.lookup(t);
      return t;
    case Shape::Pk:
      return t;  // pk child is a key atom
    case Shape::Pair:
      return a.pair(apply(a, n.children[0], s), apply(a, n.children[1], s));
    case Shape::Senc:
      return a.senc(apply(a, n.children[0], s), apply(a, n.children[1], s));
    case Shape::Aenc:
      return a.aenc(apply(a, n.children[0], s), apply(a, n.children[1], s));
    case Shape::Xor: {
      std::vector<TermId> parts;
      parts.reserve(n.children.size());
      for (TermId c : n.children) parts.push_back(apply(a, c, s));
      return a.xor_of(parts);
    }
  }
  throw std::logic_error("bad shape");
}

inline std::vector<TermId> apply(TermArena& a, std::span<const TermId> ts, const Substitution& s) {
  std::vector<TermId> out;
  out.reserve(ts.size());
  for (TermId t : ts) out.push_back(apply(a, t, s));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace xordy

#endif  // XORDY_TERM_HPP
