#include "taxonap/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "taxonap/errors.hpp"
#include "taxonap/pair_cache.hpp"
#include "text_util.hpp"

namespace taxonap {

namespace {

using NodeId = Taxonomy::NodeId;

std::vector<NodeId> merge_sorted(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  std::vector<NodeId> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// PairCache

PairCache::PairCache(std::size_t capacity) : capacity_(capacity) {
  const std::size_t per_shard = capacity == 0 ? 0 : std::max<std::size_t>(1, capacity / kShards);
  for (auto& shard : shards_) shard.capacity = per_shard;
}

std::optional<double> PairCache::get(std::uint64_t key) {
  Shard& shard = shard_for(key);
  std::lock_guard lock(shard.mutex);
  auto it = shard.map.find(key);
  if (it == shard.map.end()) return std::nullopt;
  shard.order.splice(shard.order.begin(), shard.order, it->second);
  return it->second->second;
}

void PairCache::put(std::uint64_t key, double value) {
  Shard& shard = shard_for(key);
  if (shard.capacity == 0) return;
  std::lock_guard lock(shard.mutex);
  if (auto it = shard.map.find(key); it != shard.map.end()) {
    it->second->second = value;
    shard.order.splice(shard.order.begin(), shard.order, it->second);
    return;
  }
  if (shard.map.size() >= shard.capacity) {
    shard.map.erase(shard.order.back().first);
    shard.order.pop_back();
  }
  shard.order.emplace_front(key, value);
  shard.map.emplace(key, shard.order.begin());
}

std::size_t PairCache::size() const {
  std::size_t total = 0;
  for (const auto& shard : shards_) {
    std::lock_guard lock(shard.mutex);
    total += shard.map.size();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Taxonomy

Taxonomy::Taxonomy(Taxonomy&&) noexcept = default;
Taxonomy& Taxonomy::operator=(Taxonomy&&) noexcept = default;
Taxonomy::~Taxonomy() = default;

std::optional<NodeId> Taxonomy::find(std::string_view code) const {
  auto it = index_.find(std::string(code));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId Taxonomy::at(std::string_view code) const {
  if (auto node = find(code)) return *node;
  throw UnknownConcept(id_, std::string(code));
}

std::vector<NodeId> Taxonomy::ancestors(NodeId node) const {
  std::vector<NodeId> out{node};
  if (!multiple_inheritance_) {
    while (!parents_[node].empty()) {
      node = parents_[node].front();
      out.push_back(node);
    }
    return out;
  }
  std::vector<bool> seen(size(), false);
  seen[node] = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (NodeId p : parents_[out[i]]) {
      if (!seen[p]) {
        seen[p] = true;
        out.push_back(p);
      }
    }
  }
  return out;
}

NodeId Taxonomy::lcs(NodeId a, NodeId b) const {
  if (a == b) return a;
  const std::vector<NodeId> up_a = ancestors(a);
  std::vector<NodeId> up_b = ancestors(b);
  std::sort(up_b.begin(), up_b.end());
  std::optional<NodeId> best;
  for (NodeId c : up_a) {
    if (!std::binary_search(up_b.begin(), up_b.end(), c)) continue;
    if (!best || ic_[c] > ic_[*best] || (ic_[c] == ic_[*best] && codes_[c] < codes_[*best])) {
      best = c;
    }
  }
  // Both chains end at the root, so a common subsumer always exists.
  return *best;
}

double Taxonomy::compute_sim(NodeId a, NodeId b) const {
  const double denom = ic_[a] + ic_[b];
  if (denom <= 0.0) return 0.0;
  return std::clamp(2.0 * ic_[lcs(a, b)] / denom, 0.0, 1.0);
}

double Taxonomy::sim_sanchez(NodeId a, NodeId b) const {
  if (a == b) return 1.0;
  if (!cache_) return compute_sim(a, b);
  const auto key = PairCache::key(a, b);
  if (auto hit = cache_->get(key)) return *hit;
  const double value = compute_sim(a, b);
  cache_->put(key, value);
  return value;
}

// ---------------------------------------------------------------------------
// TaxonomyBuilder

TaxonomyBuilder::TaxonomyBuilder(std::string id, TaxonomyOptions options)
    : id_(std::move(id)), options_(options) {}

NodeId TaxonomyBuilder::intern(std::string_view code) {
  auto [it, inserted] = index_.try_emplace(std::string(code), static_cast<NodeId>(codes_.size()));
  if (inserted) {
    codes_.emplace_back(code);
    descriptions_.emplace_back();
    parents_.emplace_back();
  }
  return it->second;
}

bool TaxonomyBuilder::has_node(std::string_view code) const {
  return index_.contains(std::string(code));
}

void TaxonomyBuilder::add_node(std::string_view code, std::string_view description) {
  if (code.empty()) throw InvalidTaxonomy("empty concept code in taxonomy '" + id_ + "'");
  const NodeId node = intern(code);
  if (descriptions_[node].empty() && !description.empty()) descriptions_[node] = description;
}

void TaxonomyBuilder::add_edge(std::string_view child, std::string_view parent) {
  if (child.empty() || parent.empty()) {
    throw InvalidTaxonomy("empty concept code in taxonomy '" + id_ + "'");
  }
  const NodeId c = intern(child);
  const NodeId p = intern(parent);
  auto& ps = parents_[c];
  if (std::find(ps.begin(), ps.end(), p) != ps.end()) {
    warnings_.push_back("duplicate edge " + std::string(child) + " -> " + std::string(parent) +
                        " ignored");
    return;
  }
  ps.push_back(p);
}

Taxonomy TaxonomyBuilder::build() && {
  if (codes_.empty()) throw EmptyInput("taxonomy '" + id_ + "' has no concepts");

  std::vector<NodeId> sources;
  for (NodeId n = 0; n < codes_.size(); ++n) {
    if (parents_[n].empty()) sources.push_back(n);
  }
  if (sources.size() > 1) {
    if (index_.contains(std::string(kVirtualRoot))) {
      throw InvalidTaxonomy("taxonomy '" + id_ +
                            "' has several parentless nodes and already uses the code ROOT");
    }
    const NodeId root = intern(kVirtualRoot);
    for (NodeId s : sources) parents_[s].push_back(root);
    sources = {root};
  }

  const std::size_t n_nodes = codes_.size();
  Taxonomy tax;
  tax.id_ = std::move(id_);
  tax.options_ = options_;
  tax.codes_ = std::move(codes_);
  tax.descriptions_ = std::move(descriptions_);
  tax.index_ = std::move(index_);
  tax.parents_ = std::move(parents_);
  tax.warnings_ = std::move(warnings_);
  tax.children_.assign(n_nodes, {});

  for (NodeId n = 0; n < n_nodes; ++n) {
    auto& ps = tax.parents_[n];
    std::sort(ps.begin(), ps.end(),
              [&](NodeId x, NodeId y) { return tax.codes_[x] < tax.codes_[y]; });
    if (ps.size() > 1) tax.multiple_inheritance_ = true;
    for (NodeId p : ps) tax.children_[p].push_back(n);
  }
  for (auto& cs : tax.children_) {
    std::sort(cs.begin(), cs.end(),
              [&](NodeId x, NodeId y) { return tax.codes_[x] < tax.codes_[y]; });
  }

  // Kahn's algorithm from the sources down; leftovers sit on a cycle.
  std::vector<std::size_t> pending(n_nodes);
  for (NodeId n = 0; n < n_nodes; ++n) pending[n] = tax.parents_[n].size();
  std::vector<NodeId> topo;
  topo.reserve(n_nodes);
  for (NodeId n = 0; n < n_nodes; ++n) {
    if (pending[n] == 0) topo.push_back(n);
  }
  for (std::size_t i = 0; i < topo.size(); ++i) {
    for (NodeId c : tax.children_[topo[i]]) {
      if (--pending[c] == 0) topo.push_back(c);
    }
  }
  if (topo.size() != n_nodes) {
    std::string witness;
    for (NodeId n = 0; n < n_nodes; ++n) {
      if (pending[n] != 0 && (witness.empty() || tax.codes_[n] < witness)) witness = tax.codes_[n];
    }
    throw CycleDetected(witness);
  }
  if (sources.size() != 1) throw CycleDetected(tax.codes_[topo.front()]);
  tax.root_ = sources.front();

  tax.subsumer_count_.assign(n_nodes, 1);
  tax.leaf_count_.assign(n_nodes, 0);
  std::vector<std::size_t> leaf_set_size(n_nodes, 0);
  if (!tax.multiple_inheritance_) {
    for (NodeId n : topo) {
      if (!tax.parents_[n].empty()) {
        tax.subsumer_count_[n] = tax.subsumer_count_[tax.parents_[n].front()] + 1;
      }
    }
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      const NodeId n = *it;
      if (tax.children_[n].empty()) {
        leaf_set_size[n] = 1;
      } else {
        for (NodeId c : tax.children_[n]) leaf_set_size[n] += leaf_set_size[c];
      }
    }
  } else {
    std::vector<std::vector<NodeId>> up(n_nodes);
    for (NodeId n : topo) {
      std::vector<NodeId> acc{n};
      for (NodeId p : tax.parents_[n]) acc = merge_sorted(acc, up[p]);
      up[n] = std::move(acc);
      tax.subsumer_count_[n] = up[n].size();
    }
    std::vector<std::vector<NodeId>> down(n_nodes);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      const NodeId n = *it;
      if (tax.children_[n].empty()) {
        down[n] = {n};
      } else {
        for (NodeId c : tax.children_[n]) down[n] = merge_sorted(down[n], down[c]);
      }
      leaf_set_size[n] = down[n].size();
    }
  }
  for (NodeId n = 0; n < n_nodes; ++n) {
    const bool leaf = tax.children_[n].empty();
    tax.leaf_count_[n] = leaf && !options_.leaf_counts_itself ? 0 : leaf_set_size[n];
  }
  tax.max_leaves_ = leaf_set_size[tax.root_];

  tax.ic_.resize(n_nodes);
  const double denom = static_cast<double>(tax.max_leaves_) + 1.0;
  for (NodeId n = 0; n < n_nodes; ++n) {
    const double ratio = static_cast<double>(tax.leaf_count_[n]) /
                         static_cast<double>(tax.subsumer_count_[n]);
    // max(0, .) absorbs the -0.0 / rounding at the root.
    tax.ic_[n] = std::max(0.0, -std::log((ratio + 1.0) / denom));
  }
  if (options_.cache_capacity > 0) tax.cache_ = std::make_unique<PairCache>(options_.cache_capacity);
  return tax;
}

// ---------------------------------------------------------------------------
// Generic edge-list loading

Taxonomy parse_generic_taxonomy(std::string id, std::span<const TaxonomyEdge> edges,
                                TaxonomyOptions options) {
  if (edges.empty()) throw EmptyInput("taxonomy edge list is empty");
  TaxonomyBuilder builder(std::move(id), options);
  for (const auto& e : edges) {
    if (e.child == e.parent) throw CycleDetected(e.child);
    builder.add_edge(e.child, e.parent);
  }
  return std::move(builder).build();
}

Taxonomy parse_generic_taxonomy_tsv(std::string id, std::string_view text, TaxonomyOptions options) {
  TaxonomyBuilder builder(std::move(id), options);
  std::size_t line_no = 0;
  std::size_t n_edges = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    line = detail::rstrip(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() < 2) throw MalformedLine(line_no, "expected child<TAB>parent");
    const auto child = detail::trim(cols[0]);
    const auto parent = detail::trim(cols[1]);
    if (child.empty() || parent.empty()) throw MalformedLine(line_no, "empty code");
    if (child == parent) throw CycleDetected(std::string(child));
    builder.add_edge(child, parent);
    if (cols.size() >= 3) builder.add_node(child, detail::trim(cols[2]));
    ++n_edges;
  }
  if (n_edges == 0) throw EmptyInput("taxonomy TSV contains no edges");
  return std::move(builder).build();
}

std::vector<TaxonomyEdge> taxonomy_edges(const Taxonomy& tax) {
  std::vector<NodeId> order(tax.size());
  for (NodeId n = 0; n < tax.size(); ++n) order[n] = n;
  std::sort(order.begin(), order.end(),
            [&](NodeId a, NodeId b) { return tax.code(a) < tax.code(b); });
  std::vector<TaxonomyEdge> edges;
  for (NodeId n : order) {
    for (NodeId p : tax.parents(n)) edges.push_back({tax.code(n), tax.code(p)});
  }
  return edges;
}

std::string to_tsv(const Taxonomy& tax) {
  std::ostringstream out;
  out << "# child\tparent\tdescription\n";
  for (const auto& e : taxonomy_edges(tax)) {
    out << e.child << '\t' << e.parent;
    const auto& d = tax.description(tax.at(e.child));
    if (!d.empty()) out << '\t' << d;
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Similarity kinds

std::string_view to_string(SimilarityKind kind) {
  return kind == SimilarityKind::kSanchez ? "sanchez" : "boolean";
}

SimilarityKind parse_similarity_kind(std::string_view text) {
  if (text == "sanchez") return SimilarityKind::kSanchez;
  if (text == "boolean") return SimilarityKind::kBoolean;
  throw InvalidArgument("unknown similarity kind '" + std::string(text) + "'");
}

double CodeSimilarity::operator()(std::string_view a, std::string_view b) const {
  const bool end_a = a == kEndActivity;
  const bool end_b = b == kEndActivity;
  if (end_a || end_b) return end_a && end_b ? 1.0 : 0.0;
  if (kind_ == SimilarityKind::kBoolean) {
    // Still validate membership so both variants reject the same inputs.
    tax_->at(a);
    tax_->at(b);
    return sim_boolean(a, b);
  }
  return tax_->sim_sanchez(tax_->at(a), tax_->at(b));
}

}  // namespace taxonap
