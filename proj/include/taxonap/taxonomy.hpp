#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace taxonap {

class PairCache;

// Sentinel activity closing every trace. It belongs to no taxonomy.
inline constexpr std::string_view kEndActivity = "END";

// Name of the virtual root inserted above parentless nodes.
inline constexpr std::string_view kVirtualRoot = "ROOT";

// A concept reference: taxonomy-local code plus the owning taxonomy.
struct ConceptId {
  std::string taxonomy_id;
  std::string code;

  friend bool operator==(const ConceptId&, const ConceptId&) = default;
};

struct TaxonomyOptions {
  // When true a leaf is counted among its own leaves, so |leaves(leaf)| = 1.
  // When false |leaves(leaf)| = 0. Subsumers always include the concept.
  bool leaf_counts_itself = true;
  // Capacity of the pairwise similarity memo. 0 disables memoization.
  std::size_t cache_capacity = std::size_t{1} << 20;
};

struct TaxonomyEdge {
  std::string child;
  std::string parent;
};

// Immutable rooted DAG of concepts with precomputed leaf and subsumer counts.
// All query methods are safe for concurrent readers.
class Taxonomy {
 public:
  using NodeId = std::uint32_t;

  Taxonomy(Taxonomy&&) noexcept;
  Taxonomy& operator=(Taxonomy&&) noexcept;
  ~Taxonomy();

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return codes_.size(); }
  NodeId root() const noexcept { return root_; }
  const TaxonomyOptions& options() const noexcept { return options_; }

  std::optional<NodeId> find(std::string_view code) const;
  bool contains(std::string_view code) const { return find(code).has_value(); }
  // Throws UnknownConcept.
  NodeId at(std::string_view code) const;

  const std::string& code(NodeId node) const { return codes_[node]; }
  const std::string& description(NodeId node) const { return descriptions_[node]; }
  std::span<const NodeId> parents(NodeId node) const { return parents_[node]; }
  std::span<const NodeId> children(NodeId node) const { return children_[node]; }
  bool is_leaf(NodeId node) const { return children_[node].empty(); }

  std::size_t leaf_count(NodeId node) const { return leaf_count_[node]; }
  std::size_t subsumer_count(NodeId node) const { return subsumer_count_[node]; }
  std::size_t max_leaves() const noexcept { return max_leaves_; }
  // True when some node has more than one parent.
  bool multiple_inheritance() const noexcept { return multiple_inheritance_; }

  // All subsumers of `node` including itself, nearest first, root last.
  std::vector<NodeId> ancestors(NodeId node) const;

  // Information content, natural log:
  //   -ln((|leaves(c)| / |subsumers(c)| + 1) / (max_leaves + 1))
  double ic(NodeId node) const { return ic_[node]; }
  double ic(std::string_view code) const { return ic(at(code)); }

  // Common subsumer with maximal IC; ties go to the lexicographically
  // smallest code.
  NodeId lcs(NodeId a, NodeId b) const;
  const std::string& lcs(std::string_view a, std::string_view b) const {
    return code(lcs(at(a), at(b)));
  }

  // 2 * IC(lcs) / (IC(a) + IC(b)); exactly 1 when a == b.
  double sim_sanchez(NodeId a, NodeId b) const;
  double sim_sanchez(std::string_view a, std::string_view b) const {
    return sim_sanchez(at(a), at(b));
  }

  // Non-fatal issues raised while building (duplicate edges and the like).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  friend class TaxonomyBuilder;
  Taxonomy() = default;

  double compute_sim(NodeId a, NodeId b) const;

  std::string id_;
  TaxonomyOptions options_;
  std::vector<std::string> codes_;
  std::vector<std::string> descriptions_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<std::size_t> leaf_count_;
  std::vector<std::size_t> subsumer_count_;
  std::vector<double> ic_;
  std::size_t max_leaves_ = 0;
  NodeId root_ = 0;
  bool multiple_inheritance_ = false;
  std::vector<std::string> warnings_;
  std::unique_ptr<PairCache> cache_;
};

// Incremental construction. `build()` validates the graph (single root,
// acyclic) and populates every cached quantity.
class TaxonomyBuilder {
 public:
  explicit TaxonomyBuilder(std::string id, TaxonomyOptions options = {});

  // Adds a node if absent; a non-empty description overwrites an empty one.
  void add_node(std::string_view code, std::string_view description = {});
  // Adds both endpoints if needed. Repeated edges are dropped with a warning.
  void add_edge(std::string_view child, std::string_view parent);
  void warn(std::string message) { warnings_.push_back(std::move(message)); }
  bool has_node(std::string_view code) const;
  std::size_t node_count() const { return codes_.size(); }

  // Throws EmptyInput, CycleDetected, InvalidTaxonomy.
  Taxonomy build() &&;

 private:
  Taxonomy::NodeId intern(std::string_view code);

  std::string id_;
  TaxonomyOptions options_;
  std::vector<std::string> codes_;
  std::vector<std::string> descriptions_;
  std::unordered_map<std::string, Taxonomy::NodeId> index_;
  std::vector<std::vector<Taxonomy::NodeId>> parents_;
  std::vector<std::string> warnings_;
};

// Builds a taxonomy from child->parent pairs. If several nodes lack a parent a
// virtual "ROOT" is placed above them.
Taxonomy parse_generic_taxonomy(std::string id, std::span<const TaxonomyEdge> edges,
                                TaxonomyOptions options = {});

// Reads `child<TAB>parent` lines (UTF-8, '#' comments, blank lines ignored).
// An optional third column carries the child's description.
Taxonomy parse_generic_taxonomy_tsv(std::string id, std::string_view text,
                                    TaxonomyOptions options = {});

// Edge list of an existing taxonomy, children sorted by code, for writing TSV.
std::vector<TaxonomyEdge> taxonomy_edges(const Taxonomy& tax);
std::string to_tsv(const Taxonomy& tax);

enum class SimilarityKind { kSanchez, kBoolean };

std::string_view to_string(SimilarityKind kind);
SimilarityKind parse_similarity_kind(std::string_view text);

// 1 iff the codes are identical.
inline double sim_boolean(std::string_view a, std::string_view b) { return a == b ? 1.0 : 0.0; }

// Code-level similarity bound to one taxonomy, extended to the END sentinel:
// sim(END, END) = 1 and sim(END, x) = 0.
class CodeSimilarity {
 public:
  CodeSimilarity(const Taxonomy& tax, SimilarityKind kind) : tax_(&tax), kind_(kind) {}

  // Throws UnknownConcept for codes outside the taxonomy (END excepted).
  double operator()(std::string_view a, std::string_view b) const;

  const Taxonomy& taxonomy() const { return *tax_; }
  SimilarityKind kind() const { return kind_; }

 private:
  const Taxonomy* tax_;
  SimilarityKind kind_;
};

}  // namespace taxonap
