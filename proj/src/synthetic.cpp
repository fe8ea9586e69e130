#include "taxonap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "taxonap/errors.hpp"

namespace taxonap {

namespace {

// Diagnoses: ROOT > category (K50..K53) > subcategory (K500..) > leaf
// (K500A..). Primaries come from K50, one subcategory per pathway.
constexpr std::array<const char*, 4> kCategories = {"K50", "K51", "K52", "K53"};

// Procedures: ROOT > section > group (4 per section) > leaf. Pathway p owns
// section 'A' + p; section Z holds procedures shared by every pathway.
constexpr int kGroupsPerSection = 4;
constexpr char kSharedSection = 'Z';

void check(const SyntheticOptions& o) {
  if (o.pathways < 1 || o.pathways > 10) throw InvalidArgument("pathways must lie in 1..10");
  if (o.leaf_fanout < 2 || o.leaf_fanout > 26) throw InvalidArgument("leaf_fanout must lie in 2..26");
  if (o.cases < 2) throw InvalidArgument("synthetic log needs at least two cases");
}

std::string group_code(char section, int group) { return std::string{section, static_cast<char>('0' + group)}; }

std::string with_leaf(std::string parent, std::size_t leaf) {
  parent += static_cast<char>('A' + leaf);
  return parent;
}

std::string case_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04zu", i + 1);
  return buf;
}

std::vector<char> sections(const SyntheticOptions& o) {
  std::vector<char> out;
  for (std::size_t p = 0; p < o.pathways; ++p) out.push_back(static_cast<char>('A' + p));
  out.push_back(kSharedSection);
  return out;
}

// Group sequences: admission (Z1), the pathway's own groups in a random
// order, shared groups interleaved.
std::vector<std::vector<std::string>> make_pathways(const SyntheticOptions& o, std::mt19937_64& rng) {
  std::bernoulli_distribution shared(0.3);
  std::uniform_int_distribution<int> shared_group(2, kGroupsPerSection);
  std::vector<std::vector<std::string>> out;
  for (std::size_t p = 0; p < o.pathways; ++p) {
    std::vector<int> own(kGroupsPerSection);
    for (int g = 0; g < kGroupsPerSection; ++g) own[g] = g + 1;
    std::shuffle(own.begin(), own.end(), rng);
    std::vector<std::string> steps{group_code(kSharedSection, 1)};
    for (int g : own) {
      steps.push_back(group_code(static_cast<char>('A' + p), g));
      if (shared(rng)) steps.push_back(group_code(kSharedSection, shared_group(rng)));
    }
    out.push_back(std::move(steps));
  }
  return out;
}

}  // namespace

std::unique_ptr<Taxonomy> synthetic_diagnosis_taxonomy(const SyntheticOptions& options) {
  check(options);
  TaxonomyBuilder b(kSyntheticDiagnosisId);
  b.add_node(kVirtualRoot, "root");
  for (const char* cat : kCategories) {
    b.add_node(cat, std::string("category ") + cat);
    b.add_edge(cat, kVirtualRoot);
    for (std::size_t s = 0; s < options.pathways; ++s) {
      const std::string sub = std::string(cat) + static_cast<char>('0' + s);
      b.add_node(sub, "subcategory " + sub);
      b.add_edge(sub, cat);
      for (std::size_t l = 0; l < options.leaf_fanout; ++l) {
        const std::string leaf = with_leaf(sub, l);
        b.add_node(leaf, "diagnosis " + leaf);
        b.add_edge(leaf, sub);
      }
    }
  }
  return std::make_unique<Taxonomy>(std::move(b).build());
}

std::unique_ptr<Taxonomy> synthetic_procedure_taxonomy(const SyntheticOptions& options) {
  check(options);
  TaxonomyBuilder b(kSyntheticProcedureId);
  b.add_node(kVirtualRoot, "root");
  for (char s : sections(options)) {
    const std::string section(1, s);
    b.add_node(section, "section " + section);
    b.add_edge(section, kVirtualRoot);
    for (int g = 1; g <= kGroupsPerSection; ++g) {
      const std::string group = group_code(s, g);
      b.add_node(group, "group " + group);
      b.add_edge(group, section);
      for (std::size_t l = 0; l < options.leaf_fanout; ++l) {
        const std::string leaf = with_leaf(group, l);
        b.add_node(leaf, "procedure " + leaf);
        b.add_edge(leaf, group);
      }
    }
  }
  return std::make_unique<Taxonomy>(std::move(b).build());
}

SyntheticWorld make_synthetic(const SyntheticOptions& options) {
  check(options);
  std::mt19937_64 rng(options.seed);
  const auto pathways = make_pathways(options, rng);

  const int fanout = static_cast<int>(options.leaf_fanout);
  std::bernoulli_distribution near_miss(options.near_miss);
  std::bernoulli_distribution skip(options.skip);
  std::bernoulli_distribution off_pathway(options.off_pathway);
  std::uniform_int_distribution<int> sibling_step(1, fanout - 1);
  std::uniform_int_distribution<std::size_t> any_leaf(0, options.leaf_fanout - 1);
  std::uniform_int_distribution<std::size_t> pathway_pick(0, options.pathways - 1);
  std::uniform_int_distribution<std::size_t> secondary_count(0, options.max_secondary);
  std::uniform_int_distribution<std::size_t> other_category(1, kCategories.size() - 1);
  std::uniform_int_distribution<int> gap_minutes(30, 240);

  // Leaf 0 is canonical; a near miss takes one of its siblings.
  auto pick_leaf = [&] { return near_miss(rng) ? static_cast<std::size_t>(sibling_step(rng)) : 0; };

  std::vector<DiagnosisRecord> diagnoses;
  std::vector<ProcedureRecord> procedures;
  const Timestamp base = parse_timestamp("2021-01-01T00:00:00");

  for (std::size_t i = 0; i < options.cases; ++i) {
    const std::string id = case_id(i);
    const std::size_t subcategory = pathway_pick(rng);
    const std::string primary = with_leaf(std::string(kCategories[0]) + static_cast<char>('0' + subcategory), pick_leaf());
    diagnoses.push_back({id, primary, 1});
    const std::size_t extra = secondary_count(rng);
    for (std::size_t s = 0; s < extra; ++s) {
      const std::string sub = std::string(kCategories[other_category(rng)]) + static_cast<char>('0' + pathway_pick(rng));
      diagnoses.push_back({id, with_leaf(sub, any_leaf(rng)), static_cast<int>(s + 2)});
    }

    const std::size_t pathway = off_pathway(rng) ? pathway_pick(rng) : subcategory;
    Timestamp ts = base + static_cast<Timestamp>(i) * 6 * 3600;
    int seq = 0;
    for (const auto& group : pathways[pathway]) {
      if (seq > 0 && skip(rng)) continue;
      ts += gap_minutes(rng) * 60;
      procedures.push_back({id, with_leaf(group, pick_leaf()), ts, ++seq});
    }
  }

  BuildOptions build;
  build.min_cases = 1;
  build.diagnosis_taxonomy = kSyntheticDiagnosisId;
  build.procedure_taxonomy = kSyntheticProcedureId;
  auto result = build_logs(diagnoses, procedures, build);

  SyntheticWorld world;
  world.diagnoses = synthetic_diagnosis_taxonomy(options);
  world.procedures = synthetic_procedure_taxonomy(options);
  world.log = std::move(result.logs.at(kCategories[0]));
  return world;
}

}  // namespace taxonap
