#pragma once

#include <cstdint>
#include <memory>

#include "taxonap/eventlog.hpp"
#include "taxonap/taxonomy.hpp"

namespace taxonap {

// Generator settings for a small clinical-looking world: three-level
// diagnosis and procedure taxonomies, and cases that follow one of several
// pathway templates keyed on the primary diagnosis subcategory.
struct SyntheticOptions {
  std::size_t cases = 200;
  std::uint64_t seed = 1;
  // Pathway templates (1..10); each owns one procedure section and one
  // diagnosis subcategory.
  std::size_t pathways = 4;
  // Leaves per procedure group and per diagnosis subcategory (2..26).
  std::size_t leaf_fanout = 4;
  // Probability that a pathway step uses a sibling of its canonical leaf.
  double near_miss = 0.3;
  // Probability that a pathway step is skipped.
  double skip = 0.1;
  // Probability that a case ignores its diagnosis-keyed pathway.
  double off_pathway = 0.15;
  std::size_t max_secondary = 3;
};

struct SyntheticWorld {
  std::unique_ptr<Taxonomy> diagnoses;
  std::unique_ptr<Taxonomy> procedures;
  EventLog log;
};

inline constexpr const char* kSyntheticDiagnosisId = "synth-dx";
inline constexpr const char* kSyntheticProcedureId = "synth-px";

std::unique_ptr<Taxonomy> synthetic_diagnosis_taxonomy(const SyntheticOptions& options = {});
std::unique_ptr<Taxonomy> synthetic_procedure_taxonomy(const SyntheticOptions& options = {});

// Deterministic for fixed options (std::mt19937_64 seeded from `seed`).
SyntheticWorld make_synthetic(const SyntheticOptions& options = {});

}  // namespace taxonap
