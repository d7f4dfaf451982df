#pragma once

// Note-to-note correspondence between performances of one piece.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfid/midi_io.h"

namespace perfid {

struct AlignmentCosts {
  double substitution = 1.0;
  double insertion = 0.6;  // performance note with no reference partner
  double deletion = 0.6;   // reference note the performance skipped
};

struct NoteAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (reference, performance)
  std::vector<std::size_t> insertions;                     // performance indices
  std::vector<std::size_t> deletions;                      // reference indices
  std::size_t substitutions = 0;                           // pairs whose pitches differ
  double cost = 0.0;
};

/// Global edit-distance alignment of the two pitch sequences. Exact DP
/// optimum; ties resolve in favour of pairing, then deletion, then insertion.
/// Throws InvalidInput if either performance is empty.
NoteAlignment align_pair(const Performance& reference, const Performance& performance,
                         const AlignmentCosts& costs = {});

/// How build_table picks the reference note sequence.
struct ReferencePolicy {
  enum class Kind { kMedianLength, kExplicit };
  Kind kind = Kind::kMedianLength;
  std::optional<Performance> reference;  // used when kind == kExplicit

  static ReferencePolicy median_length() { return {}; }
  static ReferencePolicy explicit_reference(Performance score) {
    return {Kind::kExplicit, std::move(score)};
  }
};

struct TableOptions {
  AlignmentCosts costs;
  std::size_t min_coverage = 2;
  unsigned jobs = 1;
};

/// Aligned position x performer -> optional performed note. Columns are
/// performers in input order. `segment_starts` marks the first position of
/// each concatenated piece (always begins with 0).
struct AlignedNoteTable {
  std::vector<std::string> performer_ids;
  std::vector<std::vector<std::optional<NoteEvent>>> columns;  // [performer][position]
  std::vector<std::size_t> segment_starts{0};

  std::size_t n_positions() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t n_performers() const { return columns.size(); }
  std::size_t coverage(std::size_t position) const;
};

struct PerformerAlignmentStats {
  std::string performer_id;
  std::size_t pairs = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
};

struct AlignmentReport {
  std::string reference_id;
  std::size_t reference_notes = 0;
  std::vector<PerformerAlignmentStats> performers;
  std::vector<std::size_t> dropped_positions;  // reference indices below min_coverage
};

struct BuiltTable {
  AlignedNoteTable table;
  AlignmentReport report;
};

/// Aligns every performance to the reference and keeps positions matched by
/// at least `min_coverage` performers. Throws InvalidInput for fewer than two
/// performances or an empty one.
BuiltTable build_table(const std::vector<Performance>& performances,
                       const ReferencePolicy& policy = {}, const TableOptions& options = {});

/// Joins tables of successive pieces (movements) that share performers.
AlignedNoteTable concatenate(const std::vector<AlignedNoteTable>& tables);

/// Throws InvalidInput if a column's onsets decrease or shapes disagree.
void validate(const AlignedNoteTable& table);

/// Long-format CSV: `segment,position,performer,onset,offset,pitch,dynamic`,
/// one row per present cell.
std::string to_table_csv(const AlignedNoteTable& table);
AlignedNoteTable from_table_csv(const std::string& text);

}  // namespace perfid
