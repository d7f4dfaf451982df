#pragma once

// Alignment -> norm -> deviation features, for one or more pieces.

#include <span>
#include <vector>

#include "perfid/alignment.h"
#include "perfid/evaluation.h"
#include "perfid/features.h"

namespace perfid {

struct PreparedData {
  AlignedNoteTable table;
  std::vector<AlignmentReport> alignment;  // one per piece
  NormPerformance norm;
  std::vector<PerformerFeatures> features;

  Dataset dataset() const { return make_dataset(features, table.n_positions()); }
};

/// `pieces[i]` holds every performer's rendition of piece i. Each piece is
/// aligned separately and the tables are concatenated, so IOI/OTD never span
/// two pieces. Performers are matched across pieces by id; the first piece
/// fixes the column order. Throws InvalidInput if the performer sets differ.
PreparedData prepare(const std::vector<std::vector<Performance>>& pieces,
                     const ReferencePolicy& policy = {}, const TableOptions& options = {},
                     std::span<const FeatureKind> kinds = kAllFeatures);

}  // namespace perfid
