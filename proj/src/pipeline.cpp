#include "perfid/pipeline.h"

#include <algorithm>

#include "perfid/errors.h"

namespace perfid {

PreparedData prepare(const std::vector<std::vector<Performance>>& pieces,
                     const ReferencePolicy& policy, const TableOptions& options,
                     std::span<const FeatureKind> kinds) {
  if (pieces.empty()) throw InvalidInput("no pieces to prepare");
  if (policy.kind == ReferencePolicy::Kind::kExplicit && pieces.size() > 1)
    throw InvalidInput("an explicit reference applies to a single piece only");

  std::vector<std::string> order;
  for (const Performance& p : pieces.front()) order.push_back(p.performer_id);

  PreparedData out;
  std::vector<AlignedNoteTable> tables;
  for (const auto& piece : pieces) {
    if (piece.size() != order.size())
      throw InvalidInput("every piece needs the same performers");
    std::vector<Performance> sorted;
    for (const std::string& id : order) {
      auto it = std::find_if(piece.begin(), piece.end(),
                             [&](const Performance& p) { return p.performer_id == id; });
      if (it == piece.end()) throw InvalidInput("performer '" + id + "' is missing from a piece");
      sorted.push_back(*it);
    }
    BuiltTable built = build_table(sorted, policy, options);
    tables.push_back(std::move(built.table));
    out.alignment.push_back(std::move(built.report));
  }
  out.table = tables.size() == 1 ? std::move(tables.front()) : concatenate(tables);
  out.norm = compute_norm(out.table, options.min_coverage);
  out.features = extract_features(out.table, out.norm, kinds, options.jobs);
  return out;
}

}  // namespace perfid
