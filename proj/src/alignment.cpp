#include "perfid/alignment.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "perfid/errors.h"
#include "perfid/parallel.h"

namespace perfid {

namespace {

enum Step : std::uint8_t { kPair = 0, kDelete = 1, kInsert = 2 };

// Two bits per DP cell.
class StepMatrix {
 public:
  StepMatrix(std::size_t rows, std::size_t cols)
      : cols_(cols), bits_((rows * cols + 3) / 4, 0) {}

  void set(std::size_t r, std::size_t c, Step s) {
    const std::size_t k = r * cols_ + c;
    bits_[k / 4] |= static_cast<std::uint8_t>(s << (2 * (k % 4)));
  }
  Step get(std::size_t r, std::size_t c) const {
    const std::size_t k = r * cols_ + c;
    return static_cast<Step>((bits_[k / 4] >> (2 * (k % 4))) & 3);
  }

 private:
  std::size_t cols_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace

NoteAlignment align_pair(const Performance& reference, const Performance& performance,
                         const AlignmentCosts& costs) {
  const auto& ref = reference.notes;
  const auto& perf = performance.notes;
  if (ref.empty() || perf.empty()) throw InvalidInput("align_pair needs non-empty performances");
  const std::size_t n = ref.size();
  const std::size_t m = perf.size();

  StepMatrix steps(n + 1, m + 1);
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    prev[j] = static_cast<double>(j) * costs.insertion;
    if (j > 0) steps.set(0, j, kInsert);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<double>(i) * costs.deletion;
    steps.set(i, 0, kDelete);
    const int ref_pitch = ref[i - 1].pitch;
    for (std::size_t j = 1; j <= m; ++j) {
      const double pair = prev[j - 1] + (perf[j - 1].pitch == ref_pitch ? 0.0 : costs.substitution);
      const double del = prev[j] + costs.deletion;
      const double ins = cur[j - 1] + costs.insertion;
      double best = pair;
      Step step = kPair;
      if (del < best) {
        best = del;
        step = kDelete;
      }
      if (ins < best) {
        best = ins;
        step = kInsert;
      }
      cur[j] = best;
      if (step != kPair) steps.set(i, j, step);
    }
    std::swap(prev, cur);
  }

  NoteAlignment result;
  result.cost = prev[m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (steps.get(i, j)) {
      case kPair:
        --i;
        --j;
        result.pairs.emplace_back(i, j);
        if (ref[i].pitch != perf[j].pitch) ++result.substitutions;
        break;
      case kDelete:
        result.deletions.push_back(--i);
        break;
      case kInsert:
        result.insertions.push_back(--j);
        break;
    }
  }
  std::reverse(result.pairs.begin(), result.pairs.end());
  std::reverse(result.insertions.begin(), result.insertions.end());
  std::reverse(result.deletions.begin(), result.deletions.end());
  return result;
}

std::size_t AlignedNoteTable::coverage(std::size_t position) const {
  std::size_t count = 0;
  for (const auto& column : columns) count += column[position].has_value();
  return count;
}

BuiltTable build_table(const std::vector<Performance>& performances, const ReferencePolicy& policy,
                       const TableOptions& options) {
  if (performances.size() < 2) throw InvalidInput("build_table needs at least two performances");
  for (const Performance& p : performances)
    if (p.notes.empty()) throw InvalidInput("performance '" + p.performer_id + "' has no notes");

  const Performance* reference = nullptr;
  if (policy.kind == ReferencePolicy::Kind::kExplicit) {
    if (!policy.reference || policy.reference->notes.empty())
      throw InvalidInput("explicit reference policy needs a non-empty reference");
    reference = &*policy.reference;
  } else {
    std::vector<std::size_t> order(performances.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& pa = performances[a];
      const auto& pb = performances[b];
      if (pa.notes.size() != pb.notes.size()) return pa.notes.size() < pb.notes.size();
      return pa.performer_id < pb.performer_id;
    });
    reference = &performances[order[(order.size() - 1) / 2]];
  }

  std::vector<NoteAlignment> alignments(performances.size());
  parallel_for(performances.size(), options.jobs, [&](std::size_t k) {
    alignments[k] = align_pair(*reference, performances[k], options.costs);
  });

  const std::size_t n_ref = reference->notes.size();
  std::vector<std::vector<std::optional<NoteEvent>>> full(
      performances.size(), std::vector<std::optional<NoteEvent>>(n_ref));
  std::vector<std::size_t> coverage(n_ref, 0);
  BuiltTable out;
  out.report.reference_id = reference->performer_id;
  out.report.reference_notes = n_ref;
  for (std::size_t k = 0; k < performances.size(); ++k) {
    for (const auto& [r, p] : alignments[k].pairs) {
      full[k][r] = performances[k].notes[p];
      ++coverage[r];
    }
    out.report.performers.push_back({performances[k].performer_id, alignments[k].pairs.size(),
                                     alignments[k].substitutions, alignments[k].insertions.size(),
                                     alignments[k].deletions.size()});
  }

  AlignedNoteTable& table = out.table;
  table.columns.resize(performances.size());
  for (const Performance& p : performances) table.performer_ids.push_back(p.performer_id);
  for (std::size_t r = 0; r < n_ref; ++r) {
    if (coverage[r] < options.min_coverage) {
      out.report.dropped_positions.push_back(r);
      continue;
    }
    for (std::size_t k = 0; k < performances.size(); ++k) table.columns[k].push_back(full[k][r]);
  }
  return out;
}

AlignedNoteTable concatenate(const std::vector<AlignedNoteTable>& tables) {
  if (tables.empty()) throw InvalidInput("nothing to concatenate");
  AlignedNoteTable out;
  out.performer_ids = tables.front().performer_ids;
  out.columns.resize(out.performer_ids.size());
  out.segment_starts.clear();
  for (const AlignedNoteTable& t : tables) {
    if (t.performer_ids != out.performer_ids)
      throw InvalidInput("tables to concatenate must list the same performers in the same order");
    const std::size_t base = out.n_positions();
    for (std::size_t s : t.segment_starts)
      if (s < t.n_positions()) out.segment_starts.push_back(base + s);
    for (std::size_t k = 0; k < t.columns.size(); ++k)
      out.columns[k].insert(out.columns[k].end(), t.columns[k].begin(), t.columns[k].end());
  }
  out.segment_starts.erase(std::unique(out.segment_starts.begin(), out.segment_starts.end()),
                           out.segment_starts.end());
  if (out.segment_starts.empty() || out.segment_starts.front() != 0)
    out.segment_starts.insert(out.segment_starts.begin(), 0);
  return out;
}

void validate(const AlignedNoteTable& table) {
  if (table.columns.size() != table.performer_ids.size())
    throw InvalidInput("table has mismatched performer labels and columns");
  const std::size_t n = table.n_positions();
  for (const auto& column : table.columns)
    if (column.size() != n) throw InvalidInput("table columns differ in length");
  if (table.segment_starts.empty() || table.segment_starts.front() != 0 ||
      !std::is_sorted(table.segment_starts.begin(), table.segment_starts.end()))
    throw InvalidInput("segment starts must begin at 0 and increase");
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    const auto& column = table.columns[k];
    std::size_t seg = 0;
    std::optional<double> last;
    for (std::size_t pos = 0; pos < n; ++pos) {
      while (seg + 1 < table.segment_starts.size() && table.segment_starts[seg + 1] <= pos) {
        ++seg;
        last.reset();
      }
      if (!column[pos]) continue;
      if (last && column[pos]->onset < *last)
        throw InvalidInput("column '" + table.performer_ids[k] + "' onsets decrease at position " +
                           std::to_string(pos));
      last = column[pos]->onset;
    }
  }
}

std::string to_table_csv(const AlignedNoteTable& table) {
  std::string out = "segment,position,performer,onset,offset,pitch,dynamic\n";
  std::size_t seg = 0;
  char buf[96];
  for (std::size_t pos = 0; pos < table.n_positions(); ++pos) {
    while (seg + 1 < table.segment_starts.size() && table.segment_starts[seg + 1] <= pos) ++seg;
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
      const auto& cell = table.columns[k][pos];
      if (!cell) continue;
      std::snprintf(buf, sizeof buf, "%zu,%zu,", seg, pos);
      out += buf;
      out += table.performer_ids[k];
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d,%d\n", cell->onset, cell->offset, cell->pitch,
                    cell->dynamic);
      out += buf;
    }
  }
  return out;
}

AlignedNoteTable from_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty aligned table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "segment,position,performer,onset,offset,pitch,dynamic")
    throw InvalidInput("aligned table has an unexpected header");

  struct Row {
    std::size_t segment, position, performer;
    NoteEvent note;
  };
  std::vector<Row> rows;
  std::map<std::string, std::size_t> index;
  AlignedNoteTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
    if (f.size() != 7)
      throw InvalidInput("aligned table line " + std::to_string(line_no) + ": expected 7 fields");
    auto [it, inserted] = index.emplace(f[2], table.performer_ids.size());
    if (inserted) table.performer_ids.push_back(f[2]);
    try {
      rows.push_back({std::stoul(f[0]), std::stoul(f[1]), it->second,
                      {std::stod(f[3]), std::stod(f[4]), std::stoi(f[5]), std::stoi(f[6])}});
    } catch (const std::exception&) {
      throw InvalidInput("aligned table line " + std::to_string(line_no) + ": bad number");
    }
  }
  std::size_t n = 0;
  for (const Row& r : rows) n = std::max(n, r.position + 1);
  table.columns.assign(table.performer_ids.size(), std::vector<std::optional<NoteEvent>>(n));
  std::map<std::size_t, std::size_t> first_of_segment;
  for (const Row& r : rows) {
    table.columns[r.performer][r.position] = r.note;
    auto [it, inserted] = first_of_segment.emplace(r.segment, r.position);
    if (!inserted) it->second = std::min(it->second, r.position);
  }
  table.segment_starts.clear();
  for (const auto& [seg, first] : first_of_segment) table.segment_starts.push_back(first);
  std::sort(table.segment_starts.begin(), table.segment_starts.end());
  if (table.segment_starts.empty() || table.segment_starts.front() != 0)
    table.segment_starts.insert(table.segment_starts.begin(), 0);
  validate(table);
  return table;
}

}  // namespace perfid
