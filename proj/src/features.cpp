#include "perfid/features.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "perfid/errors.h"
#include "perfid/parallel.h"

namespace perfid {

std::string_view feature_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kOT:
      return "OT";
    case FeatureKind::kIOI:
      return "IOI";
    case FeatureKind::kOTD:
      return "OTD";
    case FeatureKind::kDL:
      return "DL";
    case FeatureKind::kND:
      return "ND";
  }
  return "?";
}

std::optional<FeatureKind> parse_feature(std::string_view name) {
  for (FeatureKind k : kAllFeatures)
    if (feature_name(k) == name) return k;
  return std::nullopt;
}

NoteStream column_stream(const AlignedNoteTable& table, std::size_t performer) {
  NoteStream s;
  s.segment_starts = table.segment_starts;
  s.notes.reserve(table.n_positions());
  for (const auto& cell : table.columns.at(performer)) {
    if (cell)
      s.notes.push_back(StreamNote{cell->onset, cell->offset, static_cast<double>(cell->dynamic)});
    else
      s.notes.push_back(std::nullopt);
  }
  return s;
}

NoteStream NormPerformance::stream() const {
  NoteStream s;
  s.segment_starts = segment_starts;
  s.notes.reserve(size());
  for (std::size_t i = 0; i < size(); ++i)
    s.notes.push_back(StreamNote{mean_onset[i], mean_offset[i], mean_dynamic[i]});
  return s;
}

NormPerformance compute_norm(const AlignedNoteTable& table, std::size_t min_coverage) {
  validate(table);
  NormPerformance norm;
  norm.segment_starts = table.segment_starts;
  const std::size_t n = table.n_positions();
  norm.mean_onset.resize(n);
  norm.mean_offset.resize(n);
  norm.mean_dynamic.resize(n);
  norm.coverage.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    double onset = 0.0, offset = 0.0, dynamic = 0.0;
    std::size_t count = 0;
    for (const auto& column : table.columns) {
      if (!column[pos]) continue;
      onset += column[pos]->onset;
      offset += column[pos]->offset;
      dynamic += column[pos]->dynamic;
      ++count;
    }
    if (count < std::max<std::size_t>(min_coverage, 1))
      throw InvalidInput("position " + std::to_string(pos) + " has coverage " +
                         std::to_string(count) + " below " + std::to_string(min_coverage));
    const double c = static_cast<double>(count);
    norm.mean_onset[pos] = onset / c;
    norm.mean_offset[pos] = offset / c;
    norm.mean_dynamic[pos] = dynamic / c;
    norm.coverage[pos] = count;
  }
  return norm;
}

namespace {

double point_value(const StreamNote& n, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kOT:
      return n.onset;
    case FeatureKind::kDL:
      return n.dynamic;
    case FeatureKind::kND:
      return n.offset - n.onset;
    default:
      break;
  }
  throw InvalidInput("not a single-note feature");
}

double interval_value(const StreamNote& a, const StreamNote& b, FeatureKind kind) {
  return kind == FeatureKind::kIOI ? b.onset - a.onset : b.onset - a.offset;
}

}  // namespace

QuantitySeries derive_quantity(const NoteStream& stream, FeatureKind kind) {
  QuantitySeries q;
  q.kind = kind;
  const auto& notes = stream.notes;
  if (!is_interval_kind(kind)) {
    for (std::size_t i = 0; i < notes.size(); ++i) {
      if (!notes[i]) continue;
      q.positions.push_back(i);
      q.ends.push_back(i);
      q.values.push_back(point_value(*notes[i], kind));
    }
    return q;
  }
  std::vector<std::size_t> bounds = stream.segment_starts;
  bounds.push_back(notes.size());
  for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
    std::optional<std::size_t> prev;
    for (std::size_t i = bounds[seg]; i < std::min(bounds[seg + 1], notes.size()); ++i) {
      if (!notes[i]) continue;
      if (prev) {
        q.positions.push_back(*prev);
        q.ends.push_back(i);
        q.values.push_back(interval_value(*notes[*prev], *notes[i], kind));
      }
      prev = i;
    }
  }
  return q;
}

QuantitySeries derive_quantity_at(const NoteStream& stream, const QuantitySeries& layout) {
  QuantitySeries q;
  q.kind = layout.kind;
  const auto& notes = stream.notes;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const std::size_t i = layout.positions[k];
    const std::size_t j = layout.ends[k];
    if (i >= notes.size() || j >= notes.size() || !notes[i] || !notes[j]) continue;
    q.positions.push_back(i);
    q.ends.push_back(j);
    q.values.push_back(is_interval_kind(layout.kind) ? interval_value(*notes[i], *notes[j], layout.kind)
                                                     : point_value(*notes[i], layout.kind));
  }
  return q;
}

double simple_absolute_distance(double x, double y) { return std::abs(x) - std::abs(y); }

double feature_distance(FeatureKind kind, double norm_value, double performer_value) {
  return is_interval_kind(kind) ? simple_absolute_distance(norm_value, performer_value)
                                : simple_distance(norm_value, performer_value);
}

DeviationSeries deviations(const QuantitySeries& norm, const QuantitySeries& performer) {
  if (norm.kind != performer.kind)
    throw InvalidInput("deviation streams carry different feature kinds (" +
                       std::string(feature_name(norm.kind)) + " vs " +
                       std::string(feature_name(performer.kind)) + ")");
  DeviationSeries d;
  d.kind = norm.kind;
  std::size_t a = 0, b = 0;
  auto key = [](const QuantitySeries& q, std::size_t k) {
    return std::pair(q.positions[k], q.ends[k]);
  };
  while (a < norm.size() && b < performer.size()) {
    const auto ka = key(norm, a);
    const auto kb = key(performer, b);
    if (ka < kb) {
      ++a;
    } else if (kb < ka) {
      ++b;
    } else {
      d.positions.push_back(ka.first);
      d.ends.push_back(ka.second);
      d.values.push_back(feature_distance(d.kind, norm.values[a], performer.values[b]));
      ++a;
      ++b;
    }
  }
  return d;
}

DeviationSeries performer_deviations(const NoteStream& norm, const NoteStream& performer,
                                     FeatureKind kind, std::string performer_id) {
  const QuantitySeries y = derive_quantity(performer, kind);
  const QuantitySeries x = derive_quantity_at(norm, y);
  DeviationSeries d = deviations(x, y);
  d.performer_id = std::move(performer_id);
  return d;
}

std::vector<PerformerFeatures> extract_features(const AlignedNoteTable& table,
                                                const NormPerformance& norm,
                                                std::span<const FeatureKind> kinds,
                                                unsigned jobs) {
  if (norm.size() != table.n_positions())
    throw InvalidInput("norm and table disagree on the number of positions");
  const NoteStream norm_stream = norm.stream();
  std::vector<PerformerFeatures> out(table.n_performers());
  parallel_for(table.n_performers(), jobs, [&](std::size_t k) {
    const NoteStream column = column_stream(table, k);
    out[k].performer_id = table.performer_ids[k];
    for (FeatureKind kind : kinds)
      out[k].series[kind] = performer_deviations(norm_stream, column, kind, table.performer_ids[k]);
  });
  return out;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("pearson_r needs equal-length series");
  if (a.size() < 2) throw InvalidInput("pearson_r needs at least two values");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedCorrelation("correlation of a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::pair<std::vector<double>, std::vector<double>> paired_values(const DeviationSeries& a,
                                                                  const DeviationSeries& b) {
  std::pair<std::vector<double>, std::vector<double>> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.positions[i] < b.positions[j]) {
      ++i;
    } else if (b.positions[j] < a.positions[i]) {
      ++j;
    } else {
      out.first.push_back(a.values[i++]);
      out.second.push_back(b.values[j++]);
    }
  }
  return out;
}

std::string to_feature_csv(const std::vector<PerformerFeatures>& features) {
  std::string out = "performer,kind,position,value\n";
  char buf[64];
  for (const PerformerFeatures& pf : features) {
    for (FeatureKind kind : kAllFeatures) {
      auto it = pf.series.find(kind);
      if (it == pf.series.end()) continue;
      const DeviationSeries& s = it->second;
      for (std::size_t k = 0; k < s.size(); ++k) {
        out += pf.performer_id;
        out += ',';
        out += feature_name(kind);
        std::snprintf(buf, sizeof buf, ",%zu,%.17g\n", s.positions[k], s.values[k]);
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace perfid
