#pragma once

// Norm performance and per-note deviation features.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfid/alignment.h"

namespace perfid {

enum class FeatureKind { kOT, kIOI, kOTD, kDL, kND };

inline constexpr std::array<FeatureKind, 5> kAllFeatures = {
    FeatureKind::kOT, FeatureKind::kIOI, FeatureKind::kOTD, FeatureKind::kDL, FeatureKind::kND};

std::string_view feature_name(FeatureKind kind);

/// Parses "OT", "IOI", "OTD", "DL" or "ND" (case-sensitive).
std::optional<FeatureKind> parse_feature(std::string_view name);

/// IOI and OTD are measured between a note and its successor.
constexpr bool is_interval_kind(FeatureKind kind) {
  return kind == FeatureKind::kIOI || kind == FeatureKind::kOTD;
}

/// One stream entry; dynamic is real-valued so a mean can be represented.
struct StreamNote {
  double onset = 0.0;
  double offset = 0.0;
  double dynamic = 0.0;
};

/// A performer column or the norm, indexed by aligned position.
struct NoteStream {
  std::vector<std::optional<StreamNote>> notes;
  std::vector<std::size_t> segment_starts{0};
};

NoteStream column_stream(const AlignedNoteTable& table, std::size_t performer);

struct NormPerformance {
  std::vector<double> mean_onset;
  std::vector<double> mean_offset;
  std::vector<double> mean_dynamic;
  std::vector<std::size_t> coverage;
  std::vector<std::size_t> segment_starts{0};

  std::size_t size() const { return mean_onset.size(); }
  NoteStream stream() const;
};

/// Per-position arithmetic mean over the present cells. Throws InvalidInput
/// if a position has fewer than `min_coverage` performers.
NormPerformance compute_norm(const AlignedNoteTable& table, std::size_t min_coverage = 2);

/// Values of one feature kind keyed by aligned position. For IOI/OTD,
/// `ends[i]` is the successor position the value was measured to; for the
/// other kinds it equals `positions[i]`.
struct QuantitySeries {
  FeatureKind kind = FeatureKind::kOT;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> ends;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// OT = onset, DL = dynamic, ND = offset - onset, IOI = next onset - onset,
/// OTD = next onset - offset. The successor is the next present note in the
/// same segment; nothing is measured across a segment boundary.
QuantitySeries derive_quantity(const NoteStream& stream, FeatureKind kind);

/// Measures `stream` at exactly the (position, end) pairs of `layout`,
/// skipping pairs where the stream lacks a note.
QuantitySeries derive_quantity_at(const NoteStream& stream, const QuantitySeries& layout);

/// x - y
inline double simple_distance(double x, double y) { return x - y; }
/// |x| - |y|
double simple_absolute_distance(double x, double y);

/// The metric applied to each kind: simple for OT/DL/ND, simple absolute for
/// IOI/OTD.
double feature_distance(FeatureKind kind, double norm_value, double performer_value);

struct DeviationSeries {
  FeatureKind kind = FeatureKind::kOT;
  std::string performer_id;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> ends;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

/// d(norm, performer) at every key present in both series. The norm is the
/// first argument of the metric. Throws InvalidInput on a kind mismatch.
DeviationSeries deviations(const QuantitySeries& norm, const QuantitySeries& performer);

/// Derives the performer's quantity, measures the norm over the same note
/// pairs, and returns their deviation.
DeviationSeries performer_deviations(const NoteStream& norm, const NoteStream& performer,
                                     FeatureKind kind, std::string performer_id = {});

struct PerformerFeatures {
  std::string performer_id;
  std::map<FeatureKind, DeviationSeries> series;
};

std::vector<PerformerFeatures> extract_features(const AlignedNoteTable& table,
                                                const NormPerformance& norm,
                                                std::span<const FeatureKind> kinds,
                                                unsigned jobs = 1);

/// Sample Pearson correlation. Throws InvalidInput for unequal lengths or
/// fewer than two values, UndefinedCorrelation for a constant input.
double pearson_r(std::span<const double> a, std::span<const double> b);

/// Values of `a` and `b` at positions present in both, in position order.
std::pair<std::vector<double>, std::vector<double>> paired_values(const DeviationSeries& a,
                                                                  const DeviationSeries& b);

/// Feature dump: `performer,kind,position,value`.
std::string to_feature_csv(const std::vector<PerformerFeatures>& features);

}  // namespace perfid
