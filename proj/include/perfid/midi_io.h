#pragma once

// Standard MIDI File reading/writing and the note-table CSV interchange format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace perfid {

/// One performed note. Times are in seconds.
struct NoteEvent {
  double onset = 0.0;
  double offset = 0.0;
  int pitch = 0;
  int dynamic = 0;  // MIDI velocity

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Ordering used everywhere notes are sequenced: onset, then pitch.
inline bool note_order(const NoteEvent& a, const NoteEvent& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  return a.pitch < b.pitch;
}

struct Performance {
  std::string performer_id;
  std::string piece_id;
  std::vector<NoteEvent> notes;

  friend bool operator==(const Performance&, const Performance&) = default;
};

/// Sorts notes into (onset, pitch) order. Stable for full ties.
void sort_notes(Performance& performance);

/// Throws InvalidInput if a note breaks the NoteEvent invariants or the
/// notes are out of order.
void validate(const Performance& performance);

struct SmfParseResult {
  Performance performance;
  std::vector<std::string> warnings;
};

/// Parses a format 0 or 1 Standard MIDI File. Tempo changes from every track
/// form one tempo map (120 BPM until the first set-tempo event). Note-on with
/// velocity 0 closes a note; repeated note-ons of one pitch are closed first
/// in, first out. Sustain pedal is ignored. Throws ParseError on malformed
/// chunks.
SmfParseResult parse_smf(std::span<const std::uint8_t> bytes);

SmfParseResult read_smf_file(const std::filesystem::path& path);

/// Piecewise-linear tick to seconds conversion.
class TempoMap {
 public:
  /// `division` is ticks per quarter note. An empty change list means
  /// 500000 us per quarter throughout.
  struct Change {
    std::int64_t tick;
    std::uint32_t us_per_quarter;
  };

  TempoMap(int division, std::vector<Change> changes);

  double seconds(std::int64_t tick) const;

 private:
  struct Segment {
    std::int64_t tick;
    double start_seconds;
    double seconds_per_tick;
  };
  std::vector<Segment> segments_;
};

/// Settings for SMF output. Notes are snapped to the tick grid.
struct SmfWriteOptions {
  int division = 960;
  std::uint32_t us_per_quarter = 500000;
};

/// Rounds every onset/offset onto the writer's tick grid using the same
/// conversion the parser applies, so the result re-parses bit-exactly.
/// Offsets are kept at least one tick after their onsets.
Performance quantize_to_ticks(const Performance& performance, const SmfWriteOptions& options = {});

/// Writes a format 0 SMF (single channel, constant tempo).
std::vector<std::uint8_t> write_smf(const Performance& performance,
                                    const SmfWriteOptions& options = {});

/// Note-table CSV: header `onset,offset,pitch,dynamic`, LF line endings.
/// Times use 17 significant digits so the text round-trips exactly.
std::string to_note_table(const Performance& performance);

/// Parses a note table produced by to_note_table. Throws InvalidInput on
/// malformed rows.
Performance from_note_table(const std::string& text, std::string performer_id = {},
                            std::string piece_id = {});

}  // namespace perfid
