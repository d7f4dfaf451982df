#include "perfid/midi_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <utility>

#include "perfid/errors.h"

namespace perfid {

void sort_notes(Performance& performance) {
  std::stable_sort(performance.notes.begin(), performance.notes.end(), note_order);
}

void validate(const Performance& performance) {
  const auto& notes = performance.notes;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const NoteEvent& n = notes[i];
    const std::string where = "note " + std::to_string(i) + " of '" + performance.performer_id + "'";
    if (!std::isfinite(n.onset) || !std::isfinite(n.offset) || n.onset < 0.0)
      throw InvalidInput(where + ": onset must be finite and non-negative");
    if (!(n.offset > n.onset)) throw InvalidInput(where + ": offset must follow onset");
    if (n.pitch < 0 || n.pitch > 127) throw InvalidInput(where + ": pitch outside 0..127");
    if (n.dynamic < 1 || n.dynamic > 127) throw InvalidInput(where + ": dynamic outside 1..127");
    if (i > 0 && note_order(n, notes[i - 1]))
      throw InvalidInput(where + ": notes not sorted by (onset, pitch)");
  }
}

// ---------------------------------------------------------------------------
// Tempo map

TempoMap::TempoMap(int division, std::vector<Change> changes) {
  if (division <= 0) throw InvalidInput("MIDI division must be positive");
  std::stable_sort(changes.begin(), changes.end(),
                   [](const Change& a, const Change& b) { return a.tick < b.tick; });
  const double ticks_per_quarter_us = static_cast<double>(division) * 1e6;
  if (changes.empty() || changes.front().tick > 0) changes.insert(changes.begin(), {0, 500000});

  // Several changes on one tick: the last one wins.
  std::vector<Change> merged;
  for (const Change& c : changes) {
    if (!merged.empty() && merged.back().tick == c.tick)
      merged.back() = c;
    else
      merged.push_back(c);
  }

  double start = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (i > 0) {
      const Segment& prev = segments_.back();
      start = prev.start_seconds +
              static_cast<double>(merged[i].tick - prev.tick) * prev.seconds_per_tick;
    }
    segments_.push_back(
        {merged[i].tick, start, static_cast<double>(merged[i].us_per_quarter) / ticks_per_quarter_us});
  }
}

double TempoMap::seconds(std::int64_t tick) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                             [](std::int64_t t, const Segment& s) { return t < s.tick; });
  const Segment& seg = *std::prev(it);
  return seg.start_seconds + static_cast<double>(tick - seg.tick) * seg.seconds_per_tick;
}

// ---------------------------------------------------------------------------
// SMF reader

namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= end_; }

  std::uint8_t u8() {
    if (pos_ >= end_) throw ParseError("unexpected end of chunk", pos_);
    return bytes_[pos_++];
  }
  std::uint8_t peek() const {
    if (pos_ >= end_) throw ParseError("unexpected end of chunk", pos_);
    return bytes_[pos_];
  }
  std::uint32_t be(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    const std::size_t start = pos_;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7f);
      if ((b & 0x80) == 0) return v;
    }
    throw ParseError("variable-length quantity longer than 4 bytes", start);
  }
  void skip(std::size_t n) {
    if (n > end_ - pos_) throw ParseError("data length overruns chunk", pos_);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

struct TickNote {
  std::int64_t on;
  std::int64_t off;
  int pitch;
  int velocity;
};

struct OpenNote {
  std::int64_t tick;
  int velocity;
};

void parse_track(ByteReader& in, int track_index, std::vector<TickNote>& notes,
                 std::vector<TempoMap::Change>& tempi, std::vector<std::string>& warnings) {
  std::map<std::pair<int, int>, std::deque<OpenNote>> open;  // (channel, pitch)
  std::int64_t tick = 0;
  std::uint8_t running = 0;

  auto close = [&](int channel, int pitch) {
    auto it = open.find({channel, pitch});
    if (it == open.end() || it->second.empty()) return;  // stray note-off
    const OpenNote start = it->second.front();
    it->second.pop_front();
    if (tick == start.tick) {
      warnings.push_back("track " + std::to_string(track_index) + ": zero-length note (pitch " +
                         std::to_string(pitch) + ") at tick " + std::to_string(tick) + " dropped");
      return;
    }
    notes.push_back({start.tick, tick, pitch, start.velocity});
  };

  while (!in.at_end()) {
    tick += in.vlq();
    const std::size_t event_pos = in.pos();
    std::uint8_t status = in.peek();
    if (status & 0x80) {
      in.u8();
    } else {
      if (running == 0) throw ParseError("data byte without running status", event_pos);
      status = running;
    }

    if (status == 0xff) {
      const std::uint8_t type = in.u8();
      const std::uint32_t len = in.vlq();
      if (type == 0x51) {
        if (len != 3) throw ParseError("set-tempo meta event must have length 3", event_pos);
        const std::uint32_t us = in.be(3);
        if (us == 0) throw ParseError("zero tempo", event_pos);
        tempi.push_back({tick, us});
      } else if (type == 0x2f) {
        in.skip(len);
        break;
      } else {
        in.skip(len);
      }
      running = 0;
    } else if (status == 0xf0 || status == 0xf7) {
      in.skip(in.vlq());
      running = 0;
    } else if (status >= 0xf0) {
      throw ParseError("unsupported system message in track", event_pos);
    } else {
      running = status;
      const int kind = status & 0xf0;
      const int channel = status & 0x0f;
      const int d1 = in.u8();
      const int d2 = (kind == 0xc0 || kind == 0xd0) ? 0 : in.u8();
      if ((d1 | d2) & 0x80) throw ParseError("channel data byte has high bit set", event_pos);
      if (kind == 0x90 && d2 > 0) {
        open[{channel, d1}].push_back({tick, d2});
      } else if (kind == 0x80 || kind == 0x90) {
        close(channel, d1);
      }
    }
  }

  for (auto& [key, queue] : open) {
    for (const OpenNote& start : queue) {
      warnings.push_back("track " + std::to_string(track_index) + ": note-on (pitch " +
                         std::to_string(key.second) + ") at tick " + std::to_string(start.tick) +
                         " never released; closed at final tick " + std::to_string(tick));
      if (tick > start.tick) notes.push_back({start.tick, tick, key.second, start.velocity});
    }
  }
}

}  // namespace

SmfParseResult parse_smf(std::span<const std::uint8_t> bytes) {
  SmfParseResult result;
  if (bytes.size() < 14) throw ParseError("file too short for an MThd header", bytes.size());
  ByteReader head(bytes, 0, bytes.size());
  if (head.be(4) != 0x4d546864) throw ParseError("missing MThd chunk", 0);
  const std::uint32_t header_len = head.be(4);
  if (header_len < 6 || header_len > bytes.size() - 8)
    throw ParseError("bad MThd length", 4);
  const std::uint32_t format = head.be(2);
  const std::uint32_t n_tracks = head.be(2);
  const std::uint32_t division = head.be(2);
  if (format > 1) throw ParseError("only SMF format 0 and 1 are supported", 8);
  if (division == 0) throw ParseError("division must be non-zero", 12);

  std::vector<TickNote> tick_notes;
  std::vector<TempoMap::Change> tempi;
  std::size_t pos = 8 + header_len;
  int track_index = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8) throw ParseError("truncated chunk header", pos);
    ByteReader chunk(bytes, pos, bytes.size());
    const std::uint32_t type = chunk.be(4);
    const std::uint32_t len = chunk.be(4);
    if (len > bytes.size() - pos - 8) throw ParseError("chunk length overruns file", pos + 4);
    if (type == 0x4d54726b) {  // MTrk
      ByteReader track(bytes, pos + 8, pos + 8 + len);
      parse_track(track, track_index++, tick_notes, tempi, result.warnings);
    }
    pos += 8 + static_cast<std::size_t>(len);
  }
  if (static_cast<std::uint32_t>(track_index) != n_tracks)
    result.warnings.push_back("header declares " + std::to_string(n_tracks) + " tracks, found " +
                              std::to_string(track_index));

  std::vector<NoteEvent>& out = result.performance.notes;
  out.reserve(tick_notes.size());
  if (division & 0x8000) {
    // SMPTE timing: fixed ticks per second, tempo events do not apply.
    const int fps = -static_cast<int>(static_cast<std::int8_t>(division >> 8));
    const int ticks_per_frame = static_cast<int>(division & 0xff);
    if (fps <= 0 || ticks_per_frame == 0) throw ParseError("invalid SMPTE division", 12);
    const double per_second = static_cast<double>(fps) * ticks_per_frame;
    for (const TickNote& n : tick_notes)
      out.push_back({static_cast<double>(n.on) / per_second, static_cast<double>(n.off) / per_second,
                     n.pitch, n.velocity});
  } else {
    const TempoMap map(static_cast<int>(division), std::move(tempi));
    for (const TickNote& n : tick_notes)
      out.push_back({map.seconds(n.on), map.seconds(n.off), n.pitch, n.velocity});
  }
  sort_notes(result.performance);
  return result;
}

SmfParseResult read_smf_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open MIDI file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  SmfParseResult result = parse_smf(bytes);
  result.performance.performer_id = path.stem().string();
  return result;
}

// ---------------------------------------------------------------------------
// SMF writer

namespace {

std::int64_t to_tick(double seconds, const SmfWriteOptions& options) {
  const double ticks = seconds * static_cast<double>(options.division) * 1e6 /
                       static_cast<double>(options.us_per_quarter);
  return std::llround(ticks);
}

void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int n) {
  for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t buf[5];
  int n = 0;
  buf[n++] = v & 0x7f;
  while (v >>= 7) buf[n++] = static_cast<std::uint8_t>((v & 0x7f) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

Performance quantize_to_ticks(const Performance& performance, const SmfWriteOptions& options) {
  const TempoMap map(options.division, {{0, options.us_per_quarter}});
  Performance out = performance;
  for (NoteEvent& n : out.notes) {
    const std::int64_t on = std::max<std::int64_t>(0, to_tick(n.onset, options));
    const std::int64_t off = std::max(on + 1, to_tick(n.offset, options));
    n.onset = map.seconds(on);
    n.offset = map.seconds(off);
  }
  sort_notes(out);
  return out;
}

std::vector<std::uint8_t> write_smf(const Performance& performance, const SmfWriteOptions& options) {
  struct Event {
    std::int64_t tick;
    bool on;
    std::size_t index;
    int pitch;
    int velocity;
  };
  std::vector<Event> events;
  events.reserve(performance.notes.size() * 2);
  for (std::size_t i = 0; i < performance.notes.size(); ++i) {
    const NoteEvent& n = performance.notes[i];
    const std::int64_t on = std::max<std::int64_t>(0, to_tick(n.onset, options));
    const std::int64_t off = std::max(on + 1, to_tick(n.offset, options));
    events.push_back({on, true, i, n.pitch, n.dynamic});
    events.push_back({off, false, i, n.pitch, 0});
  }
  // Releases precede attacks on a shared tick; otherwise keep note order.
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.on != b.on) return !a.on;
    return a.index < b.index;
  });

  std::vector<std::uint8_t> track;
  put_vlq(track, 0);
  track.insert(track.end(), {0xff, 0x51, 0x03});
  put_be(track, options.us_per_quarter, 3);
  std::int64_t last = 0;
  for (const Event& e : events) {
    put_vlq(track, static_cast<std::uint32_t>(e.tick - last));
    last = e.tick;
    track.push_back(e.on ? 0x90 : 0x80);
    track.push_back(static_cast<std::uint8_t>(e.pitch));
    track.push_back(static_cast<std::uint8_t>(e.on ? e.velocity : 0x40));
  }
  put_vlq(track, 0);
  track.insert(track.end(), {0xff, 0x2f, 0x00});

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  put_be(out, 6, 4);
  put_be(out, 0, 2);
  put_be(out, 1, 2);
  put_be(out, static_cast<std::uint32_t>(options.division), 2);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_be(out, static_cast<std::uint32_t>(track.size()), 4);
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

// ---------------------------------------------------------------------------
// Note table CSV

namespace {

constexpr const char* kNoteTableHeader = "onset,offset,pitch,dynamic";

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw InvalidInput("note table line " + std::to_string(line) + ": bad field '" +
                       std::string(field) + "'");
  return value;
}

}  // namespace

std::string to_note_table(const Performance& performance) {
  std::string out = kNoteTableHeader;
  out += '\n';
  for (const NoteEvent& n : performance.notes) {
    out += format_real(n.onset);
    out += ',';
    out += format_real(n.offset);
    out += ',';
    out += std::to_string(n.pitch);
    out += ',';
    out += std::to_string(n.dynamic);
    out += '\n';
  }
  return out;
}

Performance from_note_table(const std::string& text, std::string performer_id,
                            std::string piece_id) {
  Performance p{std::move(performer_id), std::move(piece_id), {}};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kNoteTableHeader)
        throw InvalidInput("note table must start with header '" + std::string(kNoteTableHeader) +
                           "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t comma; (comma = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 4)
      throw InvalidInput("note table line " + std::to_string(line_no) + ": expected 4 fields");
    p.notes.push_back({parse_field<double>(fields[0], line_no), parse_field<double>(fields[1], line_no),
                       parse_field<int>(fields[2], line_no), parse_field<int>(fields[3], line_no)});
  }
  if (!header_seen) throw InvalidInput("note table is empty (missing header)");
  sort_notes(p);
  validate(p);
  return p;
}

}  // namespace perfid
