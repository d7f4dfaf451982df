#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "perfid/errors.h"
#include "perfid/midi_io.h"
#include "smf_bytes.h"

using namespace perfid;
using namespace smf_bytes;

namespace {

// Random performance on the writer's tick grid. Same-pitch notes never
// overlap so note-off pairing is unambiguous.
Performance random_performance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> pitch(21, 108), vel(1, 127), gap(0, 400), len(1, 900);
  const TempoMap map(960, {});
  std::vector<std::int64_t> free_at(128, 0);
  Performance p{"a", "b", {}};
  std::int64_t t = 0;
  while (p.notes.size() < n) {
    t += gap(rng);
    const int k = pitch(rng);
    if (free_at[k] > t) continue;
    const std::int64_t off = t + len(rng);
    free_at[k] = off;
    p.notes.push_back({map.seconds(t), map.seconds(off), k, vel(rng)});
  }
  sort_notes(p);
  return p;
}

}  // namespace

TEST(Smf, HandComputedTiming) {
  const Bytes f = file(0, 480, {track(cat({tempo(0, 500000), event(480, {0x90, 60, 64}),
                                            event(480, {0x80, 60, 0})}))});
  const SmfParseResult r = parse_smf(f);
  ASSERT_EQ(r.performance.notes.size(), 1u);
  const NoteEvent& n = r.performance.notes[0];
  EXPECT_DOUBLE_EQ(n.onset, 0.5);
  EXPECT_DOUBLE_EQ(n.offset, 1.0);
  EXPECT_EQ(n.pitch, 60);
  EXPECT_EQ(n.dynamic, 64);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Smf, DefaultTempoWithoutSetTempo) {
  const Bytes f = file(0, 480, {track(cat({event(480, {0x90, 60, 64}), event(480, {0x80, 60, 0})}))});
  const SmfParseResult r = parse_smf(f);
  ASSERT_EQ(r.performance.notes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.performance.notes[0].onset, 0.5);
}

TEST(Smf, NoNotesGivesEmptyPerformance) {
  const SmfParseResult r = parse_smf(file(0, 96, {track({})}));
  EXPECT_TRUE(r.performance.notes.empty());
}

TEST(Smf, VelocityZeroWithRunningStatusClosesNote) {
  // 0x90 set once; the second event reuses it via running status.
  const Bytes f = file(0, 480, {track(cat({event(0, {0x90, 62, 80}), event(240, {62, 0})}))});
  const SmfParseResult r = parse_smf(f);
  ASSERT_EQ(r.performance.notes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.performance.notes[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(r.performance.notes[0].offset, 0.25);
  EXPECT_EQ(r.performance.notes[0].dynamic, 80);
}

TEST(Smf, RepeatedNoteOnsCloseFirstInFirstOut) {
  const Bytes f = file(0, 480, {track(cat({event(0, {0x90, 60, 10}), event(100, {0x90, 60, 20}),
                                            event(100, {0x80, 60, 0}), event(100, {0x80, 60, 0})}))});
  const auto notes = parse_smf(f).performance.notes;
  ASSERT_EQ(notes.size(), 2u);
  EXPECT_EQ(notes[0].dynamic, 10);
  EXPECT_EQ(notes[1].dynamic, 20);
  const TempoMap map(480, {});
  EXPECT_DOUBLE_EQ(notes[0].offset, map.seconds(200));
  EXPECT_DOUBLE_EQ(notes[1].offset, map.seconds(300));
}

TEST(Smf, ChannelsPairSeparately) {
  const Bytes f = file(0, 480, {track(cat({event(0, {0x90, 60, 10}), event(0, {0x91, 60, 20}),
                                            event(480, {0x81, 60, 0}), event(480, {0x80, 60, 0})}))});
  const auto notes = parse_smf(f).performance.notes;
  ASSERT_EQ(notes.size(), 2u);
  // Sorted by onset then pitch; both tie, so check the set of offsets.
  std::vector<std::pair<int, double>> got{{notes[0].dynamic, notes[0].offset},
                                          {notes[1].dynamic, notes[1].offset}};
  std::sort(got.begin(), got.end());
  EXPECT_DOUBLE_EQ(got[0].second, 1.0);  // channel 0
  EXPECT_DOUBLE_EQ(got[1].second, 0.5);  // channel 1
}

TEST(Smf, DanglingNoteOnClosedAtTrackEndWithWarning) {
  const Bytes f = file(0, 480, {track(cat({event(0, {0x90, 60, 64}), event(960, {0xB0, 64, 0})}))});
  const SmfParseResult r = parse_smf(f);
  ASSERT_EQ(r.performance.notes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.performance.notes[0].offset, 1.0);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("never released"), std::string::npos);
}

TEST(Smf, ZeroLengthNoteDroppedWithWarning) {
  const Bytes f = file(0, 480, {track(cat({event(0, {0x90, 60, 64}), event(0, {0x80, 60, 0}),
                                            event(10, {0x90, 61, 64}), event(10, {0x80, 61, 0})}))});
  const SmfParseResult r = parse_smf(f);
  ASSERT_EQ(r.performance.notes.size(), 1u);
  EXPECT_EQ(r.performance.notes[0].pitch, 61);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Smf, FormatOneTempoTrackAppliesToAllTracks) {
  // Tempo doubles speed at tick 480 in track 0; notes live in track 1.
  const Bytes f = file(1, 480, {track(cat({tempo(0, 500000), tempo(480, 250000)})),
                                track(cat({event(0, {0x90, 60, 64}), event(960, {0x80, 60, 0})}))});
  const auto notes = parse_smf(f).performance.notes;
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_DOUBLE_EQ(notes[0].offset, 0.5 + 0.25);
}

TEST(Smf, SysexAndMetaEventsAreSkipped) {
  const Bytes f = file(0, 480, {track(cat({event(0, {0xF0, 0x03, 0x7E, 0x7F, 0xF7}),
                                            event(0, {0xFF, 0x03, 0x02, 'h', 'i'}),
                                            event(0, {0x90, 60, 64}), event(480, {0x80, 60, 0})}))});
  EXPECT_EQ(parse_smf(f).performance.notes.size(), 1u);
}

TEST(Smf, MalformedInputReportsByteOffset) {
  EXPECT_THROW(parse_smf(Bytes{'M', 'T'}), ParseError);
  Bytes bad = file(0, 480, {track({})});
  bad[0] = 'X';
  try {
    parse_smf(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  // Data byte with no running status yet.
  const Bytes orphan = file(0, 480, {track(cat({event(0, {60, 64})}))});
  try {
    parse_smf(orphan);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 14u + 8u + 1u);
  }
  // Chunk length running past the end of the file.
  Bytes overrun = file(0, 480, {track({})});
  overrun[14 + 7] = 0x7F;
  EXPECT_THROW(parse_smf(overrun), ParseError);
}

TEST(Smf, ParsingIsDeterministic) {
  std::mt19937_64 rng(5);
  const auto bytes = write_smf(random_performance(rng, 200));
  EXPECT_EQ(parse_smf(bytes).performance, parse_smf(bytes).performance);
}

TEST(Smf, WriteThenParseRoundTripsOnTickGrid) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Performance p = random_performance(rng, 1 + trial * 7);
    Performance back = parse_smf(write_smf(p)).performance;
    back.performer_id = p.performer_id;
    back.piece_id = p.piece_id;
    ASSERT_EQ(back, p) << "trial " << trial;
  }
}

TEST(Smf, QuantizedTimesSurviveWriting) {
  Performance p{"x", "y", {{0.0123, 0.4567, 60, 50}, {0.3333, 0.3334, 62, 70}}};
  const Performance q = quantize_to_ticks(p);
  Performance back = parse_smf(write_smf(q)).performance;
  back.performer_id = "x";
  back.piece_id = "y";
  EXPECT_EQ(back, q);
  EXPECT_GT(q.notes[1].offset, q.notes[1].onset);
}

TEST(TempoMapTest, PiecewiseLinearAndMonotone) {
  const TempoMap map(100, {{0, 1000000}, {200, 500000}, {300, 2000000}});
  EXPECT_DOUBLE_EQ(map.seconds(0), 0.0);
  EXPECT_DOUBLE_EQ(map.seconds(100), 1.0);
  EXPECT_DOUBLE_EQ(map.seconds(200), 2.0);
  EXPECT_DOUBLE_EQ(map.seconds(300), 2.5);
  EXPECT_DOUBLE_EQ(map.seconds(350), 3.5);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TempoMap::Change> changes;
    std::int64_t tick = 0;
    for (int i = 0; i < 5; ++i) {
      tick += static_cast<std::int64_t>(rng() % 1000);
      changes.push_back({tick, static_cast<std::uint32_t>(100000 + rng() % 2000000)});
    }
    const TempoMap m(static_cast<int>(1 + rng() % 960), changes);
    double last = -1.0;
    for (std::int64_t t = 0; t < 6000; t += 37) {
      const double s = m.seconds(t);
      ASSERT_GT(s, last);
      last = s;
    }
  }
}

TEST(NoteTable, HeaderAndSingleRow) {
  const Performance p{"a", "b", {{0.5, 1.0, 60, 64}}};
  EXPECT_EQ(to_note_table(p), "onset,offset,pitch,dynamic\n0.5,1,60,64\n");
}

TEST(NoteTable, TiedOnsetsOrderedByPitch) {
  Performance p{"a", "b", {{0.0, 1.0, 67, 50}, {0.0, 1.0, 60, 50}, {0.0, 1.0, 64, 50}}};
  sort_notes(p);
  const Performance back = from_note_table(to_note_table(p));
  ASSERT_EQ(back.notes.size(), 3u);
  EXPECT_EQ(back.notes[0].pitch, 60);
  EXPECT_EQ(back.notes[1].pitch, 64);
  EXPECT_EQ(back.notes[2].pitch, 67);
}

TEST(NoteTable, RoundTripIsBitExact) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1000.0), d(1e-9, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Performance p{"perf", "piece", {}};
    for (int i = 0; i < 50; ++i) {
      const double on = u(rng);
      p.notes.push_back({on, on + d(rng), static_cast<int>(rng() % 128),
                         static_cast<int>(1 + rng() % 127)});
    }
    sort_notes(p);
    ASSERT_EQ(from_note_table(to_note_table(p), "perf", "piece"), p);
  }
}

TEST(NoteTable, RejectsMalformedRows) {
  EXPECT_THROW(from_note_table(""), InvalidInput);
  EXPECT_THROW(from_note_table("onset,offset,pitch,dynamic\n0.5,0.4,60,64\n"), InvalidInput);
  EXPECT_THROW(from_note_table("onset,offset,pitch,dynamic\n0.5,1,60\n"), InvalidInput);
  EXPECT_THROW(from_note_table("onset,offset,pitch,dynamic\n0.5,1,200,64\n"), InvalidInput);
  EXPECT_THROW(from_note_table("onset,offset,pitch,dynamic\nx,1,60,64\n"), InvalidInput);
  EXPECT_THROW(from_note_table("a,b,c,d\n"), InvalidInput);
}

TEST(PerformanceValidation, RejectsBrokenInvariants) {
  EXPECT_NO_THROW(validate(Performance{"a", "b", {{0.0, 0.1, 60, 1}}}));
  EXPECT_THROW(validate(Performance{"a", "b", {{0.1, 0.1, 60, 64}}}), InvalidInput);
  EXPECT_THROW(validate(Performance{"a", "b", {{-0.1, 0.1, 60, 64}}}), InvalidInput);
  EXPECT_THROW(validate(Performance{"a", "b", {{0.0, 0.1, 60, 0}}}), InvalidInput);
  EXPECT_THROW(validate(Performance{"a", "b", {{0.5, 0.6, 60, 64}, {0.1, 0.2, 60, 64}}}),
               InvalidInput);
}
