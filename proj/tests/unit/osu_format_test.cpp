#include "osubeats/osu_format.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "osu_fixture_expectations.hpp"
#include "temp_dir.hpp"

namespace osubeats {
namespace {

constexpr const char* kMinimal =
    "osu file format v14\n"
    "\n"
    "[General]\n"
    "AudioFilename: audio.mp3\n"
    "\n"
    "[TimingPoints]\n"
    "1000,500,4,2,0,100,1,0\n";

TEST(ParseOsu, MinimalFixture) {
  const auto map = parse_osu(kMinimal);
  EXPECT_EQ(map.format_version, 14);
  EXPECT_EQ(map.audio_filename, "audio.mp3");
  ASSERT_EQ(map.timing_points.size(), 1u);
  EXPECT_TRUE(map.timing_points[0].uninherited);
  EXPECT_EQ(map.timing_points[0].time_ms, 1000.0);
  EXPECT_EQ(map.timing_points[0].beat_length_ms, 500.0);
  EXPECT_EQ(map.mode, 0);
  EXPECT_EQ(map.beatmapset_id, -1);
}

TEST(ParseOsu, OnlyInheritedPointsIsMissingTimingPoints) {
  const std::string text =
      "osu file format v14\n[General]\nAudioFilename: a.mp3\n[TimingPoints]\n2000,-50,4,2,0,100,0,0\n";
  try {
    parse_osu(text);
    FAIL() << "expected MissingTimingPoints";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingTimingPoints);
  }
}

TEST(ParseOsu, OldFormatTwoFieldLine) {
  const auto map = parse_osu("osu file format v5\n[General]\nAudioFilename: a.mp3\n[TimingPoints]\n0,600\n");
  ASSERT_EQ(map.timing_points.size(), 1u);
  EXPECT_EQ(map.timing_points[0].meter, 4);
  EXPECT_TRUE(map.timing_points[0].uninherited);
}

TEST(ParseOsu, HeaderAndSectionErrors) {
  auto code_of = [](const std::string& text) {
    try {
      parse_osu(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  EXPECT_EQ(code_of(""), Errc::MissingFormatHeader);
  EXPECT_EQ(code_of("[General]\nAudioFilename: a.mp3\n"), Errc::MissingFormatHeader);
  EXPECT_EQ(code_of("osu file format vX\n"), Errc::MissingFormatHeader);
  EXPECT_EQ(code_of("osu file format v14\n[TimingPoints]\n0,500,4,2,0,100,1,0\n"), Errc::MissingGeneralSection);
}

TEST(ParseOsu, MalformedLineCarriesLineNumberAndText) {
  const std::string text =
      "osu file format v14\n[General]\nAudioFilename: a.mp3\n[TimingPoints]\n0,500,4,2,0,100,1,0\nabc,500\n";
  try {
    parse_osu(text);
    FAIL() << "expected MalformedLine";
  } catch (const MalformedLineError& e) {
    EXPECT_EQ(e.code(), Errc::MalformedLine);
    EXPECT_EQ(e.line(), 6u);
    EXPECT_EQ(e.raw(), "abc,500");
  }
}

TEST(ParseOsu, UnknownSectionsAndKeysAreSkipped) {
  const std::string text =
      "osu file format v14\n[General]\nAudioFilename: a.mp3\nWeird: ???\n[Editor]\nBookmarks: 1,2,3\n"
      "[Events]\n0,0,\"bg.jpg\",0,0\n[TimingPoints]\n0,500,4,2,0,100,1,0\n[Colours]\nCombo1 : 1,2,3\n";
  const auto map = parse_osu(text);
  EXPECT_EQ(map.timing_points.size(), 1u);
}

TEST(ParseOsu, KeyValueSplitsOnFirstColon) {
  const std::string text =
      "osu file format v14\n[General]\nAudioFilename: a:b.mp3\n[Metadata]\nTitle: Re:Zero \n"
      "[TimingPoints]\n0,500,4,2,0,100,1,0\n";
  const auto map = parse_osu(text);
  EXPECT_EQ(map.audio_filename, "a:b.mp3");
  EXPECT_EQ(map.title, "Re:Zero");
}

TEST(ParseTimingPointLine, EightFields) {
  const auto tp = parse_timing_point_line("1000,500,4,2,0,100,1,0", 14);
  EXPECT_EQ(tp, (TimingPoint{1000, 500, 4, 2, 0, 100, true, 0}));
}

TEST(ParseTimingPointLine, InheritedFlag) {
  const auto tp = parse_timing_point_line("2000,-50,4,2,0,100,0,0", 14);
  EXPECT_FALSE(tp.uninherited);
  EXPECT_EQ(tp.beat_length_ms, -50.0);
}

TEST(ParseTimingPointLine, ShortLineDefaults) {
  const auto tp = parse_timing_point_line("0,600", 5);
  EXPECT_EQ(tp, (TimingPoint{0, 600, 4, 0, 0, 100, true, 0}));
  EXPECT_FALSE(parse_timing_point_line("0,-100", 5).uninherited);
}

TEST(ParseTimingPointLine, Errors) {
  for (const char* line : {"x,500", "0,y", "0", "0,nan", "0,500,0", "0,500,4,2,0,100,1,-1", "0,-5,4,2,0,100,1,0",
                           "0,500,four"}) {
    EXPECT_THROW(parse_timing_point_line(line, 14), MalformedLineError) << line;
  }
}

TEST(ParseHitObjectTimes, SpecExamples) {
  EXPECT_EQ(parse_hit_object_times({"256,192,1000,1,0", "100,100,2500,1,0"}), (std::vector<double>{1000, 2500}));
  EXPECT_TRUE(parse_hit_object_times({}).empty());
  EXPECT_THROW(parse_hit_object_times({"a,b,notanumber,1,0"}), MalformedLineError);
}

TEST(ParseOsu, FixtureCorpus) {
  const std::filesystem::path dir = std::filesystem::path(OSUBEATS_FIXTURE_DIR) / "osu";
  for (const auto& expected : testing::osu_fixture_expectations()) {
    SCOPED_TRACE(expected.file);
    const auto map = parse_osu(testing::slurp(dir / expected.file));
    EXPECT_EQ(map.format_version, expected.format_version);
    EXPECT_EQ(map.audio_filename, expected.audio_filename);
    EXPECT_EQ(map.version_name, expected.version_name);
    EXPECT_EQ(map.beatmapset_id, expected.beatmapset_id);
    EXPECT_EQ(map.overall_difficulty, expected.overall_difficulty);
    EXPECT_EQ(map.timing_points, expected.timing_points);
    EXPECT_EQ(map.hit_object_times_ms, expected.hit_object_times_ms);
    for (const auto& tp : map.timing_points) {
      if (tp.uninherited) {
        EXPECT_GT(tp.beat_length_ms, 0.0);
      }
      EXPECT_GE(tp.meter, 1);
    }
    EXPECT_TRUE(std::is_sorted(map.timing_points.begin(), map.timing_points.end(),
                               [](const TimingPoint& a, const TimingPoint& b) { return a.time_ms < b.time_ms; }));
  }
}

BeatmapDifficulty random_difficulty(std::mt19937& rng) {
  std::uniform_int_distribution<int> small(0, 9);
  std::uniform_real_distribution<double> real(0.0, 1.0);
  auto word = [&] {
    std::string s;
    const int n = 1 + small(rng);
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + small(rng)));
    return s;
  };

  BeatmapDifficulty map;
  map.format_version = 5 + small(rng);
  map.audio_filename = word() + ".mp3";
  map.mode = small(rng) % 4;
  map.version_name = word();
  map.beatmapset_id = 1 + small(rng) * 1000 + small(rng);
  map.overall_difficulty = std::round(real(rng) * 100.0) / 10.0;
  map.title = word();
  map.artist = word();
  double t = -100.0 + real(rng) * 200.0;
  const int points = 1 + small(rng);
  for (int i = 0; i < points; ++i) {
    TimingPoint tp;
    tp.time_ms = t;
    tp.uninherited = i == 0 || small(rng) < 5;
    tp.beat_length_ms = tp.uninherited ? 200.0 + real(rng) * 800.0 : -(10.0 + real(rng) * 990.0);
    tp.meter = 1 + small(rng);
    tp.sample_set = small(rng) % 4;
    tp.sample_index = small(rng);
    tp.volume = 5 + small(rng) * 10;
    tp.effects = small(rng) % 2 + (small(rng) < 3 ? 8 : 0);
    map.timing_points.push_back(tp);
    t += real(rng) * 20000.0;
  }
  double h = 0.0;
  for (int i = small(rng); i > 0; --i) {
    h += std::round(real(rng) * 5000.0);
    map.hit_object_times_ms.push_back(h);
  }
  return map;
}

TEST(ParseOsu, CanonicalLayoutRoundTrip) {
  std::mt19937 rng(20240611);
  for (int i = 0; i < 300; ++i) {
    const auto map = random_difficulty(rng);
    EXPECT_EQ(parse_osu(write_osu(map)), map) << write_osu(map);
  }
}

}  // namespace
}  // namespace osubeats
