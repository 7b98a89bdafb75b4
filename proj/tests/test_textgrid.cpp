#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dysev/textgrid.hpp"
#include "dysev/wav.hpp"
#include "support/synth.hpp"

using namespace dysev;

namespace {

const char* kLongGrid = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1.5
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 1.5
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = ""
        intervals [2]:
            xmin = 0.5
            xmax = 1.1
            text = "aa"
        intervals [3]:
            xmin = 1.1
            xmax = 1.5
            text = "s"
)";

const char* kShortGrid = R"(File type = "ooTextFile"
Object class = "TextGrid"

0
1.5
<exists>
1
"IntervalTier"
"phones"
0
1.5
3
0
0.5
""
0.5
1.1
"aa"
1.1
1.5
"s"
)";

PhoneClassMap test_map() {
  PhoneClassMap m;
  m.language = "xx";
  m.class_of = {{"aa", PhoneClass::Vowel},
                {"iy", PhoneClass::Vowel},
                {"s", PhoneClass::Consonant},
                {"t", PhoneClass::Consonant},
                {"sil", PhoneClass::Silence}};
  m.corner_of = {{"aa", CornerVowel::A}, {"iy", CornerVowel::I}};
  m.front_label = "iy";
  m.back_label = "aa";
  return m;
}

}  // namespace

TEST_CASE("long-format TextGrid parses") {
  std::vector<Tier> tiers = parse_textgrid(kLongGrid);
  REQUIRE(tiers.size() == 1);
  const Tier& t = tiers[0];
  CHECK(t.name == "phones");
  CHECK(t.xmin == 0.0);
  CHECK(t.xmax == 1.5);
  REQUIRE(t.intervals.size() == 3);
  CHECK(t.intervals[0].label.empty());
  CHECK(t.intervals[1].label == "aa");
  CHECK(t.intervals[1].xmin == 0.5);
  CHECK(t.intervals[1].xmax == 1.1);
  CHECK(t.intervals[2].label == "s");
}

TEST_CASE("short-format TextGrid parses to the same tiers") {
  CHECK(parse_textgrid(kShortGrid) == parse_textgrid(kLongGrid));
}

TEST_CASE("UTF-8 BOM and UTF-16 encodings are accepted") {
  std::string bom = "\xEF\xBB\xBF";
  CHECK(parse_textgrid(bom + kLongGrid) == parse_textgrid(kLongGrid));

  // UTF-16LE with BOM.
  std::string utf16 = "\xFF\xFE";
  for (char c : std::string(kLongGrid)) {
    utf16 += c;
    utf16 += '\0';
  }
  CHECK(parse_textgrid(utf16) == parse_textgrid(kLongGrid));

  // UTF-16BE with BOM.
  std::string utf16be = "\xFE\xFF";
  for (char c : std::string(kLongGrid)) {
    utf16be += '\0';
    utf16be += c;
  }
  CHECK(parse_textgrid(utf16be) == parse_textgrid(kLongGrid));
}

TEST_CASE("point tiers are parsed and dropped") {
  std::string grid = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "TextTier"
        name = "points"
        xmin = 0
        xmax = 1
        points: size = 2
        points [1]:
            number = 0.25
            mark = "p1"
        points [2]:
            number = 0.5
            mark = "p2"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 1
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 1
            text = "aa"
)";
  std::vector<Tier> tiers = parse_textgrid(grid);
  REQUIRE(tiers.size() == 1);
  CHECK(tiers[0].name == "phones");
}

TEST_CASE("tiny boundary gaps are snapped, real gaps rejected") {
  std::string snap = kLongGrid;
  auto pos = snap.find("xmin = 0.5");
  REQUIRE(pos != std::string::npos);
  snap.replace(pos, 10, "xmin = 0.5000000001");
  std::vector<Tier> tiers = parse_textgrid(snap);
  CHECK(tiers[0].intervals[1].xmin == tiers[0].intervals[0].xmax);

  std::string gap = kLongGrid;
  pos = gap.find("xmin = 0.5");
  REQUIRE(pos != std::string::npos);
  gap.replace(pos, 10, "xmin = 0.51");
  CHECK_THROWS_AS(parse_textgrid(gap), parse_error);
}

TEST_CASE("degenerate and malformed grids raise parse_error with a line") {
  CHECK_THROWS_AS(parse_textgrid(""), parse_error);
  CHECK_THROWS_AS(parse_textgrid("File type = \"ooTextFile\"\n"), parse_error);

  std::string bad = kLongGrid;
  auto pos = bad.find("xmax = 1.1");
  bad.replace(pos, 10, "xmax = 0.4");  // interval ends before it starts
  try {
    parse_textgrid(bad);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line >= 1);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("serialize/parse round-trips both formats") {
  std::vector<Tier> tiers = parse_textgrid(kLongGrid);
  for (auto fmt : {TextGridFormat::Long, TextGridFormat::Short}) {
    std::string text = serialize_textgrid(tiers, fmt);
    CHECK(parse_textgrid(text) == tiers);
  }

  // Odd boundaries and quotes in labels survive.
  Tier t;
  t.name = "with \"quotes\"";
  t.xmin = 0.0;
  t.xmax = 0.3;
  t.intervals = {{"a\"b", 0.0, 0.12345678901234567},
                 {"", 0.12345678901234567, 0.3}};
  for (auto fmt : {TextGridFormat::Long, TextGridFormat::Short}) {
    std::vector<Tier> back = parse_textgrid(serialize_textgrid({t}, fmt));
    REQUIRE(back.size() == 1);
    CHECK(back[0] == t);
  }
}

TEST_CASE("phone class map validates corner vowels and the F2 pair") {
  PhoneClassMap m = test_map();
  CHECK_NOTHROW(m.validate());

  PhoneClassMap bad = m;
  bad.corner_of["s"] = CornerVowel::U;  // consonant as corner vowel
  CHECK_THROWS_AS(bad.validate(), config_error);

  bad = m;
  bad.front_label = "nope";
  CHECK_THROWS_AS(bad.validate(), config_error);

  CHECK(m.classify("aa") == PhoneClass::Vowel);
  CHECK(m.classify("s") == PhoneClass::Consonant);
  try {
    m.classify("zz");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("classify_runs merges adjacent same-class intervals") {
  Tier t;
  t.name = "phones";
  t.xmin = 0.0;
  t.xmax = 1.0;
  t.intervals = {{"", 0.0, 0.1},   {"aa", 0.1, 0.3}, {"iy", 0.3, 0.4},
                 {"s", 0.4, 0.55}, {"t", 0.55, 0.7}, {"  ", 0.7, 0.8},
                 {"", 0.8, 0.9},   {"aa", 0.9, 1.0}};
  std::vector<SegmentRun> runs = classify_runs(t, test_map());
  REQUIRE(runs.size() == 5);
  CHECK(runs[0] == SegmentRun{PhoneClass::Silence, 0.0, 0.1});
  CHECK(runs[1] == SegmentRun{PhoneClass::Vowel, 0.1, 0.4});
  CHECK(runs[2] == SegmentRun{PhoneClass::Consonant, 0.4, 0.7});
  CHECK(runs[3] == SegmentRun{PhoneClass::Silence, 0.7, 0.9});
  CHECK(runs[4] == SegmentRun{PhoneClass::Vowel, 0.9, 1.0});
}

TEST_CASE("explicit silence labels merge with empty intervals") {
  Tier t;
  t.name = "phones";
  t.xmax = 0.6;
  t.intervals = {{"sil", 0.0, 0.2}, {"", 0.2, 0.4}, {"aa", 0.4, 0.6}};
  std::vector<SegmentRun> runs = classify_runs(t, test_map());
  REQUIRE(runs.size() == 2);
  CHECK(runs[0] == SegmentRun{PhoneClass::Silence, 0.0, 0.4});
}

// ---- WAV ----------------------------------------------------------------

TEST_CASE("pcm16 WAV round-trips within quantization error") {
  Waveform w;
  w.sample_rate = 8000.0;
  w.samples = synth::tone(440.0, 0.05, 8000.0, 0.5);
  synth::TempDir dir("wav_pcm16");
  std::string path = (dir.path / "t.wav").string();
  write_wav(path, w, WavEncoding::Pcm16);
  Waveform r = read_wav(path);
  CHECK(r.sample_rate == 8000.0);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1.0 / 32768.0 + 1e-12);
}

TEST_CASE("float32 WAV round-trips to float precision") {
  Waveform w;
  w.sample_rate = 16000.0;
  w.samples = synth::tone(1000.0, 0.01, 16000.0, 0.9);
  synth::TempDir dir("wav_f32");
  std::string path = (dir.path / "t.wav").string();
  write_wav(path, w, WavEncoding::Float32);
  Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1e-7);
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}

// Hand-built stereo PCM16 file; also used for the truncation tests.
std::string stereo_pcm16_bytes(const std::vector<std::int16_t>& left,
                               const std::vector<std::int16_t>& right,
                               std::uint32_t sr = 8000) {
  std::string data;
  for (std::size_t i = 0; i < left.size(); ++i) {
    put_u16(data, static_cast<std::uint16_t>(left[i]));
    put_u16(data, static_cast<std::uint16_t>(right[i]));
  }
  std::string fmt;
  put_u16(fmt, 1);  // PCM
  put_u16(fmt, 2);  // channels
  put_u32(fmt, sr);
  put_u32(fmt, sr * 4);
  put_u16(fmt, 4);
  put_u16(fmt, 16);
  std::string s = "RIFF";
  put_u32(s, static_cast<std::uint32_t>(4 + 8 + fmt.size() + 8 + data.size()));
  s += "WAVE";
  s += "fmt ";
  put_u32(s, static_cast<std::uint32_t>(fmt.size()));
  s += fmt;
  s += "data";
  put_u32(s, static_cast<std::uint32_t>(data.size()));
  s += data;
  return s;
}

}  // namespace

TEST_CASE("stereo input is averaged to mono") {
  std::string bytes = stereo_pcm16_bytes({16384, -16384}, {0, 0});
  Waveform w = parse_wav(bytes, "stereo");
  REQUIRE(w.samples.size() == 2);
  CHECK(w.samples[0] == Catch::Approx(0.25).margin(1e-4));
  CHECK(w.samples[1] == Catch::Approx(-0.25).margin(1e-4));
}

TEST_CASE("truncated and malformed WAV files are rejected") {
  std::string good = stereo_pcm16_bytes({1, 2, 3}, {4, 5, 6});
  CHECK_NOTHROW(parse_wav(good, "good"));
  CHECK_THROWS_AS(parse_wav(good.substr(0, 10), "short"), io_error);
  CHECK_THROWS_AS(parse_wav(good.substr(0, good.size() - 5), "cut"),
                  io_error);
  std::string wrong = good;
  wrong[8] = 'X';  // not WAVE
  CHECK_THROWS_AS(parse_wav(wrong, "notwave"), io_error);
}
