#include <cmath>
#include <sstream>

#include <doctest.h>

#include "docparse/coord_codec.hpp"
#include "docparse/errors.hpp"
#include "docparse/layout_io.hpp"
#include "docparse/rng.hpp"

using namespace docparse;

namespace {

const CoordSpec kSpec = CoordSpec::with_bins(1000, 100);  // tokens 100..1099
const LabelMap kLabels({{"text", 7}, {"title", 8}, {"table", 9}}, 1100);

bool has_issue(const ParsedLayout& p, ParseIssue issue) {
  for (const auto& d : p.diagnostics) {
    if (d.issue == issue) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("quantization boundaries and a rounding case") {
  CHECK(quantize_coord(0.0, kSpec) == 0);
  CHECK(quantize_coord(1.0, kSpec) == 999);
  CHECK(quantize_coord(0.5004, kSpec) == 500);  // 0.5004 * 999 = 499.8996
  CHECK(dequantize_coord(0, kSpec) == 0.0);
  CHECK(dequantize_coord(999, kSpec) == 1.0);
  CHECK(dequantize_coord(500, kSpec) == doctest::Approx(0.5005).epsilon(1e-4));
}

TEST_CASE("out-of-range values are domain errors") {
  CHECK_THROWS_AS(quantize_coord(-0.01, kSpec), DomainError);
  CHECK_THROWS_AS(quantize_coord(1.01, kSpec), DomainError);
  CHECK_THROWS_AS(quantize_coord(std::nan(""), kSpec), DomainError);
  CHECK_THROWS_AS(dequantize_coord(-1, kSpec), DomainError);
  CHECK_THROWS_AS(dequantize_coord(1000, kSpec), DomainError);
}

TEST_CASE("quantization round trip") {
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const double c = rng.uniform();
    CHECK(std::abs(dequantize_coord(quantize_coord(c, kSpec), kSpec) - c) <= 0.5 / 999 + 1e-15);
  }
  for (int b = 0; b < 1000; ++b) CHECK(quantize_coord(dequantize_coord(b, kSpec), kSpec) == b);
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(kSpec.validate(1101));
  CHECK_THROWS_AS(kSpec.validate(1099), ConfigError);
  CHECK_THROWS_AS((CoordSpec{10, 0, 8}.validate(20)), ConfigError);
  CHECK_THROWS_AS((CoordSpec{0, 0, -1}.validate(20)), ConfigError);
}

TEST_CASE("display names are one-based") {
  CHECK(loc_token_name(0) == "<loc_1>");
  CHECK(loc_token_name(999) == "<loc_1000>");
}

TEST_CASE("encoding") {
  CHECK(encode_layout({}, kSpec, kLabels).tokens == std::vector<int>{1100});
  const std::vector<LayoutElement> one = {{"text", {0, 0, 1, 1}}};
  CHECK(encode_layout(one, kSpec, kLabels).tokens == std::vector<int>{7, 100, 100, 1099, 1099, 1100});

  const std::vector<LayoutElement> two = {{"title", {0.2, 0.9, 0.3, 1.0}}, {"text", {0.5, 0.1, 0.6, 0.2}}};
  const auto seq = encode_layout(two, kSpec, kLabels).tokens;
  CHECK(seq[0] == 7);
  CHECK(seq[5] == 8);

  CHECK_THROWS_AS(encode_layout({{"figure", {0, 0, 1, 1}}}, kSpec, kLabels), MappingError);
}

TEST_CASE("reading order breaks y0 ties by x0") {
  const auto sorted = reading_order({{"a", {0.5, 0.1, 0.6, 0.2}}, {"b", {0.1, 0.1, 0.2, 0.2}}, {"c", {0, 0, 1, 0.05}}});
  CHECK(sorted[0].label == "c");
  CHECK(sorted[1].label == "b");
  CHECK(sorted[2].label == "a");
}

TEST_CASE("parse inverts encode on bin centers") {
  Rng rng(7);
  const char* names[] = {"text", "title", "table"};
  for (int t = 0; t < 300; ++t) {
    std::vector<LayoutElement> elements;
    const long n = rng.uniform_int(0, 6);
    for (long e = 0; e < n; ++e) {
      int b[4];
      for (int& v : b) v = static_cast<int>(rng.uniform_int(0, 999));
      if (b[0] > b[2]) std::swap(b[0], b[2]);
      if (b[1] > b[3]) std::swap(b[1], b[3]);
      elements.push_back({names[rng.uniform_int(0, 2)],
                          {dequantize_coord(b[0], kSpec), dequantize_coord(b[1], kSpec), dequantize_coord(b[2], kSpec),
                           dequantize_coord(b[3], kSpec)}});
    }
    elements = reading_order(elements);
    const auto parsed = parse_layout(encode_layout(elements, kSpec, kLabels), kSpec, kLabels);
    CHECK(parsed.diagnostics.empty());
    CHECK(parsed.elements == elements);
  }
}

TEST_CASE("truncated group") {
  const auto p = parse_layout({{7, 100, 100, 1100}}, kSpec, kLabels);
  CHECK(p.elements.empty());
  CHECK(p.diagnostics.size() == 1);
  CHECK(has_issue(p, ParseIssue::TruncatedGroup));
}

TEST_CASE("swapped corners are sorted and flagged") {
  const auto p = parse_layout({{7, 100, 1099, 1099, 100, 1100}}, kSpec, kLabels);
  REQUIRE(p.elements.size() == 1);
  CHECK(p.elements[0].box == Box{0, 0, 1, 1});
  CHECK(has_issue(p, ParseIssue::SwappedCorners));
}

TEST_CASE("non-coordinate slot drops the group") {
  const auto p = parse_layout({{7, 100, 8, 300, 300, 9, 100, 100, 200, 200, 1100}}, kSpec, kLabels);
  CHECK(has_issue(p, ParseIssue::NonCoordinateInSlot));
  bool has_table = false;
  for (const auto& e : p.elements) has_table |= e.label == "table";
  CHECK(has_table);
}

TEST_CASE("missing EOS and trailing tokens are reported") {
  CHECK(has_issue(parse_layout({{7, 100, 100, 200, 200}}, kSpec, kLabels), ParseIssue::MissingEos));
  const auto trailing = parse_layout({{7, 100, 100, 200, 200, 1100, 7}}, kSpec, kLabels);
  CHECK(trailing.elements.size() == 1);
  CHECK(has_issue(trailing, ParseIssue::TrailingTokens));
}

TEST_CASE("parse never throws on arbitrary sequences") {
  Rng rng(99);
  for (int t = 0; t < 5000; ++t) {
    TokenSequence seq;
    const long n = rng.uniform_int(0, 30);
    for (long k = 0; k < n; ++k) {
      // Mostly plausible tokens with some garbage, including negatives.
      seq.tokens.push_back(static_cast<int>(rng.bernoulli(0.1) ? rng.uniform_int(-5, 5000) : rng.uniform_int(0, 1101)));
    }
    ParsedLayout p;
    CHECK_NOTHROW(p = parse_layout(seq, kSpec, kLabels));
    for (const auto& e : p.elements) {
      CHECK(e.box.valid());
      CHECK(kLabels.has_label(e.label));
    }
  }
}

TEST_CASE("JSON Lines layout serialization") {
  const std::vector<LayoutElement> elements = {{"text", {0.125, 0.25, 0.5, 0.75}}, {"table", {0, 0, 1, 1}}};
  std::stringstream io;
  write_layout_jsonl(io, elements);
  CHECK(read_layout_jsonl(io) == elements);
  CHECK(layout_element_from_json(layout_element_to_json(elements[0])) == elements[0]);
  CHECK_THROWS_AS(layout_element_from_json("{\"label\":\"x\",\"x0\":0}"), DomainError);
  CHECK_THROWS_AS(layout_element_from_json("not json"), DomainError);
}

TEST_CASE("token sequence text form") {
  const TokenSequence seq{{7, 100, 100, 1099, 1099, 1100}};
  CHECK(format_tokens(seq) == "7 100 100 1099 1099 1100");
  CHECK(parse_tokens(" 7 100\n100 1099\t1099 1100 ") == seq);
  CHECK_THROWS_AS(parse_tokens("7 x"), DomainError);
}
