#include <sstream>

#include "doctest.h"
#include "wordorder/error.hpp"
#include "wordorder/vocabulary.hpp"

using namespace wordorder;

namespace {

std::vector<std::vector<std::string>> sample() {
  return {{"the", "cat", "sat", "on", "the", "mat", "."},
          {"The", "dog", "ate", "3", "bones", "in", "1999", "."},
          {"the", "dog", "sat", "."}};
}

}  // namespace

TEST_CASE("reserved tokens occupy the first ids") {
  Vocabulary v;
  REQUIRE(v.size() == special::kCount);
  CHECK(v.token(special::kSentenceStart) == "<s>");
  CHECK(v.token(special::kSentenceEnd) == "</s>");
  CHECK(v.token(special::kBnpStart) == "<bnp>");
  CHECK(v.token(special::kBnpEnd) == "</bnp>");
  CHECK(v.token(special::kUnkCapitalized) == "<unk-cap>");
  CHECK(v.token(special::kUnk) == "<unk>");
  CHECK(v.token(special::kNumeric) == "<num>");
}

TEST_CASE("build orders by frequency then bytes and skips numbers") {
  const auto v = Vocabulary::build(sample(), 1);
  CHECK(v.token(7) == ".");
  CHECK(v.token(8) == "the");
  CHECK(v.token(9) == "dog");
  CHECK(v.token(10) == "sat");
  CHECK(!v.find("3"));
  CHECK(!v.find("1999"));
  CHECK(v.find("The"));
}

TEST_CASE("min_count prunes rare words") {
  const auto v = Vocabulary::build(sample(), 2);
  CHECK(v.find("the"));
  CHECK(v.find("dog"));
  CHECK(!v.find("cat"));
  CHECK(v.min_count() == 2);
}

TEST_CASE("min_count must be positive") { CHECK_THROWS_AS(Vocabulary::build(sample(), 0), ConfigError); }

TEST_CASE("type count is non-increasing in min_count") {
  std::size_t previous = SIZE_MAX;
  for (int m : {1, 2, 3, 5, 10}) {
    const auto size = Vocabulary::build(sample(), m).size();
    CHECK(size <= previous);
    previous = size;
  }
}

TEST_CASE("replacement classes") {
  const auto v = Vocabulary::build(sample(), 2);
  CHECK(replace_token("the", v) == *v.find("the"));
  CHECK(replace_token("cat", v) == special::kUnk);
  CHECK(replace_token("Paris", v) == special::kUnkCapitalized);
  CHECK(replace_token("42", v) == special::kNumeric);
  CHECK(replace_token("3rd", v) == special::kNumeric);
  CHECK(replace_token("<bnp>", v) == special::kUnk);
  CHECK(replace_token("<s>", v) == special::kUnk);
}

TEST_CASE("vocabulary text round trip") {
  const auto v = Vocabulary::build(sample(), 1);
  std::stringstream buf;
  v.write(buf);
  CHECK(buf.str().rfind("#wordorder-vocab min_count=1\n<s>\n", 0) == 0);
  const auto back = Vocabulary::read(buf);
  CHECK(back == v);
  CHECK(back.fingerprint() == v.fingerprint());
}

TEST_CASE("fingerprint changes with contents") {
  CHECK(Vocabulary::build(sample(), 1).fingerprint() != Vocabulary::build(sample(), 2).fingerprint());
}

TEST_CASE("malformed vocabulary files") {
  std::stringstream no_header("<s>\n");
  CHECK_THROWS_AS(Vocabulary::read(no_header), ParseError);
  std::stringstream missing("#wordorder-vocab min_count=1\n<s>\n</s>\n");
  CHECK_THROWS_AS(Vocabulary::read(missing), ParseError);
  std::stringstream dup("#wordorder-vocab min_count=1\n<s>\n</s>\n<bnp>\n</bnp>\n<unk-cap>\n<unk>\n<num>\na\na\n");
  try {
    Vocabulary::read(dup);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 10);
  }
}

TEST_CASE("from_words keeps the given order") {
  const std::vector<std::string> words{"zeta", "alpha", "<unk>", "zeta"};
  const auto v = Vocabulary::from_words(words);
  CHECK(v.size() == special::kCount + 2);
  CHECK(v.token(7) == "zeta");
  CHECK(v.token(8) == "alpha");
}
