#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "emoquad/error.hpp"
#include "emoquad/preprocessor.hpp"
#include "emoquad/rng.hpp"

namespace emoquad {
namespace {

using Tokens = std::vector<std::string>;

TEST(NormalizeText, Examples) {
  EXPECT_EQ(normalize_text("@Marilyn hello"), "USERID hello");
  EXPECT_EQ(normalize_text("so happyyyyyyy"), "so happyy");
  EXPECT_EQ(normalize_text("see https://t.co/abc now"), "see URL now");
}

TEST(NormalizeText, UrlForms) {
  EXPECT_EQ(normalize_text("http://a.b"), "URL");
  EXPECT_EQ(normalize_text("WWW.Example.com/x"), "URL");
  EXPECT_EQ(normalize_text("HTTPS://X"), "URL");
  EXPECT_EQ(normalize_text("httpx://no"), "httpx://no");
  EXPECT_EQ(normalize_text("awww.cute"), "aww.cute");
}

TEST(NormalizeText, WhitespaceAndCase) {
  EXPECT_EQ(normalize_text("  Hello \t\n WORLD  "), "hello world");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("   "), "");
  EXPECT_EQ(normalize_text("USERID URL"), "USERID URL");
  EXPECT_EQ(normalize_text("userid"), "userid");
}

TEST(NormalizeText, SqueezeIsCaseInsensitiveAndLettersOnly) {
  EXPECT_EQ(normalize_text("NOOOoo"), "noo");
  EXPECT_EQ(normalize_text("!!!!!"), "!!!!!");
  EXPECT_EQ(normalize_text("aa"), "aa");
  EXPECT_EQ(normalize_text("aaab"), "aab");
}

TEST(StripHashtags, Examples) {
  EXPECT_EQ(strip_hashtags("got the job #excited #happy"), "got the job");
  EXPECT_EQ(strip_hashtags("my #exam went well"), "my exam went well");
  EXPECT_EQ(strip_hashtags("#excited"), "");
  EXPECT_EQ(strip_hashtags(""), "");
}

TEST(StripHashtags, InternalTagsLoseTheirMarks) {
  EXPECT_EQ(strip_hashtags("a ## b"), "a b");
  EXPECT_EQ(strip_hashtags("a ##x b"), "a x b");
  EXPECT_EQ(strip_hashtags("#@bob said hi"), "USERID said hi");
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("got the job"), (Tokens{"got", "the", "job"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("USERID  hello"), (Tokens{"USERID", "hello"}));
}

TEST(ScanEmoticons, Examples) {
  const auto table = EmoticonTable::defaults();
  EXPECT_EQ(scan_emoticons("first volleyball match :) and final exam :(", table),
            (std::vector<Polarity>{Polarity::Positive, Polarity::Negative}));
  EXPECT_TRUE(scan_emoticons("no emoticons here", table).empty());
  EXPECT_EQ(scan_emoticons("now :) #disappointed", table), std::vector<Polarity>{Polarity::Positive});
}

TEST(ScanEmoticons, TokenFinalAndLongestMatch) {
  const auto table = EmoticonTable::defaults();
  EXPECT_EQ(scan_emoticons("match:)", table), std::vector<Polarity>{Polarity::Positive});
  EXPECT_EQ(scan_emoticons(":-(", table), std::vector<Polarity>{Polarity::Negative});
  EXPECT_EQ(scan_emoticons("oh:'(", table), std::vector<Polarity>{Polarity::Negative});
  EXPECT_EQ(scan_emoticons(":D", table), std::vector<Polarity>{Polarity::Positive});
  EXPECT_EQ(scan_emoticons("D:", table), std::vector<Polarity>{Polarity::Negative});
  // A word ending in "d:" is punctuation, not a frown.
  EXPECT_TRUE(scan_emoticons("he said: fine", table).empty());
}

TEST(EmoticonTable, Validation) {
  EXPECT_THROW(EmoticonTable({":)"}, {":)"}), DataError);
  EXPECT_THROW(EmoticonTable({":"}, {}), DataError);
  EXPECT_THROW(EmoticonTable({":-)))"}, {}), DataError);
  EXPECT_THROW(EmoticonTable({": )"}, {}), DataError);
  EXPECT_THROW(EmoticonTable({":D"}, {":d"}), DataError);
  EXPECT_NO_THROW(EmoticonTable::from_json(nlohmann::json{{"positive", {":)"}}, {"negative", {":("}}}));
  EXPECT_THROW(EmoticonTable::from_json(nlohmann::json{{"positive", {":)"}}}), DataError);
  EXPECT_THROW(EmoticonTable::from_json(nlohmann::json{{"positive", {}}, {"negative", {}}, {"x", {}}}), DataError);
}

TEST(Preprocess, Examples) {
  EXPECT_EQ(preprocess(Tweet{"1", "Got a job interview today!! #excited"}),
            (Tokens{"got", "a", "job", "interview", "today!!"}));
  EXPECT_EQ(preprocess(Tweet{"2", "@Marilyn #excited"}), Tokens{"USERID"});
  EXPECT_EQ(preprocess(Tweet{"3", ""}), Tokens{});
}

// Random strings biased toward the characters the rules care about.
std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "b", "Z", "y", "yyyy", "YYy", "@", "#", "##", "http://", "https://", "www.", "HTTP://", " ", "  ",
      "\t", "\n", ":)", ":(", "d:", ":D", "!", ".", "USERID", "URL", "é", "\xF0\x9F\x98\x80", "\xFF", "\xC3",
      "0", "hello", "wwww."};
  std::string s;
  const std::size_t n = rng.below(16);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
  return s;
}

bool is_raw_url(const std::string& t) {
  std::string lower;
  for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower.rfind("http://", 0) == 0 || lower.rfind("https://", 0) == 0 || lower.rfind("www.", 0) == 0;
}

TEST(PreprocessProperties, NormalizeIsIdempotent) {
  Rng rng(101);
  for (int i = 0; i < 5000; ++i) {
    const std::string s = random_text(rng);
    const std::string once = normalize_text(s);
    EXPECT_EQ(normalize_text(once), once) << "input: " << s;
  }
}

TEST(PreprocessProperties, StripHashtagsIsIdempotentOnItsOutput) {
  Rng rng(102);
  for (int i = 0; i < 5000; ++i) {
    const std::string once = strip_hashtags(normalize_text(random_text(rng)));
    EXPECT_EQ(strip_hashtags(once), once);
  }
}

TEST(PreprocessProperties, NoMarkersOrRawUrlsSurvive) {
  Rng rng(103);
  for (int i = 0; i < 5000; ++i) {
    const std::string s = random_text(rng);
    for (const auto& t : preprocess(s)) {
      ASSERT_FALSE(t.empty());
      EXPECT_NE(t.front(), '@') << "input: " << s;
      EXPECT_NE(t.front(), '#') << "input: " << s;
      EXPECT_FALSE(is_raw_url(t)) << "input: " << s;
    }
  }
}

TEST(PreprocessProperties, TokenRoundTrip) {
  Rng rng(104);
  for (int i = 0; i < 2000; ++i) {
    Tokens tokens = tokenize(random_text(rng));
    std::string joined;
    for (std::size_t k = 0; k < tokens.size(); ++k) joined += (k ? " " : "") + tokens[k];
    EXPECT_EQ(tokenize(joined), tokens);
  }
}

TEST(PreprocessProperties, ArbitraryBytesNeverThrow) {
  Rng rng(105);
  for (int i = 0; i < 5000; ++i) {
    std::string s(rng.below(40), '\0');
    for (char& c : s) c = static_cast<char>(rng.below(256));
    EXPECT_NO_THROW(preprocess(s));
    EXPECT_NO_THROW(scan_emoticons(s, EmoticonTable::defaults()));
  }
}

}  // namespace
}  // namespace emoquad
