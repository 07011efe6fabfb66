#include <gtest/gtest.h>

#include "chainrec/text.hpp"
#include "oracles.hpp"

namespace chainrec {
namespace {

TEST(Tokenize, SplitsOnAsciiPunctuationAndFolds) {
  EXPECT_EQ(tokenize("ResNet-50, on ImageNet!"),
            (std::vector<std::string>{"resnet", "50", "on", "imagenet"}));
  EXPECT_TRUE(tokenize("  ,;  ").empty());
}

TEST(Tokenize, KeepsUtf8Bytes) {
  EXPECT_EQ(tokenize("Café über"), (std::vector<std::string>{"café", "über"}));
}

TEST(MentionTokens, SplitsSeparatorsAndStripsEdges) {
  EXPECT_EQ(mention_tokens("Graph-Net_v2/base, (RoBERTa)."),
            (std::vector<std::string>{"graph", "net", "v2", "base", "roberta"}));
}

TEST(Fnv1a, MatchesIndependentImplementation) {
  for (const std::string s : {"", "a", "b", "foobar", "sigb001a", "über"}) {
    EXPECT_EQ(fnv1a64(s), testing::fnv1a64_oracle(s)) << s;
  }
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(TruncateUtf8, NeverSplitsASequence) {
  const std::string s = "ab\xC3\xA9";  // "abé"
  EXPECT_EQ(truncate_utf8(s, 4), s);
  EXPECT_EQ(truncate_utf8(s, 3), "ab");
  EXPECT_EQ(truncate_utf8(s, 2), "ab");
  EXPECT_EQ(truncate_utf8("\xE2\x82\xAC", 2), "");
}

TEST(Trim, RemovesSurroundingWhitespace) {
  EXPECT_EQ(trim("  x y \n"), "x y");
  EXPECT_EQ(trim("   "), "");
}

TEST(Join, UsesSeparator) {
  EXPECT_EQ(join({"a", "b", "c"}, " > "), "a > b > c");
  EXPECT_EQ(join({}, ","), "");
}

}  // namespace
}  // namespace chainrec
