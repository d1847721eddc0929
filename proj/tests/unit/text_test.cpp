/*
 * Copyright 2026 The TaxoRAG Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "taxorag/text.hpp"

#include <gtest/gtest.h>

namespace taxorag::text {
namespace {

TEST(Text, Trim) {
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(trim(" \t "), "");
}

TEST(Text, SplitWhitespaceSkipsRuns) {
    const auto parts = split_whitespace("  a\t\tb\nc  ");
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0], "a");
    EXPECT_EQ(parts[2], "c");
    EXPECT_TRUE(split_whitespace("   ").empty());
}

TEST(Text, CollapseWhitespace) { EXPECT_EQ(collapse_whitespace("  a \n\n b\tc "), "a b c"); }

TEST(Text, CaseFoldingIsFull) {
    EXPECT_EQ(nfc_casefold("Stra\xC3\x9F" "e"), "strasse");
    EXPECT_EQ(nfc_casefold("ABC"), "abc");
}

TEST(Text, ControlCharacters) {
    EXPECT_TRUE(has_control_chars("a\x01"));
    EXPECT_TRUE(has_control_chars("a\x7f"));
    EXPECT_TRUE(has_control_chars("a\xC2\x85"));
    EXPECT_FALSE(has_control_chars("Argiope bruennichi"));
    EXPECT_FALSE(has_control_chars("\xC3\xA9"));
}

TEST(Text, Sentences) {
    const auto s = sentences("First one.  Second\n one!  Third? tail");
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0], "First one.");
    EXPECT_EQ(s[1], "Second one!");
    EXPECT_EQ(s[2], "Third?");
    EXPECT_EQ(s[3], "tail");
    EXPECT_EQ(sentences("e.g.x stays whole.").size(), 1u);
    EXPECT_TRUE(sentences("  ").empty());
}

TEST(Text, LinesDropCarriageReturns) {
    const auto l = lines("a\r\nb\n\nc");
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0], "a");
    EXPECT_EQ(l[2], "");
    EXPECT_EQ(l[3], "c");
}

TEST(Text, StartsWithIcase) {
    EXPECT_TRUE(starts_with_icase("References", "refer"));
    EXPECT_FALSE(starts_with_icase("Ref", "references"));
}

}  // namespace
}  // namespace taxorag::text
