#include <doctest.h>

#include "stoctot/text.hpp"
#include "stoctot/vocab.hpp"

#include "support/test_util.hpp"

#include <set>

using namespace stoctot;
using stoctot::testing::TempDir;

TEST_CASE("normalize_word strips surrounding punctuation only") {
    CHECK(normalize_word("Vegas,") == "vegas");
    CHECK(normalize_word("1992-93") == "1992-93");
    CHECK(normalize_word("—") == std::nullopt); // em-dash alone
    CHECK(normalize_word("(Tokyo)") == "tokyo");
    CHECK(normalize_word("don't") == "don't");
    CHECK(normalize_word("``quoted''") == "quoted");
    CHECK(normalize_word("") == std::nullopt);
    CHECK(normalize_word("...") == std::nullopt);
}

TEST_CASE("the shipped stoplist is pinned") {
    const std::set<std::string>& stoplist = default_stoplist();
    CHECK(stoplist.size() == 127);
    for (const char* w : {"were", "and", "of", "the", "same", "a", "an", "to", "until"}) {
        CHECK(stoplist.count(w) == 1);
    }
    CHECK(stoplist.count("nationality") == 0);
    CHECK(stoplist.count("country") == 0);
}

TEST_CASE("the shipped stoplist file matches the embedded copy") {
    std::set<std::string> from_file =
        load_stoplist(std::string(STOCTOT_SOURCE_DIR) + "/data/stopwords_en.txt");
    CHECK(from_file == default_stoplist());
}

TEST_CASE("stoplist files support comments and blank lines") {
    TempDir dir("stoplist");
    std::string path = dir.file("stop.txt", "# comment\nfoo\n\nbar # trailing\n");
    std::set<std::string> words = load_stoplist(path);
    CHECK(words == std::set<std::string>{"foo", "bar"});
}

TEST_CASE("build_bank over the comparison question") {
    // hand-split word list of the question, shipped stoplist applied by hand:
    // were/and/of/the/same drop out, the five content words remain
    VocabularyBank bank =
        build_bank("t4", "Were Scott Derrickson and Ed Wood of the same nationality?", {},
                   default_stoplist());
    std::set<std::string> expected{"scott", "derrickson", "ed", "wood", "nationality"};
    CHECK(bank.words == expected);
}

TEST_CASE("build_bank corner cases") {
    SUBCASE("everything filtered leaves an empty bank") {
        VocabularyBank bank = build_bank("x", "A", {}, {"a"});
        CHECK(bank.words.empty());
    }
    SUBCASE("question and evidence words deduplicate") {
        std::vector<EvidencePassage> evidence{{"Tokyo", {"Tokyo is in Japan."}}};
        VocabularyBank bank = build_bank("x", "Where is Tokyo?", evidence, default_stoplist());
        CHECK(bank.words.count("tokyo") == 1);
        CHECK(bank.words.count("japan") == 1);
    }
    SUBCASE("numerals survive even a stoplist that names them") {
        VocabularyBank bank = build_bank("x", "In 1974 something happened", {}, {"1974", "in"});
        CHECK(bank.words.count("1974") == 1);
        CHECK(bank.words.count("in") == 0);
    }
    SUBCASE("evidence order does not matter") {
        std::vector<EvidencePassage> ab{{"A", {"alpha beta"}}, {"B", {"gamma"}}};
        std::vector<EvidencePassage> ba{{"B", {"gamma"}}, {"A", {"alpha beta"}}};
        CHECK(build_bank("x", "q?", ab, default_stoplist()).words ==
              build_bank("x", "q?", ba, default_stoplist()).words);
    }
}

TEST_CASE("contains normalizes, honors numerals, rejects absences") {
    VocabularyBank bank;
    bank.words = {"vegas"};
    CHECK(contains(bank, "Vegas,"));
    CHECK_FALSE(contains(bank, "paris"));
    VocabularyBank empty;
    CHECK(contains(empty, "1974"));
    CHECK(contains(empty, "1992-93"));
    CHECK_FALSE(contains(empty, "words"));
}

TEST_CASE("violation_report lists out-of-bank words in order") {
    VocabularyBank bank;
    bank.words = {"remote", "keyboard", "function", "keys"};
    CHECK(violation_report(bank, "siri remote") == std::vector<std::string>{"siri"});
    CHECK(violation_report(bank, "keyboard function keys").empty());
    CHECK(violation_report(bank, "").empty());
    CHECK(violation_report(bank, "keyboard — keys").empty()); // separators skipped
    CHECK(violation_report(bank, "1969 to 1974") == std::vector<std::string>{"to"});
}

TEST_CASE("bank round-trip: every member passes contains") {
    std::vector<EvidencePassage> evidence{
        {"Jackie Chan", {"Jackie Chan received the 2016 Academy Honorary Award."}},
        {"Rush Hour (film)", {"Rush Hour stars Jackie Chan and Chris Tucker."}}};
    VocabularyBank bank = build_bank("f1", "Which movie?", evidence, default_stoplist());
    CHECK_FALSE(bank.words.empty());
    for (const auto& w : bank.words) {
        CHECK(contains(bank, w));
        bool stop_free = default_stoplist().count(w) == 0 || text::is_numeral(w);
        CHECK(stop_free);
    }
    CHECK(violation_report(bank, "Rush Hour").empty());
}

TEST_CASE("bank digest tracks content") {
    VocabularyBank a;
    a.words = {"x", "y"};
    a.stoplist_id = "en-127";
    VocabularyBank b = a;
    CHECK(bank_digest(a) == bank_digest(b));
    b.words.insert("z");
    CHECK(bank_digest(a) != bank_digest(b));
}
