#include "stoctot/vocab.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"
#include "stoctot/text.hpp"
#include "stoctot/embedded_data.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <sstream>

namespace stoctot {

namespace {

std::set<std::string> parse_stoplist(std::string_view content) {
    std::set<std::string> out;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::string_view line =
            content.substr(pos, eol == std::string_view::npos ? content.size() - pos : eol - pos);
        pos = (eol == std::string_view::npos) ? content.size() + 1 : eol + 1;

        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (!line.empty()) {
            out.emplace(line);
        }
    }
    return out;
}

void add_words(std::set<std::string>& words, std::string_view chunk,
               const std::set<std::string>& stoplist) {
    for (const std::string& raw : text::split_whitespace(chunk)) {
        std::optional<std::string> w = normalize_word(raw);
        if (!w.has_value()) {
            continue;
        }
        // numerals stay in the bank even when stoplisted
        if (stoplist.count(*w) != 0 && !text::is_numeral(*w)) {
            continue;
        }
        words.insert(std::move(*w));
    }
}

} // namespace

std::optional<std::string> normalize_word(std::string_view raw) {
    std::string lowered = text::lower_nfc(raw);
    icu::UnicodeString us = icu::UnicodeString::fromUTF8(lowered);

    // keep the span from the first to the last alphanumeric codepoint
    int32_t first = -1;
    int32_t last = -1;
    for (int32_t i = 0; i < us.length();) {
        UChar32 c = us.char32At(i);
        int32_t next = i + U16_LENGTH(c);
        if (u_isalnum(c)) {
            if (first < 0) {
                first = i;
            }
            last = next;
        }
        i = next;
    }
    if (first < 0) {
        return std::nullopt;
    }
    icu::UnicodeString kept = us.tempSubStringBetween(first, last);
    std::string out;
    kept.toUTF8String(out);
    return out;
}

const std::set<std::string>& default_stoplist() {
    static const std::set<std::string> list = parse_stoplist(embedded::stopwords_en);
    return list;
}

std::set<std::string> load_stoplist(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open stoplist: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_stoplist(ss.str());
}

VocabularyBank build_bank(std::string_view source_question_id, std::string_view question,
                          const std::vector<EvidencePassage>& evidence,
                          const std::set<std::string>& stoplist, std::string_view stoplist_id) {
    VocabularyBank bank;
    bank.source_question_id = std::string(source_question_id);
    bank.stoplist_id = std::string(stoplist_id);

    add_words(bank.words, question, stoplist);
    for (const auto& passage : evidence) {
        add_words(bank.words, passage.title, stoplist);
        for (const auto& sentence : passage.sentences) {
            add_words(bank.words, sentence, stoplist);
        }
    }
    return bank;
}

bool contains(const VocabularyBank& bank, std::string_view candidate) {
    std::optional<std::string> w = normalize_word(candidate);
    if (!w.has_value()) {
        return false;
    }
    if (text::is_numeral(*w)) {
        return true;
    }
    return bank.words.count(*w) != 0;
}

std::vector<std::string> violation_report(const VocabularyBank& bank, std::string_view answer) {
    std::vector<std::string> violations;
    for (const std::string& raw : text::split_whitespace(answer)) {
        std::optional<std::string> w = normalize_word(raw);
        if (!w.has_value()) {
            continue; // pure punctuation is a separator, not a word
        }
        if (text::is_numeral(*w) || bank.words.count(*w) != 0) {
            continue;
        }
        violations.push_back(std::move(*w));
    }
    return violations;
}

std::string bank_digest(const VocabularyBank& bank) {
    std::string buf = bank.stoplist_id;
    buf.push_back('\n');
    for (const auto& w : bank.words) {
        buf += w;
        buf.push_back('\n');
    }
    return sha256_hex(buf);
}

} // namespace stoctot
