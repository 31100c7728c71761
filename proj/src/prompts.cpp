#include "stoctot/prompts.hpp"

#include "stoctot/errors.hpp"
#include "stoctot/text.hpp"
#include "stoctot/embedded_data.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

namespace stoctot {

namespace {

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

std::vector<std::string> scan_placeholders(std::string_view body) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < body.size(); i++) {
        if (body[i] != '{') {
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && is_placeholder_char(body[j])) {
            j++;
        }
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            std::string name(body.substr(i + 1, j - i - 1));
            if (seen.insert(name).second) {
                out.push_back(std::move(name));
            }
            i = j;
        }
    }
    return out;
}

std::string strip_trailing_newlines(std::string_view s) {
    std::size_t e = s.size();
    while (e > 0 && (s[e - 1] == '\n' || s[e - 1] == '\r')) {
        e--;
    }
    return std::string(s.substr(0, e));
}

PromptTemplate make_template(TemplateName name, DemoFlavor flavor, std::string_view body) {
    PromptTemplate tpl;
    tpl.name = name;
    tpl.demo_flavor = flavor;
    tpl.body = strip_trailing_newlines(body);
    tpl.placeholders = scan_placeholders(tpl.body);
    return tpl;
}

std::string registry_key(TemplateName name, DemoFlavor flavor) {
    if (name == TemplateName::subquestion_gen) {
        switch (flavor) {
            case DemoFlavor::comparison_demo: return "subquestion_gen_comparison";
            case DemoFlavor::bridge_demo: return "subquestion_gen_bridge";
            case DemoFlavor::both: return "subquestion_gen_both";
        }
    }
    return to_string(name);
}

} // namespace

std::string to_string(TemplateName name) {
    switch (name) {
        case TemplateName::subquestion_gen: return "subquestion_gen";
        case TemplateName::constrained_answer: return "constrained_answer";
        case TemplateName::paraphrase_check: return "paraphrase_check";
        case TemplateName::validity_estimate: return "validity_estimate";
        case TemplateName::final_answer: return "final_answer";
        case TemplateName::vanilla: return "vanilla";
        case TemplateName::cot: return "cot";
        case TemplateName::tot_vote: return "tot_vote";
        case TemplateName::answerable_probe: return "answerable_probe";
        case TemplateName::plain_answer: return "plain_answer";
        case TemplateName::plain_final: return "plain_final";
    }
    return "unknown";
}

std::string to_string(DemoFlavor flavor) {
    switch (flavor) {
        case DemoFlavor::comparison_demo: return "comparison";
        case DemoFlavor::bridge_demo: return "bridge";
        case DemoFlavor::both: return "both";
    }
    return "both";
}

TemplateRegistry TemplateRegistry::builtin() {
    TemplateRegistry reg;
    auto put = [&reg](TemplateName name, DemoFlavor flavor, std::string_view body) {
        reg.templates_[registry_key(name, flavor)] = make_template(name, flavor, body);
    };
    put(TemplateName::subquestion_gen, DemoFlavor::both, embedded::tpl_subquestion_gen_both);
    put(TemplateName::subquestion_gen, DemoFlavor::comparison_demo,
        embedded::tpl_subquestion_gen_comparison);
    put(TemplateName::subquestion_gen, DemoFlavor::bridge_demo,
        embedded::tpl_subquestion_gen_bridge);
    put(TemplateName::constrained_answer, DemoFlavor::both, embedded::tpl_constrained_answer);
    put(TemplateName::plain_answer, DemoFlavor::both, embedded::tpl_plain_answer);
    put(TemplateName::paraphrase_check, DemoFlavor::both, embedded::tpl_paraphrase_check);
    put(TemplateName::validity_estimate, DemoFlavor::both, embedded::tpl_validity_estimate);
    put(TemplateName::final_answer, DemoFlavor::both, embedded::tpl_final_answer);
    put(TemplateName::plain_final, DemoFlavor::both, embedded::tpl_plain_final);
    put(TemplateName::answerable_probe, DemoFlavor::both, embedded::tpl_answerable_probe);
    put(TemplateName::vanilla, DemoFlavor::both, embedded::tpl_vanilla);
    put(TemplateName::cot, DemoFlavor::both, embedded::tpl_cot);
    put(TemplateName::tot_vote, DemoFlavor::both, embedded::tpl_tot_vote);
    return reg;
}

TemplateRegistry TemplateRegistry::with_overrides(const std::string& dir) {
    TemplateRegistry reg = builtin();
    for (auto& [key, tpl] : reg.templates_) {
        std::filesystem::path p = std::filesystem::path(dir) / (key + ".txt");
        if (!std::filesystem::exists(p)) {
            continue;
        }
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            throw Error("cannot open template override: " + p.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        tpl = make_template(tpl.name, tpl.demo_flavor, ss.str());
    }
    return reg;
}

const PromptTemplate& TemplateRegistry::get(TemplateName name, DemoFlavor flavor) const {
    auto it = templates_.find(registry_key(name, flavor));
    if (it == templates_.end()) {
        throw Error("no such template: " + registry_key(name, flavor));
    }
    return it->second;
}

std::string render(const PromptTemplate& tpl, const Bindings& bindings) {
    const std::string& body = tpl.body;
    std::unordered_set<std::string> known(tpl.placeholders.begin(), tpl.placeholders.end());

    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); i++) {
        if (body[i] == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_placeholder_char(body[j])) {
                j++;
            }
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                std::string name(body.substr(i + 1, j - i - 1));
                if (known.count(name) != 0) {
                    auto it = bindings.find(name);
                    if (it == bindings.end()) {
                        throw TemplateError("template " + to_string(tpl.name) +
                                                ": missing binding for placeholder `" + name + "`",
                                            name);
                    }
                    out += it->second;
                    i = j;
                    continue;
                }
            }
        }
        out.push_back(body[i]);
    }
    return out;
}

std::string render_evidence(const std::vector<EvidencePassage>& evidence) {
    std::string out;
    for (std::size_t i = 0; i < evidence.size(); i++) {
        if (i > 0) {
            out.push_back('\n');
        }
        out += evidence[i].title;
        out += ": ";
        out += text::join(evidence[i].sentences, " ");
    }
    return out;
}

std::string render_bank(const VocabularyBank& bank) {
    std::string out;
    bool first = true;
    for (const auto& w : bank.words) { // std::set: already sorted
        if (!first) {
            out += ", ";
        }
        out += w;
        first = false;
    }
    return out;
}

std::vector<std::string> parse_subquestions(std::string_view reply) {
    static const std::regex marker(R"(Sub Question\s+\d+\s*-\s*\d+\s*:)");

    std::vector<std::pair<std::size_t, std::size_t>> spans; // (match begin, match end)
    auto begin = std::cregex_iterator(reply.data(), reply.data() + reply.size(), marker);
    for (auto it = begin; it != std::cregex_iterator(); ++it) {
        spans.emplace_back(static_cast<std::size_t>(it->position()),
                           static_cast<std::size_t>(it->position() + it->length()));
    }

    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (std::size_t k = 0; k < spans.size(); k++) {
        std::size_t start = spans[k].second;
        std::size_t end = (k + 1 < spans.size()) ? spans[k + 1].first : reply.size();
        std::string_view span = reply.substr(start, end - start);

        // a question ends at the next marker, newline, or "Thought"
        std::size_t cut = span.size();
        if (std::size_t nl = span.find('\n'); nl != std::string_view::npos) {
            cut = std::min(cut, nl);
        }
        if (std::size_t th = span.find("Thought"); th != std::string_view::npos) {
            cut = std::min(cut, th);
        }
        std::string_view piece = text::trim(span.substr(0, cut));
        // models (and the shipped demos) sometimes wrap questions in quotes
        while (!piece.empty() && (piece.front() == '"' || piece.front() == '\'')) {
            piece.remove_prefix(1);
        }
        while (!piece.empty() && (piece.back() == '"' || piece.back() == '\'')) {
            piece.remove_suffix(1);
        }
        std::string q(text::trim(piece));
        if (q.empty()) {
            continue;
        }
        if (seen.insert(q).second) {
            out.push_back(std::move(q));
        }
    }
    return out;
}

ParsedProbability parse_probability(std::string_view reply) {
    static const std::regex number(R"(-?(\d+(\.\d*)?|\.\d+))");

    std::cmatch m;
    if (!std::regex_search(reply.data(), reply.data() + reply.size(), m, number)) {
        return {};
    }
    double value = std::stod(m.str());
    std::size_t after = static_cast<std::size_t>(m.position() + m.length());

    while (after < reply.size() && reply[after] == ' ') {
        after++;
    }
    ParsedProbability result;
    if (after < reply.size() && reply[after] == '%') {
        value /= 100.0;
    } else if (after < reply.size() && reply[after] == '/') {
        std::size_t d0 = after + 1;
        while (d0 < reply.size() && reply[d0] == ' ') {
            d0++;
        }
        std::cmatch denom;
        const char* rest = reply.data() + d0;
        if (std::regex_search(rest, reply.data() + reply.size(), denom, number) &&
            denom.position() == 0) {
            double d = std::stod(denom.str());
            if (d > 0) {
                value /= d;
            }
        }
    }
    if (value < 0.0) {
        value = 0.0;
        result.clamped = true;
    } else if (value > 1.0) {
        value = 1.0;
        result.clamped = true;
    }
    result.value = value;
    return result;
}

std::optional<bool> parse_yes_no(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size() &&
           !std::isalpha(static_cast<unsigned char>(reply[i]))) {
        i++;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isalpha(static_cast<unsigned char>(reply[j]))) {
        j++;
    }
    std::string word = text::lower(reply.substr(i, j - i));
    if (word == "yes") {
        return true;
    }
    if (word == "no") {
        return false;
    }
    return std::nullopt;
}

} // namespace stoctot
