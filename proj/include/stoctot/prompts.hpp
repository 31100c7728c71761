#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stoctot/corpus.hpp"
#include "stoctot/vocab.hpp"

namespace stoctot {

enum class TemplateName {
    subquestion_gen,
    constrained_answer,
    paraphrase_check,
    validity_estimate,
    final_answer,
    vanilla,
    cot,
    tot_vote,
    // not part of the core template set: used for the answerability probe and
    // for constraint mode `off`, where the vocabulary-bank wording would lie
    answerable_probe,
    plain_answer,
    plain_final,
};

enum class DemoFlavor { comparison_demo, bridge_demo, both };

std::string to_string(TemplateName name);
std::string to_string(DemoFlavor flavor);

struct PromptTemplate {
    TemplateName name = TemplateName::vanilla;
    DemoFlavor demo_flavor = DemoFlavor::both;
    std::string body;                       // literal text with {placeholder} slots
    std::vector<std::string> placeholders;  // parsed from body at load time
};

// Shipped templates plus optional per-file overrides from a config directory.
class TemplateRegistry {
public:
    // the embedded defaults
    static TemplateRegistry builtin();
    // defaults with any `<template>.txt` files in dir replacing the shipped body
    static TemplateRegistry with_overrides(const std::string& dir);

    const PromptTemplate& get(TemplateName name, DemoFlavor flavor = DemoFlavor::both) const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

using Bindings = std::map<std::string, std::string>;

// Literal substitution. Throws TemplateError naming the first unbound placeholder.
std::string render(const PromptTemplate& tpl, const Bindings& bindings);

// One "title: sentences" line per passage, input order.
std::string render_evidence(const std::vector<EvidencePassage>& evidence);

// Comma-separated sorted word list.
std::string render_bank(const VocabularyBank& bank);

// Every "Sub Question <level>-<index>:" span, order preserved, exact-match
// deduplicated. Empty list when nothing matches.
std::vector<std::string> parse_subquestions(std::string_view reply);

struct ParsedProbability {
    std::optional<double> value; // nullopt = no number found
    bool clamped = false;        // out-of-range input pulled back into [0,1]
};

// First number in the reply as a probability; accepts 0.8, 80%, and 8/10.
ParsedProbability parse_probability(std::string_view reply);

// Leading yes/no after stripping punctuation; nullopt when neither.
std::optional<bool> parse_yes_no(std::string_view reply);

} // namespace stoctot
