#pragma once

// Desk-scale synthetic corpora: a small phrase-structure grammar that emits
// sentences with syntactic trees, DM-style semantic graphs, static toy
// wordpiece embeddings and structure-determined labels.

#include "sift/corpus_io.h"

#include <cstdint>
#include <string>
#include <vector>

namespace sift {

struct GrammarConfig {
    int vocab_size = 48;
    int embedding_dim = 16;
    int max_length = 12;
    /// Semantic roles by position: subject/modifier argument, object,
    /// alternate object, determiner binding.
    std::vector<std::string> relations = {"ARG1", "ARG2", "ARG3", "BV"};
    /// Label = graph contains an edge with this relation.
    std::string label_relation = "ARG3";
    /// Probability that the verb's object is attached with the alternate
    /// object role. Drawn independently of the surface words.
    double alternate_object_rate = 0.5;
    double adjective_rate = 0.4;
    double pp_rate = 0.5;
    /// Sentence-pair tasks: label = both sentences carry label_relation.
    bool pair = false;
};

GrammarConfig grammar_from_json(const nlohmann::json& j);
nlohmann::json grammar_to_json(const GrammarConfig& g);

struct SyntheticCorpus {
    Corpus corpus;
    std::vector<int> labels;  // parallel to corpus.records
};

/// Deterministic under seed. Throws ValidationError on a degenerate config
/// (vocabulary too small for the five word classes, fewer than four
/// relations, label relation outside the set, max_length below 6).
SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, int n_sentences,
                                          const GrammarConfig& config);

/// Classification task over synthetic sentences (pairs when config.pair).
/// Categories tag prepositional attachment: "pp/verb", "pp/noun", "no_pp".
TaskDataset generate_synthetic_task(std::uint64_t seed, int n_examples,
                                    const GrammarConfig& config);

/// True when g has an edge labeled `relation`.
bool has_relation(const SemanticGraph& g, int relation);

} // namespace sift
