#pragma once

// Corpus and dataset ingestion: SemEval SDP blocks, CoNLL dependency trees,
// the canonical JSON-lines interchange format, task TSV files with their
// graph/embedding sidecars, and parser-token to wordpiece alignment.

#include "sift/graph.h"
#include "sift/tensor.h"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sift {

struct Token {
    std::string form;
    int start = 0;  // character offsets into Sentence::text, end exclusive
    int end = 0;
    // SDP annotation columns, carried through round trips.
    std::string lemma;
    std::string pos;
    std::string frame;
    bool predicate = false;

    bool operator==(const Token&) const = default;
};

struct Sentence {
    std::string id;
    std::string text;
    std::vector<Token> tokens;

    bool operator==(const Sentence&) const = default;
};

/// Builds a sentence whose text is the forms joined by single spaces.
Sentence sentence_from_forms(const std::vector<std::string>& forms);

struct Wordpiece {
    std::string text;
    int start = 0;
    int end = 0;

    /// Boundary pieces (sequence start/end markers) have empty spans.
    bool special() const { return start == end; }
    bool operator==(const Wordpiece&) const = default;
};

struct WordpieceSequence {
    std::vector<Wordpiece> pieces;
};

/// spans[t] = inclusive wordpiece range [first, last] aligned to token t.
struct TokenAlignment {
    std::vector<std::pair<int, int>> spans;

    bool operator==(const TokenAlignment&) const = default;
};

/// Maps each token to every wordpiece whose span overlaps it. Throws
/// ValidationError when a token overlaps no wordpiece.
TokenAlignment align_tokens(const Sentence& s, const WordpieceSequence& w);

struct EmbeddingSequence {
    num::Matrix vectors;        // pieces × dim
    num::RowVector pooled;      // sequence summary, 1 × dim
    int dim = 0;
    std::vector<Wordpiece> pieces;

    WordpieceSequence wordpieces() const { return {pieces}; }
};

/// Syntactic tree, CoNLL style: heads[i] is the 1-based head of token i,
/// 0 for the root.
struct DependencyTree {
    std::vector<int> heads;
    std::vector<std::string> labels;

    bool operator==(const DependencyTree&) const = default;
};

/// Throws ValidationError on out-of-range heads or cycles.
void check_tree(const DependencyTree& tree);

/// Tree as a graph with a virtual root at node 0: edges (head, i + 1, label).
SemanticGraph tree_to_graph(const DependencyTree& tree, RelationVocab& vocab);

struct CorpusRecord {
    Sentence sentence;
    SemanticGraph graph;
    std::optional<EmbeddingSequence> embedding;
    std::optional<DependencyTree> tree;
    std::optional<int> label;
    std::string category;
};

struct Corpus {
    RelationVocab relations;
    std::vector<CorpusRecord> records;
};

// --- SDP -------------------------------------------------------------------

/// Reads SemEval 2015 SDP blocks (ID FORM LEMMA POS TOP PRED FRAME ARGS...).
/// Labels extend a fresh vocabulary in order of first appearance.
Corpus read_sdp(const std::string& path);
/// As above; labels outside `fixed` are errors.
Corpus read_sdp(const std::string& path, const RelationVocab& fixed);
Corpus parse_sdp(std::istream& in, const RelationVocab* fixed = nullptr);

void write_sdp(const std::string& path, const Corpus& corpus);
void format_sdp(std::ostream& out, const Corpus& corpus);

// --- CoNLL trees -----------------------------------------------------------

/// Reads CoNLL-X/U rows (ID FORM LEMMA CPOS POS FEATS HEAD DEPREL ...).
/// Each record's graph carries the virtual root at node 0; `tree` is set.
Corpus read_dependency_trees(const std::string& path);
Corpus parse_dependency_trees(std::istream& in);

// --- canonical JSONL -------------------------------------------------------

std::string encode_f32(const num::Matrix& m);
num::Matrix decode_f32(const std::string& b64, Eigen::Index rows, Eigen::Index cols);
std::string encode_f64(const num::Matrix& m);
num::Matrix decode_f64(const std::string& b64, Eigen::Index rows, Eigen::Index cols);

nlohmann::json record_to_json(const CorpusRecord& r, const RelationVocab& vocab);
/// `grow` lets unknown edge labels extend vocab; otherwise they are errors.
CorpusRecord record_from_json(const nlohmann::json& j, RelationVocab& vocab, bool grow);

Corpus read_jsonl(const std::string& path);
Corpus read_jsonl(const std::string& path, const RelationVocab& fixed);
void write_jsonl(const std::string& path, const Corpus& corpus);

/// Embeddings only, from a canonical JSONL file. Checks that dim is
/// constant, values are finite and piece counts match the vectors.
std::vector<EmbeddingSequence> read_embeddings(const std::string& path);
EmbeddingSequence embedding_from_json(const nlohmann::json& j);

// --- task datasets ---------------------------------------------------------

enum class TaskType { classification, regression };

struct TaskSchema {
    TaskType type = TaskType::classification;
    bool pair = false;
    std::vector<std::string> labels;      // classification only
    std::vector<std::string> categories;  // optional declared tag set

    int num_classes() const { return static_cast<int>(labels.size()); }
    int output_dim() const { return type == TaskType::classification ? num_classes() : 1; }
    bool operator==(const TaskSchema&) const = default;
};

/// Directive line form: "# type=classification pair=false labels=a,b".
TaskSchema parse_schema_directive(const std::string& line);
std::string format_schema_directive(const TaskSchema& schema);

struct TaskSide {
    Sentence sentence;
    std::optional<SemanticGraph> graph;
    std::optional<EmbeddingSequence> embedding;
};

struct TaskExample {
    TaskSide a;
    std::optional<TaskSide> b;
    int label = -1;        // classification
    double target = 0.0;   // regression
    std::string category;
};

struct TaskDataset {
    TaskSchema schema;
    RelationVocab relations;
    std::vector<TaskExample> examples;
};

/// Path of the sidecar JSONL holding per-row graphs and embeddings.
std::string sidecar_path(const std::string& tsv_path);

/// Reads a task TSV (directive line, header row, rows) and its sidecar when
/// present. Relation labels extend `relations` unless `fixed` is set.
TaskDataset read_task_dataset(const std::string& path, const RelationVocab* fixed = nullptr);
/// As above, and the directive must agree with `expected`.
TaskDataset read_task_dataset(const std::string& path, const TaskSchema& expected,
                              const RelationVocab* fixed = nullptr);

void write_task_dataset(const std::string& path, const TaskDataset& data);

} // namespace sift
