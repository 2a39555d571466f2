#include "sift/corpus_io.h"

#include "sift/error.h"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace sift {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write " + path);
    return out;
}

int parse_int(const std::string& s, const std::string& what)
{
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("expected an integer for " + what + ", got '" + s + "'");
    }
}

std::string b64_encode(const unsigned char* bytes, std::size_t n)
{
    std::string out(sodium_base64_ENCODED_LEN(n, sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes, n, sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

std::vector<unsigned char> b64_decode(const std::string& s)
{
    std::vector<unsigned char> out(s.size() / 4 * 3 + 3);
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), s.data(), s.size(), nullptr, &len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0)
        throw ValidationError("malformed base64 payload");
    out.resize(len);
    return out;
}

template <typename T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <typename T>
std::string encode_as(const num::Matrix& m)
{
    std::vector<T> buf(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i)
        buf[static_cast<std::size_t>(i)] = to_little(static_cast<T>(m.data()[i]));
    return b64_encode(reinterpret_cast<const unsigned char*>(buf.data()), buf.size() * sizeof(T));
}

template <typename T>
num::Matrix decode_as(const std::string& b64, Eigen::Index rows, Eigen::Index cols)
{
    const auto bytes = b64_decode(b64);
    if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(T))
        throw ValidationError("tensor payload holds " + std::to_string(bytes.size() / sizeof(T)) +
                              " values, expected " + std::to_string(rows * cols));
    num::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        T v;
        std::memcpy(&v, bytes.data() + static_cast<std::size_t>(i) * sizeof(T), sizeof(T));
        m.data()[i] = static_cast<double>(to_little(v));
    }
    if (!m.allFinite())
        throw ValidationError("non-finite value in tensor payload");
    return m;
}

} // namespace

Sentence sentence_from_forms(const std::vector<std::string>& forms)
{
    Sentence s;
    for (const auto& f : forms) {
        if (!s.text.empty())
            s.text += ' ';
        Token t;
        t.form = f;
        t.start = static_cast<int>(s.text.size());
        s.text += f;
        t.end = static_cast<int>(s.text.size());
        s.tokens.push_back(std::move(t));
    }
    return s;
}

TokenAlignment align_tokens(const Sentence& s, const WordpieceSequence& w)
{
    TokenAlignment a;
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
        const Token& tok = s.tokens[t];
        int first = -1, last = -1;
        for (std::size_t j = 0; j < w.pieces.size(); ++j) {
            const Wordpiece& p = w.pieces[j];
            if (p.special())
                continue;
            if (p.start < tok.end && tok.start < p.end) {
                if (first < 0)
                    first = static_cast<int>(j);
                last = static_cast<int>(j);
            }
        }
        if (first < 0)
            throw ValidationError("token " + std::to_string(t) + " ('" + tok.form +
                                  "') overlaps no wordpiece");
        a.spans.emplace_back(first, last);
    }
    return a;
}

void check_tree(const DependencyTree& tree)
{
    const int n = static_cast<int>(tree.heads.size());
    if (tree.labels.size() != tree.heads.size())
        throw ValidationError("tree has a label count different from its head count");
    for (int i = 0; i < n; ++i) {
        const int h = tree.heads[static_cast<std::size_t>(i)];
        if (h < 0 || h > n)
            throw ValidationError("head index " + std::to_string(h) + " out of range");
        if (h == i + 1)
            throw ValidationError("cycle detected: token " + std::to_string(i + 1) +
                                  " heads itself");
    }
    // Every chain of heads must reach the root within n steps.
    for (int i = 0; i < n; ++i) {
        int cur = i + 1;
        for (int steps = 0; cur != 0; ++steps) {
            if (steps > n)
                throw ValidationError("cycle detected through token " + std::to_string(i + 1));
            cur = tree.heads[static_cast<std::size_t>(cur - 1)];
        }
    }
}

SemanticGraph tree_to_graph(const DependencyTree& tree, RelationVocab& vocab)
{
    check_tree(tree);
    SemanticGraph g;
    g.num_nodes = static_cast<int>(tree.heads.size()) + 1;
    for (std::size_t i = 0; i < tree.heads.size(); ++i)
        g.edges.push_back({tree.heads[i], static_cast<int>(i) + 1, vocab.add(tree.labels[i])});
    return validate_graph(std::move(g), vocab);
}

// --- SDP ---------------------------------------------------------------------

namespace {

int relation_for(const std::string& label, RelationVocab& vocab, const RelationVocab* fixed)
{
    if (fixed)
        return fixed->index(label);
    return vocab.add(label);
}

} // namespace

Corpus parse_sdp(std::istream& in, const RelationVocab* fixed)
{
    Corpus corpus;
    if (fixed)
        corpus.relations = *fixed;
    std::vector<std::vector<std::string>> rows;
    std::string pending_id;
    std::size_t line_no = 0;

    auto flush = [&]() {
        if (rows.empty())
            return;
        const std::size_t arity = rows.front().size();
        std::vector<int> preds;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != arity)
                throw ValidationError("SDP block near line " + std::to_string(line_no) +
                                      ": malformed row arity");
            if (rows[i][5] == "+")
                preds.push_back(static_cast<int>(i));
        }
        if (arity != 7 + preds.size())
            throw ValidationError("SDP block near line " + std::to_string(line_no) + ": " +
                                  std::to_string(arity - 7) + " argument columns for " +
                                  std::to_string(preds.size()) + " predicates");
        CorpusRecord rec;
        std::vector<std::string> forms;
        for (const auto& r : rows)
            forms.push_back(r[1]);
        rec.sentence = sentence_from_forms(forms);
        rec.sentence.id = pending_id;
        rec.graph.num_nodes = static_cast<int>(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (parse_int(r[0], "SDP ID") != static_cast<int>(i) + 1)
                throw ValidationError("SDP IDs must run 1..n within a block");
            Token& tok = rec.sentence.tokens[i];
            auto field = [](const std::string& c) { return c == "_" ? std::string{} : c; };
            tok.lemma = field(r[2]);
            tok.pos = field(r[3]);
            tok.frame = field(r[6]);
            tok.predicate = r[5] == "+";
            if (r[4] != "+" && r[4] != "-")
                throw ValidationError("SDP TOP column must be + or -");
            if (r[5] != "+" && r[5] != "-")
                throw ValidationError("SDP PRED column must be + or -");
            if (r[4] == "+")
                rec.graph.top_nodes.push_back(static_cast<int>(i));
            for (std::size_t k = 0; k < preds.size(); ++k) {
                const std::string& cell = r[7 + k];
                if (cell == "_")
                    continue;
                rec.graph.edges.push_back(
                    {preds[k], static_cast<int>(i), relation_for(cell, corpus.relations, fixed)});
            }
        }
        std::sort(rec.graph.edges.begin(), rec.graph.edges.end());
        rec.graph = validate_graph(std::move(rec.graph), corpus.relations);
        corpus.records.push_back(std::move(rec));
        rows.clear();
        pending_id.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#' && rows.empty()) {
            pending_id = line.substr(1);
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() < 7)
            throw ValidationError("SDP line " + std::to_string(line_no) +
                                  ": malformed row arity (fewer than 7 columns)");
        rows.push_back(std::move(cols));
    }
    flush();
    return corpus;
}

Corpus read_sdp(const std::string& path)
{
    auto in = open_in(path);
    return parse_sdp(in, nullptr);
}

Corpus read_sdp(const std::string& path, const RelationVocab& fixed)
{
    auto in = open_in(path);
    return parse_sdp(in, &fixed);
}

void format_sdp(std::ostream& out, const Corpus& corpus)
{
    auto col = [](const std::string& s) { return s.empty() ? std::string("_") : s; };
    for (const auto& rec : corpus.records) {
        const auto& g = rec.graph;
        const int n = g.num_nodes;
        if (static_cast<int>(rec.sentence.tokens.size()) != n)
            throw ValidationError("SDP output needs one token per graph node");
        std::vector<bool> is_pred(static_cast<std::size_t>(n), false);
        for (int i = 0; i < n; ++i)
            is_pred[static_cast<std::size_t>(i)] = rec.sentence.tokens[static_cast<std::size_t>(i)].predicate;
        for (const Edge& e : g.edges)
            is_pred[static_cast<std::size_t>(e.source)] = true;
        std::vector<int> preds;
        for (int i = 0; i < n; ++i)
            if (is_pred[static_cast<std::size_t>(i)])
                preds.push_back(i);
        std::map<std::pair<int, int>, std::string> cell;
        for (const Edge& e : g.edges)
            if (!cell.emplace(std::pair{e.source, e.target}, corpus.relations.name(e.relation)).second)
                throw ValidationError("SDP cannot represent two labels on one node pair");
        std::vector<bool> top(static_cast<std::size_t>(n), false);
        for (int t : g.top_nodes)
            top[static_cast<std::size_t>(t)] = true;

        if (!rec.sentence.id.empty())
            out << '#' << rec.sentence.id << '\n';
        for (int i = 0; i < n; ++i) {
            const Token& tok = rec.sentence.tokens[static_cast<std::size_t>(i)];
            out << (i + 1) << '\t' << tok.form << '\t' << col(tok.lemma) << '\t' << col(tok.pos)
                << '\t' << (top[static_cast<std::size_t>(i)] ? '+' : '-') << '\t'
                << (is_pred[static_cast<std::size_t>(i)] ? '+' : '-') << '\t' << col(tok.frame);
            for (int p : preds) {
                auto it = cell.find({p, i});
                out << '\t' << (it == cell.end() ? std::string("_") : it->second);
            }
            out << '\n';
        }
        out << '\n';
    }
}

void write_sdp(const std::string& path, const Corpus& corpus)
{
    auto out = open_out(path);
    format_sdp(out, corpus);
}

// --- CoNLL trees ---------------------------------------------------------------

Corpus parse_dependency_trees(std::istream& in)
{
    Corpus corpus;
    std::vector<std::vector<std::string>> rows;
    std::string pending_id;

    auto flush = [&]() {
        if (rows.empty())
            return;
        CorpusRecord rec;
        std::vector<std::string> forms;
        DependencyTree tree;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const int id = parse_int(r[0], "CoNLL ID");
            if (id <= static_cast<int>(i))
                throw ValidationError("token " + std::to_string(id) + " has multiple heads");
            if (id != static_cast<int>(i) + 1)
                throw ValidationError("CoNLL IDs must run 1..n within a sentence");
            forms.push_back(r[1]);
            tree.heads.push_back(parse_int(r[6], "CoNLL HEAD"));
            tree.labels.push_back(r[7]);
        }
        check_tree(tree);
        rec.sentence = sentence_from_forms(forms);
        rec.sentence.id = pending_id;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rec.sentence.tokens[i].lemma = rows[i][2];
            rec.sentence.tokens[i].pos = rows[i][3];
        }
        rec.graph = tree_to_graph(tree, corpus.relations);
        rec.tree = std::move(tree);
        corpus.records.push_back(std::move(rec));
        rows.clear();
        pending_id.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            if (rows.empty())
                pending_id = line.substr(1);
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() < 8)
            throw ValidationError("CoNLL row needs at least 8 columns");
        // multiword ranges and empty nodes carry no head
        if (cols[0].find_first_of("-.") != std::string::npos)
            continue;
        rows.push_back(std::move(cols));
    }
    flush();
    return corpus;
}

Corpus read_dependency_trees(const std::string& path)
{
    auto in = open_in(path);
    return parse_dependency_trees(in);
}

// --- canonical JSONL -----------------------------------------------------------

std::string encode_f32(const num::Matrix& m)
{
    return encode_as<float>(m);
}

num::Matrix decode_f32(const std::string& b64, Eigen::Index rows, Eigen::Index cols)
{
    return decode_as<float>(b64, rows, cols);
}

std::string encode_f64(const num::Matrix& m)
{
    return encode_as<double>(m);
}

num::Matrix decode_f64(const std::string& b64, Eigen::Index rows, Eigen::Index cols)
{
    return decode_as<double>(b64, rows, cols);
}

json record_to_json(const CorpusRecord& r, const RelationVocab& vocab)
{
    json j;
    if (!r.sentence.id.empty())
        j["id"] = r.sentence.id;
    j["text"] = r.sentence.text;
    json toks = json::array();
    for (const Token& t : r.sentence.tokens) {
        json tj{{"form", t.form}, {"start", t.start}, {"end", t.end}};
        if (!t.lemma.empty())
            tj["lemma"] = t.lemma;
        if (!t.pos.empty())
            tj["pos"] = t.pos;
        if (!t.frame.empty())
            tj["frame"] = t.frame;
        if (t.predicate)
            tj["pred"] = true;
        toks.push_back(std::move(tj));
    }
    j["tokens"] = std::move(toks);
    json edges = json::array();
    for (const Edge& e : r.graph.edges)
        edges.push_back(json::array({e.source, e.target, vocab.name(e.relation)}));
    j["edges"] = std::move(edges);
    j["tops"] = r.graph.top_nodes;
    if (r.graph.num_nodes != static_cast<int>(r.sentence.tokens.size()))
        j["num_nodes"] = r.graph.num_nodes;
    if (r.embedding) {
        const auto& e = *r.embedding;
        json pieces = json::array();
        for (const Wordpiece& p : e.pieces) {
            json pj{{"start", p.start}, {"end", p.end}};
            if (!p.text.empty())
                pj["text"] = p.text;
            pieces.push_back(std::move(pj));
        }
        j["pieces"] = std::move(pieces);
        j["vectors"] = encode_f32(e.vectors);
        j["pooled"] = encode_f32(e.pooled);
        j["dim"] = e.dim;
    }
    if (r.tree) {
        j["heads"] = r.tree->heads;
        j["deprels"] = r.tree->labels;
    }
    if (r.label)
        j["label"] = *r.label;
    if (!r.category.empty())
        j["category"] = r.category;
    return j;
}

EmbeddingSequence embedding_from_json(const json& j)
{
    for (const char* key : {"pieces", "vectors", "pooled", "dim"})
        if (!j.contains(key))
            throw ValidationError(std::string("embedding record lacks '") + key + "'");
    EmbeddingSequence e;
    e.dim = j.at("dim").get<int>();
    if (e.dim <= 0)
        throw ValidationError("embedding dim must be positive");
    for (const auto& pj : j.at("pieces"))
        e.pieces.push_back({pj.value("text", std::string{}), pj.at("start").get<int>(),
                            pj.at("end").get<int>()});
    const auto rows = static_cast<Eigen::Index>(e.pieces.size());
    const auto payload = j.at("vectors").get<std::string>();
    const auto bytes = b64_decode(payload).size();
    if (bytes != static_cast<std::size_t>(rows * e.dim) * sizeof(float))
        throw ValidationError("vector payload holds " + std::to_string(bytes / sizeof(float)) +
                              " values but " + std::to_string(rows) + " pieces of dim " +
                              std::to_string(e.dim) + " are declared");
    e.vectors = decode_f32(payload, rows, e.dim);
    e.pooled = decode_f32(j.at("pooled").get<std::string>(), 1, e.dim);
    int prev_end = 0;
    for (const Wordpiece& p : e.pieces) {
        if (p.special())
            continue;
        if (p.start < prev_end || p.end < p.start)
            throw ValidationError("wordpiece offsets are not monotonic");
        prev_end = p.end;
    }
    return e;
}

CorpusRecord record_from_json(const json& j, RelationVocab& vocab, bool grow)
{
    CorpusRecord r;
    r.sentence.id = j.value("id", std::string{});
    r.sentence.text = j.at("text").get<std::string>();
    int prev_end = 0;
    for (const auto& tj : j.value("tokens", json::array())) {
        Token t;
        t.form = tj.at("form").get<std::string>();
        t.start = tj.at("start").get<int>();
        t.end = tj.at("end").get<int>();
        t.lemma = tj.value("lemma", std::string{});
        t.pos = tj.value("pos", std::string{});
        t.frame = tj.value("frame", std::string{});
        t.predicate = tj.value("pred", false);
        if (t.start < prev_end || t.end < t.start ||
            t.end > static_cast<int>(r.sentence.text.size()))
            throw ValidationError("token offsets must be monotonic and inside the text");
        prev_end = t.end;
        r.sentence.tokens.push_back(std::move(t));
    }
    r.graph.num_nodes = j.value("num_nodes", static_cast<int>(r.sentence.tokens.size()));
    for (const auto& ej : j.value("edges", json::array())) {
        const auto label = ej.at(2).get<std::string>();
        const int rel = grow ? vocab.add(label) : vocab.index(label);
        r.graph.edges.push_back({ej.at(0).get<int>(), ej.at(1).get<int>(), rel});
    }
    r.graph.top_nodes = j.value("tops", std::vector<int>{});
    r.graph = validate_graph(std::move(r.graph), vocab);
    if (j.contains("pieces"))
        r.embedding = embedding_from_json(j);
    if (j.contains("heads")) {
        DependencyTree t{j.at("heads").get<std::vector<int>>(),
                         j.at("deprels").get<std::vector<std::string>>()};
        if (t.heads.size() != r.sentence.tokens.size())
            throw ValidationError("tree size differs from token count");
        check_tree(t);
        r.tree = std::move(t);
    }
    if (j.contains("label"))
        r.label = j.at("label").get<int>();
    r.category = j.value("category", std::string{});
    return r;
}

namespace {

Corpus read_jsonl_impl(const std::string& path, const RelationVocab* fixed)
{
    auto in = open_in(path);
    Corpus c;
    if (fixed)
        c.relations = *fixed;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty())
            continue;
        try {
            c.records.push_back(record_from_json(json::parse(line), c.relations, fixed == nullptr));
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

} // namespace

Corpus read_jsonl(const std::string& path)
{
    return read_jsonl_impl(path, nullptr);
}

Corpus read_jsonl(const std::string& path, const RelationVocab& fixed)
{
    return read_jsonl_impl(path, &fixed);
}

void write_jsonl(const std::string& path, const Corpus& corpus)
{
    auto out = open_out(path);
    for (const auto& r : corpus.records)
        out << record_to_json(r, corpus.relations).dump() << '\n';
}

std::vector<EmbeddingSequence> read_embeddings(const std::string& path)
{
    auto in = open_in(path);
    std::vector<EmbeddingSequence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty())
            continue;
        try {
            auto e = embedding_from_json(json::parse(line));
            if (!out.empty() && e.dim != out.front().dim)
                throw ValidationError("embedding dim mismatch: " + std::to_string(e.dim) +
                                      " vs " + std::to_string(out.front().dim));
            out.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// --- task datasets -------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& v)
{
    if (v.empty())
        return {};
    return split(v, ',');
}

std::string join_list(const std::vector<std::string>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out += ',';
        out += v[i];
    }
    return out;
}

} // namespace

TaskSchema parse_schema_directive(const std::string& line)
{
    if (line.empty() || line[0] != '#')
        throw ValidationError("task file must start with a '# type=... pair=...' directive");
    TaskSchema s;
    bool have_type = false, have_pair = false;
    std::istringstream is(line.substr(1));
    std::string kv;
    while (is >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ValidationError("malformed directive entry: " + kv);
        const auto key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "type") {
            if (val == "classification")
                s.type = TaskType::classification;
            else if (val == "regression")
                s.type = TaskType::regression;
            else
                throw ValidationError("unknown task type: " + val);
            have_type = true;
        } else if (key == "pair") {
            if (val != "true" && val != "false")
                throw ValidationError("pair must be true or false");
            s.pair = val == "true";
            have_pair = true;
        } else if (key == "labels") {
            s.labels = split_list(val);
        } else if (key == "categories") {
            s.categories = split_list(val);
        } else {
            throw ValidationError("unknown directive key: " + key);
        }
    }
    if (!have_type || !have_pair)
        throw ValidationError("directive must declare type and pair");
    if (s.type == TaskType::classification && s.labels.size() < 2)
        throw ValidationError("classification tasks declare at least two labels");
    return s;
}

std::string format_schema_directive(const TaskSchema& s)
{
    std::string out = "# type=";
    out += s.type == TaskType::classification ? "classification" : "regression";
    out += s.pair ? " pair=true" : " pair=false";
    if (s.type == TaskType::classification)
        out += " labels=" + join_list(s.labels);
    if (!s.categories.empty())
        out += " categories=" + join_list(s.categories);
    return out;
}

std::string sidecar_path(const std::string& tsv_path)
{
    return tsv_path + ".sidecar.jsonl";
}

namespace {

TaskSide side_from_record(CorpusRecord rec, bool has_graph)
{
    TaskSide s;
    s.sentence = std::move(rec.sentence);
    if (has_graph)
        s.graph = std::move(rec.graph);
    s.embedding = std::move(rec.embedding);
    return s;
}

// Tokens are maximal runs of non-space characters; a sidecar replaces them.
Sentence whitespace_sentence(const std::string& text)
{
    Sentence s;
    s.text = text;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i > start) {
            Token t;
            t.form = text.substr(start, i - start);
            t.start = static_cast<int>(start);
            t.end = static_cast<int>(i);
            s.tokens.push_back(std::move(t));
        }
    }
    return s;
}

} // namespace

TaskDataset read_task_dataset(const std::string& path, const RelationVocab* fixed)
{
    auto in = open_in(path);
    TaskDataset data;
    if (fixed)
        data.relations = *fixed;
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path + ": empty task file");
    strip_cr(line);
    data.schema = parse_schema_directive(line);
    if (!std::getline(in, line))
        throw ValidationError(path + ": missing header row");
    strip_cr(line);
    const auto header = split(line, '\t');
    auto col = [&](const std::string& name) -> int {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int ca = col("sentence_a"), cb = col("sentence_b"), cl = col("label"),
              cc = col("category");
    if (ca < 0 || cl < 0)
        throw ValidationError(path + ": header must name sentence_a and label columns");
    if (data.schema.pair && cb < 0)
        throw ValidationError(path + ": missing sentence_b where schema requires it");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty())
            continue;
        const auto cols = split(line, '\t');
        if (cols.size() != header.size())
            throw ValidationError(path + ": row " + std::to_string(row) + " has " +
                                  std::to_string(cols.size()) + " columns, header has " +
                                  std::to_string(header.size()));
        TaskExample ex;
        ex.a.sentence = whitespace_sentence(cols[static_cast<std::size_t>(ca)]);
        if (data.schema.pair) {
            if (cols[static_cast<std::size_t>(cb)].empty())
                throw ValidationError(path + ": row " + std::to_string(row) +
                                      " is missing sentence_b");
            TaskSide b;
            b.sentence = whitespace_sentence(cols[static_cast<std::size_t>(cb)]);
            ex.b = std::move(b);
        }
        const std::string& label = cols[static_cast<std::size_t>(cl)];
        if (data.schema.type == TaskType::classification) {
            auto it = std::find(data.schema.labels.begin(), data.schema.labels.end(), label);
            if (it == data.schema.labels.end())
                throw ValidationError(path + ": unknown label '" + label + "' at row " +
                                      std::to_string(row));
            ex.label = static_cast<int>(it - data.schema.labels.begin());
        } else {
            try {
                std::size_t pos = 0;
                ex.target = std::stod(label, &pos);
                if (pos != label.size() || !std::isfinite(ex.target))
                    throw std::invalid_argument(label);
            } catch (const std::exception&) {
                throw ValidationError(path + ": regression label '" + label +
                                      "' is not a real number");
            }
        }
        if (cc >= 0) {
            ex.category = cols[static_cast<std::size_t>(cc)];
            const auto& cats = data.schema.categories;
            if (!cats.empty() && !ex.category.empty() &&
                std::find(cats.begin(), cats.end(), ex.category) == cats.end())
                throw ValidationError(path + ": category '" + ex.category +
                                      "' is not declared");
        }
        data.examples.push_back(std::move(ex));
        ++row;
    }

    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        auto sin = open_in(side);
        std::size_t line_no = 0;
        while (std::getline(sin, line)) {
            ++line_no;
            strip_cr(line);
            if (line.empty())
                continue;
            try {
                const json j = json::parse(line);
                const auto r = j.at("row").get<std::size_t>();
                if (r >= data.examples.size())
                    throw ValidationError("sidecar row " + std::to_string(r) + " out of range");
                TaskExample& ex = data.examples[r];
                auto a = record_from_json(j.at("a"), data.relations, fixed == nullptr);
                if (a.sentence.text != ex.a.sentence.text)
                    throw ValidationError("sidecar text differs from TSV at row " +
                                          std::to_string(r));
                ex.a = side_from_record(std::move(a), j.at("a").contains("edges"));
                if (j.contains("b")) {
                    if (!ex.b)
                        throw ValidationError("sidecar has sentence_b for a single-sentence row");
                    auto b = record_from_json(j.at("b"), data.relations, fixed == nullptr);
                    if (b.sentence.text != ex.b->sentence.text)
                        throw ValidationError("sidecar sentence_b differs from TSV at row " +
                                              std::to_string(r));
                    ex.b = side_from_record(std::move(b), j.at("b").contains("edges"));
                }
            } catch (const json::exception& e) {
                throw ValidationError(side + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    return data;
}

TaskDataset read_task_dataset(const std::string& path, const TaskSchema& expected,
                              const RelationVocab* fixed)
{
    auto data = read_task_dataset(path, fixed);
    if (data.schema.type != expected.type || data.schema.pair != expected.pair)
        throw ValidationError(path + ": task type or pairing differs from the expected schema");
    if (data.schema.type == TaskType::classification && data.schema.labels != expected.labels)
        throw ValidationError(path + ": label list differs from the expected schema");
    return data;
}

void write_task_dataset(const std::string& path, const TaskDataset& data)
{
    auto clean = [](const std::string& s) {
        if (s.find_first_of("\t\n\r") != std::string::npos)
            throw ValidationError("task text may not contain tabs or newlines");
        return s;
    };
    auto out = open_out(path);
    out << format_schema_directive(data.schema) << '\n';
    const bool with_category =
        !data.schema.categories.empty() ||
        std::any_of(data.examples.begin(), data.examples.end(),
                    [](const TaskExample& e) { return !e.category.empty(); });
    out << "sentence_a";
    if (data.schema.pair)
        out << "\tsentence_b";
    out << "\tlabel";
    if (with_category)
        out << "\tcategory";
    out << '\n';
    bool any_side = false;
    for (const auto& ex : data.examples) {
        out << clean(ex.a.sentence.text);
        if (data.schema.pair)
            out << '\t' << clean(ex.b ? ex.b->sentence.text : std::string{});
        if (data.schema.type == TaskType::classification) {
            out << '\t' << data.schema.labels.at(static_cast<std::size_t>(ex.label));
        } else {
            std::ostringstream v;
            v.precision(17);
            v << ex.target;
            out << '\t' << v.str();
        }
        if (with_category)
            out << '\t' << clean(ex.category);
        out << '\n';
        any_side = any_side || ex.a.graph.has_value() || ex.a.embedding.has_value();
    }
    if (!any_side)
        return;
    auto side = open_out(sidecar_path(path));
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        const auto& ex = data.examples[i];
        auto to_json = [&](const TaskSide& s) {
            CorpusRecord r;
            r.sentence = s.sentence;
            if (s.graph)
                r.graph = *s.graph;
            else
                r.graph.num_nodes = static_cast<int>(s.sentence.tokens.size());
            r.embedding = s.embedding;
            json j = record_to_json(r, data.relations);
            if (!s.graph) {
                j.erase("edges");
                j.erase("tops");
            }
            return j;
        };
        json j{{"row", i}, {"a", to_json(ex.a)}};
        if (ex.b)
            j["b"] = to_json(*ex.b);
        side << j.dump() << '\n';
    }
}

} // namespace sift
